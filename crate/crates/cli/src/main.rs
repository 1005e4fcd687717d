//! `evbench` command-line front end.

mod diagnose;
mod error;
mod evaluate;
mod focus;
mod io;
mod svg;
mod synth;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use evbench_core::alignment::AssociationMode;
use evbench_core::metrics::{Aggregation, WeightScheme};
use evbench_core::report::AlignMode;

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "evbench", version, about = "Event-camera dataset evaluation and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score estimated trajectories against ground truth.
    Evaluate(evaluate::EvaluateArgs),
    /// Event-stream diagnostics: stereo balance, windowed counts, time maps.
    Diagnose(diagnose::DiagnoseArgs),
    /// Maximum reliably measurable stereo depth.
    DepthBound(diagnose::DepthBoundArgs),
    /// Optical-flow difficulty curve and AUC.
    FlowDifficulty(diagnose::FlowArgs),
    /// Generate synthetic fixtures.
    #[command(subcommand)]
    Synth(synth::SynthCommand),
    /// Focus-assist service.
    #[command(subcommand)]
    Focus(focus::FocusCommand),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AlignArg {
    Se3,
    Sim3,
    None,
}

impl From<AlignArg> for AlignMode {
    fn from(a: AlignArg) -> Self {
        match a {
            AlignArg::Se3 => AlignMode::Se3,
            AlignArg::Sim3 => AlignMode::Sim3,
            AlignArg::None => AlignMode::None,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AggArg {
    Rms,
    PaperEq2,
}

impl From<AggArg> for Aggregation {
    fn from(a: AggArg) -> Self {
        match a {
            AggArg::Rms => Aggregation::Rms,
            AggArg::PaperEq2 => Aggregation::PaperEq2,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum WeightArg {
    Uniform,
    Velocity,
    Combined,
}

impl From<WeightArg> for WeightScheme {
    fn from(w: WeightArg) -> Self {
        match w {
            WeightArg::Uniform => WeightScheme::Uniform,
            WeightArg::Velocity => WeightScheme::Velocity,
            WeightArg::Combined => WeightScheme::Combined,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AssociationArg {
    Nearest,
    Interpolate,
}

impl From<AssociationArg> for AssociationMode {
    fn from(a: AssociationArg) -> Self {
        match a {
            AssociationArg::Nearest => AssociationMode::Nearest,
            AssociationArg::Interpolate => AssociationMode::Interpolate,
        }
    }
}

/// Output flags shared by every report-producing subcommand.
#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// JSON report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for SVG plots.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Evaluate(a) => evaluate::run(a),
        Command::Diagnose(a) => diagnose::run(a),
        Command::DepthBound(a) => diagnose::run_depth_bound(a),
        Command::FlowDifficulty(a) => diagnose::run_flow(a),
        Command::Synth(c) => synth::run(c),
        Command::Focus(c) => focus::run(c),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
