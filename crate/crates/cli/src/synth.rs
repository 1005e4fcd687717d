use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use evbench_core::ingest::{write_events_binary, write_events_csv, write_trajectory, write_velocities};
use evbench_core::synth::{
    perturb_trajectory, synth_event_rate_stream, synth_trajectory, MotionPattern, NoiseModel,
    PatternKind, RateProfile,
};

use crate::error::CliError;
use crate::io::create;

#[derive(Subcommand, Debug)]
pub enum SynthCommand {
    /// Analytic trajectory with exact velocities.
    Trajectory(TrajectoryArgs),
    /// Poisson event stream with a piecewise-constant rate.
    Events(EventsArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PatternArg {
    Line,
    Circle,
    Lemniscate,
    SpinCircle,
}

#[derive(Args, Debug)]
pub struct TrajectoryArgs {
    #[arg(long, value_enum)]
    pub pattern: PatternArg,
    /// Linear speed for `line`, m/s.
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
    /// Circle radius or lemniscate half-width, m.
    #[arg(long, default_value_t = 2.0)]
    pub radius: f64,
    /// Angular rate along the path, rad/s.
    #[arg(long, default_value_t = 1.0)]
    pub rate: f64,
    /// Body spin for `spin-circle`, rad/s.
    #[arg(long, default_value_t = 3.0)]
    pub spin: f64,
    #[arg(long, default_value_t = 10.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 120.0)]
    pub hz: f64,
    /// Ground-truth trajectory output (TUM text).
    #[arg(long)]
    pub out: PathBuf,
    /// Exact velocities output.
    #[arg(long)]
    pub vel_out: Option<PathBuf>,
    /// Noisy copy of the trajectory, for use as an estimate.
    #[arg(long)]
    pub est_out: Option<PathBuf>,
    /// Velocity output scaled by `1 + vel_error`, for use as an estimate.
    #[arg(long)]
    pub est_vel_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub vel_error: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise_pos: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise_rot: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EventFormatArg {
    Binary,
    Csv,
}

#[derive(Args, Debug)]
pub struct EventsArgs {
    /// Constant rate, events/s; ignored when `--step-to` is given.
    #[arg(long, default_value_t = 1000.0)]
    pub rate: f64,
    /// Rate after the step, events/s.
    #[arg(long)]
    pub step_to: Option<f64>,
    /// Step time, seconds.
    #[arg(long, default_value_t = 5.0)]
    pub step_at: f64,
    #[arg(long, default_value_t = 10.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 346)]
    pub width: u16,
    #[arg(long, default_value_t = 260)]
    pub height: u16,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "binary")]
    pub format: EventFormatArg,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(c: SynthCommand) -> Result<(), CliError> {
    match c {
        SynthCommand::Trajectory(a) => trajectory(a),
        SynthCommand::Events(a) => events(a),
    }
}

fn trajectory(a: TrajectoryArgs) -> Result<(), CliError> {
    let kind = match a.pattern {
        PatternArg::Line => PatternKind::Line { speed: a.speed },
        PatternArg::Circle => PatternKind::Circle {
            radius: a.radius,
            rate: a.rate,
        },
        PatternArg::Lemniscate => PatternKind::Lemniscate {
            scale: a.radius,
            rate: a.rate,
        },
        PatternArg::SpinCircle => PatternKind::SpinCircle {
            radius: a.radius,
            rate: a.rate,
            spin: a.spin,
        },
    };
    let s = synth_trajectory(&MotionPattern::new(kind, a.duration, a.hz)).map_err(CliError::other)?;
    write_trajectory(&s.trajectory, create(&a.out)?).map_err(CliError::other)?;
    if let Some(p) = &a.vel_out {
        write_velocities(&s.velocities, create(p)?).map_err(CliError::other)?;
    }
    if let Some(p) = &a.est_out {
        let noise = NoiseModel {
            position_sigma: a.noise_pos,
            rotation_sigma: a.noise_rot,
            seed: a.seed,
        };
        let est = perturb_trajectory(&s.trajectory, &noise).map_err(CliError::other)?;
        write_trajectory(&est, create(p)?).map_err(CliError::other)?;
    }
    if let Some(p) = &a.est_vel_out {
        let k = 1.0 + a.vel_error;
        let scaled: Vec<_> = s
            .velocities
            .iter()
            .map(|v| evbench_core::metrics::VelocitySample::new(v.t, v.v * k, v.omega))
            .collect();
        write_velocities(&scaled, create(p)?).map_err(CliError::other)?;
    }
    Ok(())
}

fn events(a: EventsArgs) -> Result<(), CliError> {
    let profile = match a.step_to {
        Some(after) => RateProfile::step(a.rate, after, a.step_at, a.duration),
        None => RateProfile::constant(a.rate, a.duration),
    };
    let stream =
        synth_event_rate_stream(&profile, a.width, a.height, a.seed).map_err(CliError::other)?;
    let w = create(&a.out)?;
    match a.format {
        EventFormatArg::Binary => write_events_binary(&stream, w).map_err(CliError::other),
        EventFormatArg::Csv => write_events_csv(&stream, w).map_err(CliError::other),
    }
}
