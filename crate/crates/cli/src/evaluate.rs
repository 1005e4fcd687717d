use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use evbench_core::metrics::{DEFAULT_SPEED_FLOOR, DEFAULT_XI_MAX, DEFAULT_XI_POINTS};
use evbench_core::report::{evaluate, EvalConfig, MetricReport, VelocityInputs};
use rayon::prelude::*;

use crate::error::{require_file, CliError};
use crate::io::{emit_json, read_trajectory, read_velocities};
use crate::{svg, AggArg, AlignArg, AssociationArg, OutputArgs, WeightArg};

#[derive(Args, Debug, Clone)]
pub struct EvaluateArgs {
    /// Ground-truth trajectory (TUM text).
    #[arg(long)]
    pub gt: PathBuf,
    /// Estimated trajectory; repeat to evaluate several sequences in parallel.
    #[arg(long, required = true)]
    pub est: Vec<PathBuf>,
    /// Estimated velocities, one per `--est` in the same order.
    #[arg(long)]
    pub est_vel: Vec<PathBuf>,
    /// Ground-truth velocities; derived from the poses when omitted.
    #[arg(long)]
    pub gt_vel: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "se3")]
    pub align: AlignArg,
    /// Headline ATE aggregation (both are always reported).
    #[arg(long, value_enum, default_value = "rms")]
    pub agg: AggArg,
    /// Headline AUC weighting (all are always reported).
    #[arg(long, value_enum, default_value = "uniform")]
    pub weights: WeightArg,
    #[arg(long, default_value_t = DEFAULT_XI_MAX)]
    pub xi_max: f64,
    #[arg(long, default_value_t = DEFAULT_XI_POINTS)]
    pub xi_points: usize,
    /// Ground-truth speeds below this (m/s) are excluded from RVE.
    #[arg(long, default_value_t = DEFAULT_SPEED_FLOOR)]
    pub speed_floor: f64,
    #[arg(long, value_enum, default_value = "interpolate")]
    pub association: AssociationArg,
    /// Association tolerance in seconds; 1.5x the median GT spacing by default.
    #[arg(long)]
    pub max_dt: Option<f64>,
    /// RPE step in seconds; consecutive samples by default.
    #[arg(long)]
    pub rpe_delta: Option<f64>,
    /// Half-width of the velocity smoothing window, in samples.
    #[arg(long, default_value_t = 1)]
    pub smoothing: usize,
    /// Sequence name recorded in the report; the estimate file stem by default.
    #[arg(long)]
    pub sequence: Option<String>,
    /// Recorded for provenance; evaluation itself is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn config_for(a: &EvaluateArgs, index: usize) -> EvalConfig {
    let est = &a.est[index];
    let mut inputs = BTreeMap::new();
    inputs.insert("gt".to_owned(), a.gt.display().to_string());
    inputs.insert("est".to_owned(), est.display().to_string());
    if let Some(p) = &a.gt_vel {
        inputs.insert("gt_vel".to_owned(), p.display().to_string());
    }
    if let Some(p) = a.est_vel.get(index) {
        inputs.insert("est_vel".to_owned(), p.display().to_string());
    }
    let sequence = match (&a.sequence, a.est.len()) {
        (Some(name), 1) => name.clone(),
        (Some(name), _) => format!("{name}/{index}"),
        (None, _) => est
            .file_stem()
            .map_or_else(|| est.display().to_string(), |s| s.to_string_lossy().into_owned()),
    };
    EvalConfig {
        sequence,
        inputs,
        align: a.align.into(),
        association: a.association.into(),
        max_dt: a.max_dt,
        aggregation: a.agg.into(),
        weights: a.weights.into(),
        xi_max: a.xi_max,
        xi_points: a.xi_points,
        speed_floor: a.speed_floor,
        rpe_delta_s: a.rpe_delta,
        smoothing_halfwidth: a.smoothing,
        seed: a.seed,
    }
}

pub fn run(a: EvaluateArgs) -> Result<(), CliError> {
    if !a.est_vel.is_empty() && a.est_vel.len() != a.est.len() {
        return Err(CliError::other(format!(
            "{} --est-vel files for {} --est files",
            a.est_vel.len(),
            a.est.len()
        )));
    }
    if !(a.xi_max > 0.0) || a.xi_points < 2 {
        return Err(CliError::other("--xi-max must be positive and --xi-points at least 2"));
    }
    for p in std::iter::once(&a.gt)
        .chain(&a.est)
        .chain(&a.est_vel)
        .chain(&a.gt_vel)
    {
        require_file(p)?;
    }
    let gt = read_trajectory(&a.gt)?;
    let gt_vel = a.gt_vel.as_deref().map(read_velocities).transpose()?;

    let reports: Vec<MetricReport> = (0..a.est.len())
        .into_par_iter()
        .map(|i| {
            let est = read_trajectory(&a.est[i])?;
            let inputs = VelocityInputs {
                gt: gt_vel.clone(),
                est: a.est_vel.get(i).map(|p| read_velocities(p)).transpose()?,
            };
            Ok(evaluate(&gt, &est, &inputs, &config_for(&a, i))?)
        })
        .collect::<Result<_, CliError>>()?;

    if let Some(dir) = &a.output.svg {
        for r in &reports {
            svg::write_report_plots(dir, r)?;
        }
    }
    match reports.as_slice() {
        [single] => emit_json(single, a.output.out.as_deref()),
        many => emit_json(&many, a.output.out.as_deref()),
    }
}
