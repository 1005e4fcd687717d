//! End-to-end evaluation of an estimate against ground truth and the
//! serializable reports it produces.
//!
//! Units throughout: seconds, metres, radians.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{
    align_pairs, alignment_rmse, associate, default_max_dt, umeyama_align, AlignmentError,
    AssociatedPair, AssociationMode, SimilarityTransform,
};
use crate::diagnostics::{DepthBound, FlowDifficulty, StereoCountReport, WindowedCounts};
use crate::ingest::{Trajectory, TrajectorySample};
use crate::metrics::{
    aggregate, ate_series, curve_auc, delta_for_duration, derive_velocities, linspace,
    precision_curve, resample_velocities, rpe_series, rve_series, weights, Aggregation,
    ErrorSeries, MetricsError, PosePart, SeriesSummary, VelocitySample, WeightScheme,
    DEFAULT_SPEED_FLOOR, DEFAULT_XI_MAX, DEFAULT_XI_POINTS,
};

pub const REPORT_SCHEMA: &str = "evbench_report_v1";

pub const LOG_CONVENTION: &str = "SE(3) logarithm with exact closed-form inverse left Jacobian; \
pose error norm is the 2-norm of the stacked (rho, phi) twist";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignMode {
    #[default]
    Se3,
    Sim3,
    None,
}

/// Every knob of an evaluation run; echoed verbatim into the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub sequence: String,
    /// Input paths or other provenance supplied by the caller.
    pub inputs: BTreeMap<String, String>,
    pub align: AlignMode,
    pub association: AssociationMode,
    /// `None` selects 1.5× the median ground-truth spacing.
    pub max_dt: Option<f64>,
    /// Aggregation used for the headline ATE; both are always reported.
    pub aggregation: Aggregation,
    /// Weighting used for the headline AUC; all schemes are always reported.
    pub weights: WeightScheme,
    pub xi_max: f64,
    pub xi_points: usize,
    pub speed_floor: f64,
    /// RPE step in seconds; `None` uses consecutive samples.
    pub rpe_delta_s: Option<f64>,
    pub smoothing_halfwidth: usize,
    pub seed: Option<u64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            sequence: String::new(),
            inputs: BTreeMap::new(),
            align: AlignMode::Se3,
            association: AssociationMode::Interpolate,
            max_dt: None,
            aggregation: Aggregation::Rms,
            weights: WeightScheme::Uniform,
            xi_max: DEFAULT_XI_MAX,
            xi_points: DEFAULT_XI_POINTS,
            speed_floor: DEFAULT_SPEED_FLOOR,
            rpe_delta_s: None,
            smoothing_halfwidth: 1,
            seed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssociationSummary {
    pub mode: AssociationMode,
    pub max_dt: f64,
    pub est_samples: usize,
    pub gt_samples: usize,
    pub pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentSummary {
    pub mode: AlignMode,
    pub scale: f64,
    /// `[w, x, y, z]`.
    pub rotation_wxyz: [f64; 4],
    pub translation: [f64; 3],
    pub position_rmse: f64,
}

impl AlignmentSummary {
    fn new(mode: AlignMode, sim: &SimilarityTransform, rmse: f64) -> Self {
        let t = sim.pose.translation;
        Self {
            mode,
            scale: sim.scale,
            rotation_wxyz: sim.pose.rotation.wxyz(),
            translation: [t.x, t.y, t.z],
            position_rmse: rmse,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregatedError {
    pub rms: f64,
    pub paper_eq2: f64,
    pub stats: SeriesSummary,
}

impl AggregatedError {
    fn of(series: &ErrorSeries) -> Result<Self, MetricsError> {
        Ok(Self {
            rms: aggregate(series, Aggregation::Rms)?,
            paper_eq2: aggregate(series, Aggregation::PaperEq2)?,
            stats: series.summary().ok_or(MetricsError::EmptyInput)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseErrorSection {
    pub full_se3: AggregatedError,
    pub translation_only: AggregatedError,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RpeSection {
    pub delta_samples: usize,
    pub full_se3: AggregatedError,
    pub translation_only: AggregatedError,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveReport {
    pub weighting: WeightScheme,
    pub auc: f64,
    pub xi: Vec<f64>,
    pub s: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocitySource {
    File,
    Derived,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocitySection {
    pub gt_source: VelocitySource,
    pub est_source: VelocitySource,
    pub speed_floor: f64,
    pub samples: usize,
    pub excluded: usize,
    pub ave: Option<SeriesSummary>,
    pub rve: Option<SeriesSummary>,
    pub curves: Vec<CurveReport>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SeriesDump {
    pub t: Vec<f64>,
    pub ate_translation: Vec<f64>,
    pub ate_full: Vec<f64>,
    pub rpe_t: Vec<f64>,
    pub rpe_translation: Vec<f64>,
    pub rpe_full: Vec<f64>,
    pub rve_t: Vec<f64>,
    pub rve: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Headline {
    /// Translation-only ATE under the configured aggregation, metres.
    pub ate: f64,
    /// AUC under the configured weighting, if velocities were available.
    pub auc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub schema: String,
    pub config: EvalConfig,
    pub log_convention: String,
    pub headline: Headline,
    pub association: AssociationSummary,
    pub alignment: AlignmentSummary,
    pub ate: PoseErrorSection,
    pub rpe: Option<RpeSection>,
    pub velocity: Option<VelocitySection>,
    pub series: SeriesDump,
    pub warnings: Vec<String>,
}

impl MetricReport {
    pub fn curve(&self, scheme: WeightScheme) -> Option<&CurveReport> {
        self.velocity
            .as_ref()?
            .curves
            .iter()
            .find(|c| c.weighting == scheme)
    }
}

/// Optional externally supplied velocity series.
#[derive(Clone, Debug, Default)]
pub struct VelocityInputs {
    pub gt: Option<Vec<VelocitySample>>,
    /// In the estimator's frame; rotated (and scaled) by the alignment.
    pub est: Option<Vec<VelocitySample>>,
}

/// Associates, aligns and scores `est` against `gt`.
pub fn evaluate(
    gt: &Trajectory,
    est: &Trajectory,
    velocities: &VelocityInputs,
    config: &EvalConfig,
) -> Result<MetricReport, EvalError> {
    let mut warnings = Vec::new();
    let max_dt = match config.max_dt {
        Some(dt) => dt,
        None => default_max_dt(gt).unwrap_or(0.0),
    };
    let raw_pairs = associate(est, gt, max_dt, config.association)?;
    if raw_pairs.len() < est.len() {
        warnings.push(format!(
            "{} of {} estimate samples had no ground truth within {max_dt} s",
            est.len() - raw_pairs.len(),
            est.len()
        ));
    }

    let sim = match config.align {
        AlignMode::None => SimilarityTransform::identity(),
        AlignMode::Se3 => umeyama_align(&raw_pairs, false)?,
        AlignMode::Sim3 => umeyama_align(&raw_pairs, true)?,
    };
    let pairs = align_pairs(&raw_pairs, &sim);
    let alignment = AlignmentSummary::new(config.align, &sim, alignment_rmse(&raw_pairs, &sim));

    let ate_t = ate_series(&pairs, PosePart::TranslationOnly);
    let ate_f = ate_series(&pairs, PosePart::FullSe3);
    let ate = PoseErrorSection {
        full_se3: AggregatedError::of(&ate_f)?,
        translation_only: AggregatedError::of(&ate_t)?,
    };

    let times: Vec<f64> = pairs.iter().map(|p| p.t).collect();
    let delta = config
        .rpe_delta_s
        .map_or(1, |s| delta_for_duration(&times, s));
    let (rpe, rpe_t, rpe_f) = match (
        rpe_series(&pairs, delta, PosePart::TranslationOnly),
        rpe_series(&pairs, delta, PosePart::FullSe3),
    ) {
        (Ok(t), Ok(f)) => (
            Some(RpeSection {
                delta_samples: delta,
                full_se3: AggregatedError::of(&f)?,
                translation_only: AggregatedError::of(&t)?,
            }),
            Some(t),
            Some(f),
        ),
        (Err(e), _) | (_, Err(e)) => {
            warnings.push(format!("RPE skipped: {e}"));
            (None, None, None)
        }
    };

    let (velocity, rve) = match velocity_section(gt, &pairs, &sim, velocities, config, &mut warnings)
    {
        Ok(v) => v,
        Err(e) => {
            warnings.push(format!("velocity metrics skipped: {e}"));
            (None, None)
        }
    };

    let headline = Headline {
        ate: match config.aggregation {
            Aggregation::Rms => ate.translation_only.rms,
            Aggregation::PaperEq2 => ate.translation_only.paper_eq2,
        },
        auc: velocity.as_ref().and_then(|v: &VelocitySection| {
            v.curves
                .iter()
                .find(|c| c.weighting == config.weights)
                .map(|c| c.auc)
        }),
    };

    let series = SeriesDump {
        t: times,
        ate_translation: ate_t.value,
        ate_full: ate_f.value,
        rpe_t: rpe_t.as_ref().map(|s| s.t.clone()).unwrap_or_default(),
        rpe_translation: rpe_t.map(|s| s.value).unwrap_or_default(),
        rpe_full: rpe_f.map(|s| s.value).unwrap_or_default(),
        rve_t: rve.as_ref().map(|s| s.t.clone()).unwrap_or_default(),
        rve: rve.map(|s| s.value).unwrap_or_default(),
    };

    Ok(MetricReport {
        schema: REPORT_SCHEMA.to_owned(),
        config: config.clone(),
        log_convention: LOG_CONVENTION.to_owned(),
        headline,
        association: AssociationSummary {
            mode: config.association,
            max_dt,
            est_samples: est.len(),
            gt_samples: gt.len(),
            pairs: pairs.len(),
        },
        alignment,
        ate,
        rpe,
        velocity,
        series,
        warnings,
    })
}

fn velocity_section(
    gt: &Trajectory,
    pairs: &[AssociatedPair],
    sim: &SimilarityTransform,
    inputs: &VelocityInputs,
    config: &EvalConfig,
    warnings: &mut Vec<String>,
) -> Result<(Option<VelocitySection>, Option<ErrorSeries>), MetricsError> {
    let times: Vec<f64> = pairs.iter().map(|p| p.t).collect();
    let (gt_source, v_gt) = match &inputs.gt {
        Some(v) => (VelocitySource::File, resample_velocities(v, &times)?),
        None => {
            let d = derive_velocities(gt, config.smoothing_halfwidth)?;
            warnings.extend(d.warnings.iter().map(|w| format!("ground truth: {w}")));
            (VelocitySource::Derived, resample_velocities(&d.samples, &times)?)
        }
    };
    let (est_source, v_est) = match &inputs.est {
        Some(v) => {
            let rotated: Vec<VelocitySample> = v
                .iter()
                .map(|s| {
                    VelocitySample::new(s.t, sim.pose.rotation.rotate(&s.v) * sim.scale, s.omega)
                })
                .collect();
            (VelocitySource::File, resample_velocities(&rotated, &times)?)
        }
        None => {
            let aligned = Trajectory::new(
                pairs
                    .iter()
                    .map(|p| TrajectorySample::new(p.t, p.pose_est))
                    .collect(),
            )
            .expect("pair times are strictly increasing");
            let d = derive_velocities(&aligned, config.smoothing_halfwidth)?;
            warnings.extend(d.warnings.iter().map(|w| format!("estimate: {w}")));
            (VelocitySource::Derived, d.samples)
        }
    };

    let r = rve_series(&v_gt, &v_est, config.speed_floor)?;
    if r.excluded > 0 {
        warnings.push(format!(
            "{} samples below speed floor {} m/s excluded from RVE",
            r.excluded, config.speed_floor
        ));
    }
    let grid = linspace(0.0, config.xi_max, config.xi_points);
    let included: Vec<VelocitySample> = r.included.iter().map(|&i| v_gt[i]).collect();
    let mut curves = Vec::new();
    if !r.rve.is_empty() {
        for scheme in WeightScheme::ALL {
            let curve = weights(&included, scheme)
                .and_then(|w| precision_curve(&r.rve, &w, &grid, scheme))
                .and_then(|c| Ok((curve_auc(&c, config.xi_max)?, c)));
            match curve {
                Ok((auc, c)) => curves.push(CurveReport {
                    weighting: scheme,
                    auc,
                    xi: c.xi,
                    s: c.s,
                }),
                Err(e) => warnings.push(format!("{scheme:?} curve skipped: {e}")),
            }
        }
    } else {
        warnings.push("no samples above the speed floor; precision curves omitted".into());
    }
    let section = VelocitySection {
        gt_source,
        est_source,
        speed_floor: config.speed_floor,
        samples: v_gt.len(),
        excluded: r.excluded,
        ave: r.ave.summary(),
        rve: r.rve.summary(),
        curves,
    };
    Ok((Some(section), Some(r.rve)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamSummary {
    pub camera_id: String,
    pub width: u16,
    pub height: u16,
    pub events: usize,
    pub windowed: WindowedCounts,
    /// Exported time-map image, if requested.
    pub time_map: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub schema: String,
    pub config: BTreeMap<String, String>,
    pub streams: Vec<StreamSummary>,
    pub stereo: Option<StereoCountReport>,
    pub depth_bounds: Vec<DepthBound>,
    pub flow: Option<FlowDifficulty>,
    pub warnings: Vec<String>,
}

impl DiagnosticsReport {
    pub fn new(config: BTreeMap<String, String>) -> Self {
        Self {
            schema: REPORT_SCHEMA.to_owned(),
            config,
            streams: Vec::new(),
            stereo: None,
            depth_bounds: Vec::new(),
            flow: None,
            warnings: Vec::new(),
        }
    }
}
