//! Pose and velocity error metrics.
//!
//! Per-sample pose errors are norms of SE(3) logarithms of the discrepancy
//! between ground truth and estimate. Velocity accuracy is summarized by the
//! relative velocity error `RVE_i = ‖v_gt,i − v_est,i‖ / ‖v_gt,i‖` and a
//! weighted precision curve `S(ξ) = Σ w_i 1(RVE_i < ξ)` whose normalized
//! area ranks estimators.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::AssociatedPair;
use crate::geometry::{pose_norm, Pose};
use crate::ingest::Trajectory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("empty input")]
    EmptyInput,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("RPE step {delta} must be in [1, {n})")]
    InvalidDelta { delta: usize, n: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("velocity series are not on the same time grid (sample {0})")]
    GridMismatch(usize),
    #[error("all motion magnitudes are zero; {0:?} weights undefined")]
    ZeroMagnitude(WeightScheme),
    #[error("combined weights need angular velocity for every sample")]
    MissingAngularVelocity,
    #[error("threshold grid must be finite and strictly ascending")]
    InvalidGrid,
    #[error("xi_max {xi_max} outside the curve's grid span [{lo}, {hi}]")]
    XiOutOfRange { xi_max: f64, lo: f64, hi: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Ate,
    Rpe,
    Ave,
    Rve,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorSeries {
    pub kind: ErrorKind,
    pub t: Vec<f64>,
    pub value: Vec<f64>,
}

impl ErrorSeries {
    pub fn new(kind: ErrorKind, t: Vec<f64>, value: Vec<f64>) -> Self {
        assert_eq!(t.len(), value.len(), "time and value lengths differ");
        Self { kind, t, value }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn summary(&self) -> Option<SeriesSummary> {
        SeriesSummary::of(&self.value)
    }
}

/// Descriptive statistics of a series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub rms: f64,
    pub min: f64,
    pub max: f64,
}

impl SeriesSummary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let m = sorted.len() / 2;
        let median = if sorted.len() % 2 == 1 {
            sorted[m]
        } else {
            0.5 * (sorted[m - 1] + sorted[m])
        };
        Some(Self {
            count: values.len(),
            mean: values.iter().sum::<f64>() / n,
            median,
            rms: (values.iter().map(|v| v * v).sum::<f64>() / n).sqrt(),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        })
    }
}

/// Which part of the pose discrepancy enters the norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PosePart {
    /// Norm of the full 6-vector logarithm (meters and radians mixed).
    FullSe3,
    /// Euclidean translation error in meters.
    TranslationOnly,
}

fn part_norm(discrepancy: &Pose, part: PosePart) -> f64 {
    match part {
        PosePart::FullSe3 => pose_norm(discrepancy),
        PosePart::TranslationOnly => discrepancy.translation.norm(),
    }
}

pub fn ate_series(pairs: &[AssociatedPair], part: PosePart) -> ErrorSeries {
    let value = pairs
        .iter()
        .map(|p| match part {
            PosePart::FullSe3 => pose_norm(&p.pose_gt.between(&p.pose_est)),
            PosePart::TranslationOnly => (p.pose_gt.translation - p.pose_est.translation).norm(),
        })
        .collect();
    ErrorSeries::new(ErrorKind::Ate, pairs.iter().map(|p| p.t).collect(), value)
}

/// Relative pose error over a step of `delta` samples, stamped at the first
/// sample of each step.
pub fn rpe_series(
    pairs: &[AssociatedPair],
    delta: usize,
    part: PosePart,
) -> Result<ErrorSeries, MetricsError> {
    let n = pairs.len();
    if delta == 0 || delta >= n {
        return Err(MetricsError::InvalidDelta { delta, n });
    }
    let (t, value) = pairs
        .iter()
        .zip(&pairs[delta..])
        .map(|(a, b)| {
            let gt_motion = a.pose_gt.between(&b.pose_gt);
            let est_motion = a.pose_est.between(&b.pose_est);
            (a.t, part_norm(&gt_motion.between(&est_motion), part))
        })
        .unzip();
    Ok(ErrorSeries::new(ErrorKind::Rpe, t, value))
}

/// Number of samples whose span is closest to `seconds`, at least 1.
pub fn delta_for_duration(times: &[f64], seconds: f64) -> usize {
    let mut dts: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    if dts.is_empty() {
        return 1;
    }
    dts.sort_by(f64::total_cmp);
    let median = dts[dts.len() / 2];
    if median <= 0.0 {
        return 1;
    }
    ((seconds / median).round() as usize).max(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// `(1/n)·sqrt(Σ e²)`, with the normalization outside the root.
    PaperEq2,
    /// `sqrt((1/n)·Σ e²)`.
    #[default]
    Rms,
}

pub fn aggregate(series: &ErrorSeries, mode: Aggregation) -> Result<f64, MetricsError> {
    if series.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = series.len() as f64;
    let sum_sq: f64 = series.value.iter().map(|v| v * v).sum();
    Ok(match mode {
        Aggregation::PaperEq2 => sum_sq.sqrt() / n,
        Aggregation::Rms => (sum_sq / n).sqrt(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VelocitySample {
    pub t: f64,
    /// Linear velocity, m/s, world frame.
    pub v: Vector3<f64>,
    /// Angular velocity, rad/s, body frame. Absent when the source does not
    /// provide it.
    pub omega: Option<Vector3<f64>>,
}

impl VelocitySample {
    pub fn new(t: f64, v: Vector3<f64>, omega: Option<Vector3<f64>>) -> Self {
        Self { t, v, omega }
    }

    pub fn speed(&self) -> f64 {
        self.v.norm()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivedVelocities {
    pub samples: Vec<VelocitySample>,
    pub warnings: Vec<String>,
}

/// Derivative at 0 of the quadratic through `(0, 0)`, `(a, fa)`, `(b, fb)`.
fn three_point(a: f64, fa: Vector3<f64>, b: f64, fb: Vector3<f64>) -> Vector3<f64> {
    (fa * (b * b) - fb * (a * a)) / (a * b * (b - a))
}

/// Finite-difference velocities of a trajectory.
///
/// Three-point differences: central in the interior, one-sided at the ends,
/// all second-order on non-uniform grids. Rotations are differenced in the
/// tangent space of the sample's own frame, so angular velocity is in the
/// body frame. A centered moving average over `2·halfwidth + 1` samples
/// follows; near the ends the window shrinks symmetrically.
pub fn derive_velocities(
    traj: &Trajectory,
    smoothing_halfwidth: usize,
) -> Result<DerivedVelocities, MetricsError> {
    let s = traj.samples();
    let n = s.len();
    if n < 3 {
        return Err(MetricsError::TooFewSamples { needed: 3, got: n });
    }
    let mut warnings = Vec::new();
    let mut dts: Vec<f64> = s.windows(2).map(|w| w[1].t - w[0].t).collect();
    dts.sort_by(f64::total_cmp);
    let median = dts[dts.len() / 2];
    let (lo, hi) = (dts[0], dts[dts.len() - 1]);
    if hi > 10.0 * median || lo < 0.1 * median {
        warnings.push(format!(
            "non-uniform sampling: dt in [{lo:.6}, {hi:.6}] s, median {median:.6} s"
        ));
    }

    let raw: Vec<(Vector3<f64>, Vector3<f64>)> = (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (1, 2),
                i if i == n - 1 => (n - 2, n - 3),
                i => (i - 1, i + 1),
            };
            let here = &s[i].pose;
            let (ha, hb) = (s[a].t - s[i].t, s[b].t - s[i].t);
            let v = three_point(
                ha,
                s[a].pose.translation - here.translation,
                hb,
                s[b].pose.translation - here.translation,
            );
            let omega = three_point(
                ha,
                here.rotation.between(&s[a].pose.rotation).log(),
                hb,
                here.rotation.between(&s[b].pose.rotation).log(),
            );
            (v, omega)
        })
        .collect();

    let samples = (0..n)
        .map(|i| {
            let h = smoothing_halfwidth.min(i).min(n - 1 - i);
            let window = &raw[i - h..=i + h];
            let k = window.len() as f64;
            let (sv, sw) = window
                .iter()
                .fold((Vector3::zeros(), Vector3::zeros()), |(av, aw), (v, w)| {
                    (av + v, aw + w)
                });
            VelocitySample::new(s[i].t, sv / k, Some(sw / k))
        })
        .collect();
    Ok(DerivedVelocities { samples, warnings })
}

/// Linear interpolation of a velocity series at `times`; values beyond the
/// ends are held constant.
pub fn resample_velocities(
    series: &[VelocitySample],
    times: &[f64],
) -> Result<Vec<VelocitySample>, MetricsError> {
    if series.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    Ok(times
        .iter()
        .map(|&t| {
            let idx = series.partition_point(|s| s.t <= t);
            if idx == 0 {
                return VelocitySample { t, ..series[0] };
            }
            let a = &series[idx - 1];
            if idx == series.len() || a.t == t {
                return VelocitySample { t, ..*a };
            }
            let b = &series[idx];
            let alpha = (t - a.t) / (b.t - a.t);
            let omega = match (a.omega, b.omega) {
                (Some(wa), Some(wb)) => Some(wa + (wb - wa) * alpha),
                _ => None,
            };
            VelocitySample::new(t, a.v + (b.v - a.v) * alpha, omega)
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RveResult {
    /// Absolute velocity error at every sample.
    pub ave: ErrorSeries,
    /// Relative velocity error at samples whose ground-truth speed clears the
    /// floor.
    pub rve: ErrorSeries,
    /// Indices (into the inputs) that contribute to `rve`.
    pub included: Vec<usize>,
    pub excluded: usize,
}

/// Timestamps of paired velocity samples must agree within this many seconds.
const GRID_TOL: f64 = 1e-9;

pub fn rve_series(
    v_gt: &[VelocitySample],
    v_est: &[VelocitySample],
    speed_floor: f64,
) -> Result<RveResult, MetricsError> {
    if v_gt.is_empty() || v_est.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if v_gt.len() != v_est.len() {
        return Err(MetricsError::LengthMismatch(v_gt.len(), v_est.len()));
    }
    let mut ave_t = Vec::with_capacity(v_gt.len());
    let mut ave = Vec::with_capacity(v_gt.len());
    let mut rve_t = Vec::new();
    let mut rve = Vec::new();
    let mut included = Vec::new();
    for (i, (g, e)) in v_gt.iter().zip(v_est).enumerate() {
        if (g.t - e.t).abs() > GRID_TOL {
            return Err(MetricsError::GridMismatch(i));
        }
        let err = (g.v - e.v).norm();
        ave_t.push(g.t);
        ave.push(err);
        let speed = g.speed();
        if speed > 0.0 && speed >= speed_floor {
            rve_t.push(g.t);
            rve.push(err / speed);
            included.push(i);
        }
    }
    let excluded = v_gt.len() - included.len();
    Ok(RveResult {
        ave: ErrorSeries::new(ErrorKind::Ave, ave_t, ave),
        rve: ErrorSeries::new(ErrorKind::Rve, rve_t, rve),
        included,
        excluded,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    /// `1/n`.
    #[default]
    Uniform,
    /// Proportional to ground-truth speed.
    Velocity,
    /// Proportional to `sqrt(‖v‖² + ‖ω‖²)`.
    Combined,
}

impl WeightScheme {
    pub const ALL: [WeightScheme; 3] = [Self::Uniform, Self::Velocity, Self::Combined];
}

pub fn weights(v_gt: &[VelocitySample], scheme: WeightScheme) -> Result<Vec<f64>, MetricsError> {
    if v_gt.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let magnitudes: Vec<f64> = match scheme {
        WeightScheme::Uniform => return Ok(vec![1.0 / v_gt.len() as f64; v_gt.len()]),
        WeightScheme::Velocity => v_gt.iter().map(VelocitySample::speed).collect(),
        WeightScheme::Combined => v_gt
            .iter()
            .map(|s| {
                s.omega
                    .map(|w| (s.v.norm_squared() + w.norm_squared()).sqrt())
                    .ok_or(MetricsError::MissingAngularVelocity)
            })
            .collect::<Result<_, _>>()?,
    };
    let total: f64 = magnitudes.iter().sum();
    if !(total > 0.0) {
        return Err(MetricsError::ZeroMagnitude(scheme));
    }
    Ok(magnitudes.into_iter().map(|m| m / total).collect())
}

/// `n` evenly spaced thresholds on `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

pub const DEFAULT_XI_POINTS: usize = 256;
pub const DEFAULT_XI_MAX: f64 = 1.0;
pub const DEFAULT_SPEED_FLOOR: f64 = 0.05;

pub fn default_xi_grid() -> Vec<f64> {
    linspace(0.0, DEFAULT_XI_MAX, DEFAULT_XI_POINTS)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionCurve {
    pub weighting: WeightScheme,
    pub xi: Vec<f64>,
    pub s: Vec<f64>,
}

fn check_grid(xi: &[f64]) -> Result<(), MetricsError> {
    let finite = xi.iter().all(|x| x.is_finite());
    if xi.is_empty() || !finite || xi.windows(2).any(|w| w[1] <= w[0]) {
        return Err(MetricsError::InvalidGrid);
    }
    Ok(())
}

/// Evaluates `S(ξ) = Σ w_i 1(RVE_i < ξ)` at every grid point (strict
/// inequality).
///
/// The sum is divided by `Σ w_i`, which is 1 up to rounding for normalized
/// weights; this keeps `S = 1` exact once every sample is counted.
pub fn precision_curve(
    rve: &ErrorSeries,
    w: &[f64],
    xi_grid: &[f64],
    weighting: WeightScheme,
) -> Result<PrecisionCurve, MetricsError> {
    if rve.len() != w.len() {
        return Err(MetricsError::LengthMismatch(rve.len(), w.len()));
    }
    if rve.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    check_grid(xi_grid)?;
    let mut order: Vec<usize> = (0..rve.len()).collect();
    order.sort_by(|&a, &b| rve.value[a].total_cmp(&rve.value[b]));
    // cumulative[k] = weight of the k smallest errors
    let mut cumulative = Vec::with_capacity(order.len() + 1);
    cumulative.push(0.0);
    let mut acc = 0.0;
    for &i in &order {
        acc += w[i];
        cumulative.push(acc);
    }
    let total = acc;
    if !(total > 0.0) {
        return Err(MetricsError::EmptyInput);
    }
    let sorted: Vec<f64> = order.iter().map(|&i| rve.value[i]).collect();
    let s = xi_grid
        .iter()
        .map(|&xi| {
            let below = sorted.partition_point(|&e| e < xi);
            cumulative[below] / total
        })
        .collect();
    Ok(PrecisionCurve {
        weighting,
        xi: xi_grid.to_vec(),
        s,
    })
}

/// Trapezoidal area of `f` over `[lo, hi]` on a sampled grid, interpolating
/// linearly at the interval ends.
pub(crate) fn trapezoid(x: &[f64], y: &[f64], lo: f64, hi: f64) -> f64 {
    let at = |q: f64| -> f64 {
        let k = x.partition_point(|&v| v <= q);
        if k == 0 {
            return y[0];
        }
        if k == x.len() || x[k - 1] == q {
            return y[k - 1];
        }
        let a = (q - x[k - 1]) / (x[k] - x[k - 1]);
        y[k - 1] + (y[k] - y[k - 1]) * a
    };
    let mut pts = vec![(lo, at(lo))];
    pts.extend(
        x.iter()
            .zip(y)
            .filter(|(&xv, _)| xv > lo && xv < hi)
            .map(|(&xv, &yv)| (xv, yv)),
    );
    pts.push((hi, at(hi)));
    pts.windows(2)
        .map(|p| 0.5 * (p[0].1 + p[1].1) * (p[1].0 - p[0].0))
        .sum()
}

/// Trapezoidal integral of `S` over `[0, xi_max]` divided by `xi_max`.
pub fn curve_auc(curve: &PrecisionCurve, xi_max: f64) -> Result<f64, MetricsError> {
    check_grid(&curve.xi)?;
    if curve.xi.len() != curve.s.len() {
        return Err(MetricsError::LengthMismatch(curve.xi.len(), curve.s.len()));
    }
    let (lo, hi) = (curve.xi[0], curve.xi[curve.xi.len() - 1]);
    if !(xi_max > 0.0) || lo > 0.0 || xi_max > hi {
        return Err(MetricsError::XiOutOfRange { xi_max, lo, hi });
    }
    Ok(trapezoid(&curve.xi, &curve.s, 0.0, xi_max) / xi_max)
}
