//! Dataset-quality diagnostics: stereo event-count balance, time maps,
//! optical-flow difficulty, stereo depth reliability and windowed event
//! statistics.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Event, EventStream};
use crate::metrics::trapezoid;

/// Left/right count differences above this many percent are flagged.
pub const STEREO_INCONSISTENCY_PERCENT: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("right-camera event count is zero")]
    ZeroRightCount,
    #[error("flow input is empty")]
    EmptyFlow,
    #[error("flow magnitude at index {0} is not finite")]
    NonFiniteFlow(usize),
    #[error("image size {width}x{height} is empty")]
    EmptyImage { width: u32, height: u32 },
    #[error("threshold grid needs at least two strictly ascending finite points")]
    InvalidGrid,
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("relative error bound must lie in (0, 1), got {0}")]
    InvalidRelativeError(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StereoCountReport {
    pub left_count: u64,
    pub right_count: u64,
    /// `100·(left − right)/right`.
    pub ratio_percent: f64,
    pub inconsistent: bool,
}

pub fn stereo_count_ratio(left: u64, right: u64) -> Result<StereoCountReport, DiagnosticsError> {
    if right == 0 {
        return Err(DiagnosticsError::ZeroRightCount);
    }
    // Exact integer numerator; one correctly rounded division when both
    // operands fit in 53 bits.
    let numerator = (i128::from(left) - i128::from(right)) * 100;
    let ratio_percent = numerator as f64 / right as f64;
    Ok(StereoCountReport {
        left_count: left,
        right_count: right,
        ratio_percent,
        inconsistent: ratio_percent.abs() > STEREO_INCONSISTENCY_PERCENT,
    })
}

pub fn stereo_stream_ratio(
    left: &EventStream,
    right: &EventStream,
) -> Result<StereoCountReport, DiagnosticsError> {
    stereo_count_ratio(left.len() as u64, right.len() as u64)
}

/// Per-pixel timestamp (seconds) of the most recent event in `[t0, t1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeMap {
    pub width: u16,
    pub height: u16,
    pub t0: f64,
    pub t1: f64,
    /// Row-major; [`TimeMap::BACKGROUND`] where no event fell.
    pub cells: Vec<f64>,
}

impl TimeMap {
    pub const BACKGROUND: f64 = f64::NEG_INFINITY;

    fn empty(width: u16, height: u16, t0: f64, t1: f64) -> Self {
        Self {
            width,
            height,
            t0,
            t1,
            cells: vec![Self::BACKGROUND; usize::from(width) * usize::from(height)],
        }
    }

    fn index(&self, x: u16, y: u16) -> usize {
        usize::from(y) * usize::from(self.width) + usize::from(x)
    }

    /// Latest timestamp at `(x, y)`, `None` for background.
    pub fn get(&self, x: u16, y: u16) -> Option<f64> {
        let v = self.cells[self.index(x, y)];
        (v != Self::BACKGROUND).then_some(v)
    }

    pub fn active_cells(&self) -> usize {
        self.cells.iter().filter(|&&c| c != Self::BACKGROUND).count()
    }

    /// Cell time scaled to `[0, 1]` over the window.
    pub fn normalized(&self, x: u16, y: u16) -> Option<f64> {
        self.get(x, y)
            .map(|t| ((t - self.t0) / (self.t1 - self.t0)).clamp(0.0, 1.0))
    }

    fn fold_event(&mut self, e: &Event) {
        let t = e.t();
        if t >= self.t0 && t < self.t1 {
            let i = self.index(e.x, e.y);
            if t > self.cells[i] {
                self.cells[i] = t;
            }
        }
    }

    fn merge_max(mut self, other: &TimeMap) -> Self {
        for (a, &b) in self.cells.iter_mut().zip(&other.cells) {
            if b > *a {
                *a = b;
            }
        }
        self
    }

    /// 8-bit grayscale, background 0, events mapped linearly onto 1..=255.
    pub fn to_gray8(&self) -> Vec<u8> {
        self.render(|n| 1 + (n * 254.0).round() as u8)
    }

    /// 8-bit grayscale with exponential decay `exp(-(t1 - t)/tau)`; display
    /// only, the stored timestamps are unaffected.
    pub fn to_gray8_decay(&self, tau: f64) -> Vec<u8> {
        self.cells
            .iter()
            .map(|&c| {
                if c == Self::BACKGROUND {
                    0
                } else {
                    (255.0 * (-(self.t1 - c) / tau).exp()).round().clamp(0.0, 255.0) as u8
                }
            })
            .collect()
    }

    fn render(&self, f: impl Fn(f64) -> u8) -> Vec<u8> {
        let span = self.t1 - self.t0;
        self.cells
            .iter()
            .map(|&c| {
                if c == Self::BACKGROUND {
                    0
                } else {
                    f(((c - self.t0) / span).clamp(0.0, 1.0))
                }
            })
            .collect()
    }

    /// Binary 16-bit PGM (P5, big-endian), background 0, events 1..=65535.
    pub fn write_pgm16<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "P5\n{} {}\n65535\n", self.width, self.height)?;
        let span = self.t1 - self.t0;
        for &c in &self.cells {
            let v: u16 = if c == Self::BACKGROUND {
                0
            } else {
                1 + (((c - self.t0) / span).clamp(0.0, 1.0) * 65534.0).round() as u16
            };
            w.write_all(&v.to_be_bytes())?;
        }
        Ok(())
    }
}

/// Most-recent-timestamp surface over `[t0, t1)` seconds. An empty or
/// inverted window yields an all-background map.
pub fn time_map(stream: &EventStream, t0: f64, t1: f64) -> TimeMap {
    let mut map = TimeMap::empty(stream.width, stream.height, t0, t1);
    if t0 < t1 {
        for e in stream.events() {
            map.fold_event(e);
        }
    }
    map
}

/// Chunk-parallel [`time_map`]; per-pixel max is associative, so the result
/// is bit-identical to the sequential scan.
pub fn time_map_parallel(stream: &EventStream, t0: f64, t1: f64, chunk: usize) -> TimeMap {
    let empty = || TimeMap::empty(stream.width, stream.height, t0, t1);
    if t0 >= t1 {
        return empty();
    }
    stream
        .events()
        .par_chunks(chunk.max(1))
        .map(|events| {
            let mut m = empty();
            for e in events {
                m.fold_event(e);
            }
            m
        })
        .reduce(empty, |a, b| a.merge_max(&b))
}

#[derive(Clone, Debug, PartialEq)]
pub enum FlowInput {
    /// Per-pixel or per-track flow vectors in pixels.
    Vectors(Vec<[f64; 2]>),
    /// Precomputed magnitudes in pixels.
    Magnitudes(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowDifficulty {
    /// Magnitudes divided by the image diagonal.
    pub normalized: Vec<f64>,
    pub xi: Vec<f64>,
    /// `P(|f|/diag > ξ)` at each grid point.
    pub survival: Vec<f64>,
    /// Trapezoidal area of the survival curve divided by the grid span.
    pub auc: f64,
}

pub fn flow_difficulty(
    flow: &FlowInput,
    width: u32,
    height: u32,
    xi_grid: &[f64],
) -> Result<FlowDifficulty, DiagnosticsError> {
    if width == 0 || height == 0 {
        return Err(DiagnosticsError::EmptyImage { width, height });
    }
    if xi_grid.len() < 2
        || xi_grid.iter().any(|x| !x.is_finite())
        || xi_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(DiagnosticsError::InvalidGrid);
    }
    let magnitudes: Vec<f64> = match flow {
        FlowInput::Vectors(v) => v.iter().map(|[u, w]| u.hypot(*w)).collect(),
        FlowInput::Magnitudes(m) => m.iter().map(|x| x.abs()).collect(),
    };
    if magnitudes.is_empty() {
        return Err(DiagnosticsError::EmptyFlow);
    }
    if let Some(i) = magnitudes.iter().position(|m| !m.is_finite()) {
        return Err(DiagnosticsError::NonFiniteFlow(i));
    }
    let diagonal = f64::from(width).hypot(f64::from(height));
    let normalized: Vec<f64> = magnitudes.iter().map(|m| m / diagonal).collect();
    let mut sorted = normalized.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let survival: Vec<f64> = xi_grid
        .iter()
        .map(|&xi| (sorted.len() - sorted.partition_point(|&m| m <= xi)) as f64 / n)
        .collect();
    let (lo, hi) = (xi_grid[0], xi_grid[xi_grid.len() - 1]);
    let auc = trapezoid(xi_grid, &survival, lo, hi) / (hi - lo);
    Ok(FlowDifficulty {
        normalized,
        xi: xi_grid.to_vec(),
        survival,
        auc,
    })
}

fn positive(name: &'static str, value: f64) -> Result<f64, DiagnosticsError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(DiagnosticsError::NonPositive { name, value })
    }
}

/// Relative depth error `|D − D̂|/D` when disparity `d` is mismeasured by
/// `delta` pixels: `|delta| / (d + delta)`.
pub fn relative_depth_error(disparity: f64, delta: f64) -> f64 {
    delta.abs() / (disparity + delta)
}

/// Smallest disparity whose worst-case relative depth error under `±du`
/// stays within `eps`: the under-measured branch `du/(d − du) = eps`.
pub fn min_reliable_disparity(eps: f64, du: f64) -> Result<f64, DiagnosticsError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(DiagnosticsError::InvalidRelativeError(eps));
    }
    let du = positive("disparity error", du)?;
    Ok(du * (1.0 + eps) / eps)
}

/// Largest depth `f_x·B / d_min` measurable within relative error `eps`.
pub fn max_reliable_depth(
    f_x: f64,
    baseline: f64,
    eps: f64,
    du: f64,
) -> Result<f64, DiagnosticsError> {
    let f_x = positive("focal length", f_x)?;
    let baseline = positive("baseline", baseline)?;
    Ok(f_x * baseline / min_reliable_disparity(eps, du)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthBound {
    pub f_x: f64,
    pub baseline: f64,
    pub eps: f64,
    pub du: f64,
    pub min_disparity: f64,
    pub max_depth: f64,
}

pub fn depth_bound_table(
    f_x: f64,
    baselines: &[f64],
    eps: f64,
    du: f64,
) -> Result<Vec<DepthBound>, DiagnosticsError> {
    baselines
        .iter()
        .map(|&baseline| {
            Ok(DepthBound {
                f_x,
                baseline,
                eps,
                du,
                min_disparity: min_reliable_disparity(eps, du)?,
                max_depth: max_reliable_depth(f_x, baseline, eps, du)?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowedCounts {
    /// Start of the first window (first event), microseconds.
    pub start_us: i64,
    pub window_us: i64,
    pub counts: Vec<u64>,
    /// The stream ends before the last window closes.
    pub trailing_partial: bool,
}

/// Event counts over consecutive windows starting at the first event.
pub fn windowed_event_counts(
    stream: &EventStream,
    window_s: f64,
) -> Result<WindowedCounts, DiagnosticsError> {
    positive("window", window_s)?;
    let window_us = ((window_s * 1e6).round() as i64).max(1);
    let events = stream.events();
    let (Some(first), Some(last)) = (events.first(), events.last()) else {
        return Ok(WindowedCounts {
            start_us: 0,
            window_us,
            counts: Vec::new(),
            trailing_partial: false,
        });
    };
    let start_us = first.t_us;
    let n = ((last.t_us - start_us) / window_us + 1) as usize;
    let mut counts = vec![0u64; n];
    for e in events {
        counts[((e.t_us - start_us) / window_us) as usize] += 1;
    }
    let covered = last.t_us - start_us + 1;
    Ok(WindowedCounts {
        start_us,
        window_us,
        counts,
        trailing_partial: covered < n as i64 * window_us,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Polarity;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ev(t_us: i64, x: u16, y: u16) -> Event {
        Event::new(t_us, x, y, Polarity::Positive)
    }

    #[test]
    fn stereo_examples() {
        let r = stereo_count_ratio(24_000_000, 21_880_000).unwrap();
        assert!((r.ratio_percent - 9.68).abs() <= 0.1);
        assert!(!r.inconsistent);
        let r = stereo_count_ratio(103_100_000, 151_600_000).unwrap();
        assert!((r.ratio_percent - (-31.99)).abs() <= 0.01);
        assert!(r.inconsistent);
        let r = stereo_count_ratio(5, 5).unwrap();
        assert_eq!(r.ratio_percent, 0.0);
        assert!(!r.inconsistent);
        assert_eq!(stereo_count_ratio(5, 0), Err(DiagnosticsError::ZeroRightCount));
    }

    /// `r` is the double nearest to `p/q` iff `|r·q − p| ≤ ulp(r)·q/2`,
    /// evaluated exactly in integers.
    fn is_nearest_double(r: f64, p: i128, q: i128) -> bool {
        if r == 0.0 {
            return p == 0;
        }
        let bits = r.abs().to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i32;
        let mant = ((bits & ((1 << 52) - 1)) | (1 << 52)) as i128;
        let e = exp - 1075; // r = mant · 2^e
        assert!(e < 0 && e > -100);
        let shift = (-e) as u32;
        let sign = if r < 0.0 { -1 } else { 1 };
        // |mant·q − p·2^shift| ≤ q/2 (one ulp of r is 2^e)
        let diff = (sign * mant * q - p * (1i128 << shift)).abs();
        2 * diff <= q
    }

    proptest! {
        #[test]
        fn stereo_ratio_matches_rational(l in 0u64..2_000_000_000, r in 1u64..2_000_000_000) {
            let rep = stereo_count_ratio(l, r).unwrap();
            prop_assert!(is_nearest_double(rep.ratio_percent, 100 * (l as i128 - r as i128), r as i128));
        }
    }

    #[test]
    fn stereo_swap_of_equal_counts() {
        let a = stereo_count_ratio(7, 7).unwrap();
        let b = stereo_count_ratio(7, 7).unwrap();
        assert_eq!(a.ratio_percent, 0.0);
        assert_eq!(b.ratio_percent, 0.0);
        assert!(stereo_count_ratio(3, 7).unwrap().ratio_percent < 0.0);
        assert!(stereo_count_ratio(7, 3).unwrap().ratio_percent > 0.0);
    }

    #[test]
    fn time_map_single_event() {
        let s = EventStream::with_events(64, 48, "c", vec![ev(500_000, 10, 20)]).unwrap();
        let m = time_map(&s, 0.0, 1.0);
        assert_eq!(m.active_cells(), 1);
        assert_eq!(m.get(10, 20), Some(0.5));
        assert_eq!(m.normalized(10, 20), Some(0.5));
    }

    #[test]
    fn time_map_newest_wins() {
        let s =
            EventStream::with_events(4, 4, "c", vec![ev(1_000_000, 1, 1), ev(2_000_000, 1, 1)]).unwrap();
        let m = time_map(&s, 0.0, 3.0);
        assert_eq!(m.get(1, 1), Some(2.0));
        // window is half-open
        assert_eq!(time_map(&s, 0.0, 2.0).get(1, 1), Some(1.0));
    }

    #[test]
    fn time_map_empty_window_is_background() {
        let s = EventStream::with_events(4, 4, "c", vec![ev(1, 1, 1)]).unwrap();
        assert_eq!(time_map(&s, 1.0, 1.0).active_cells(), 0);
        assert_eq!(time_map(&s, 2.0, 1.0).active_cells(), 0);
        assert_eq!(time_map_parallel(&s, 2.0, 1.0, 8).active_cells(), 0);
    }

    fn random_stream(rng: &mut impl Rng, n: usize, w: u16, h: u16) -> EventStream {
        let mut t = 0i64;
        let events = (0..n)
            .map(|_| {
                t += rng.random_range(0..50);
                ev(t, rng.random_range(0..w), rng.random_range(0..h))
            })
            .collect();
        EventStream::with_events(w, h, "r", events).unwrap()
    }

    #[test]
    fn time_map_matches_brute_force_and_parallel() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let s = random_stream(&mut rng, 5000, 16, 12);
            let span = s.events().last().unwrap().t();
            let (t0, t1) = (0.2 * span, 0.8 * span);
            let m = time_map(&s, t0, t1);
            for y in 0..s.height {
                for x in 0..s.width {
                    let oracle = s
                        .events()
                        .iter()
                        .filter(|e| e.x == x && e.y == y && e.t() >= t0 && e.t() < t1)
                        .map(Event::t)
                        .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.max(t))));
                    assert_eq!(m.get(x, y), oracle);
                }
            }
            assert_eq!(time_map_parallel(&s, t0, t1, 333), m);
        }
    }

    #[test]
    fn time_map_exports() {
        let s = EventStream::with_events(3, 2, "c", vec![ev(0, 0, 0), ev(1_000_000, 2, 1)]).unwrap();
        let m = time_map(&s, 0.0, 2.0);
        assert_eq!(m.to_gray8(), vec![1, 0, 0, 0, 0, 128]);
        let mut pgm = Vec::new();
        m.write_pgm16(&mut pgm).unwrap();
        let header = b"P5\n3 2\n65535\n";
        assert_eq!(&pgm[..header.len()], header);
        assert_eq!(pgm.len(), header.len() + 12);
        assert_eq!(&pgm[header.len()..header.len() + 2], &[0, 1]);
        let decay = m.to_gray8_decay(1.0);
        assert_eq!(decay[1], 0);
        assert!(decay[5] > decay[0]);
    }

    #[test]
    fn flow_examples() {
        let grid = crate::metrics::linspace(0.0, 1.0, 256);
        let zero = flow_difficulty(&FlowInput::Vectors(vec![[0.0, 0.0]; 10]), 640, 480, &grid).unwrap();
        assert_eq!(zero.auc, 0.0);

        let diag = 800.0; // 640x480 diagonal
        let full = flow_difficulty(&FlowInput::Vectors(vec![[480.0, 640.0]; 5]), 640, 480, &grid).unwrap();
        assert!(full.normalized.iter().all(|&m| (m - 1.0).abs() < 1e-15));
        assert!((full.auc - 1.0).abs() <= 1.0 / 255.0);
        let half = flow_difficulty(&FlowInput::Magnitudes(vec![0.5 * diag; 3]), 640, 480, &grid).unwrap();
        assert!((half.auc - 0.5).abs() <= 1.0 / 255.0);

        assert_eq!(
            flow_difficulty(&FlowInput::Magnitudes(vec![]), 640, 480, &grid),
            Err(DiagnosticsError::EmptyFlow)
        );
        assert!(flow_difficulty(&FlowInput::Magnitudes(vec![1.0]), 0, 480, &grid).is_err());
        assert!(flow_difficulty(&FlowInput::Magnitudes(vec![f64::NAN]), 4, 4, &grid).is_err());
        assert!(flow_difficulty(&FlowInput::Magnitudes(vec![1.0]), 4, 4, &[0.5]).is_err());
    }

    proptest! {
        #[test]
        fn flow_auc_grows_with_scale(mags in proptest::collection::vec(0.0..900.0f64, 1..200), k in 1.0..5.0f64) {
            let grid = crate::metrics::linspace(0.0, 1.0, 256);
            let base = flow_difficulty(&FlowInput::Magnitudes(mags.clone()), 640, 480, &grid).unwrap();
            let scaled: Vec<f64> = mags.iter().map(|m| m * k).collect();
            let bigger = flow_difficulty(&FlowInput::Magnitudes(scaled), 640, 480, &grid).unwrap();
            prop_assert!(bigger.auc >= base.auc);
        }

        #[test]
        fn flow_auc_permutation_invariant(mags in proptest::collection::vec(0.0..900.0f64, 1..200), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let grid = crate::metrics::linspace(0.0, 1.0, 256);
            let mut shuffled = mags.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let a = flow_difficulty(&FlowInput::Magnitudes(mags), 640, 480, &grid).unwrap();
            let b = flow_difficulty(&FlowInput::Magnitudes(shuffled), 640, 480, &grid).unwrap();
            prop_assert_eq!(a.auc, b.auc);
        }
    }

    /// Bisection on the under-measured branch `du/(d − du) = eps` (decreasing
    /// in d), independent of the closed form.
    fn bisect_min_disparity(eps: f64, du: f64) -> f64 {
        let g = |d: f64| du / (d - du) - eps;
        let (mut lo, mut hi) = (du * (1.0 + 1e-12), du);
        while g(hi) > 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn depth_bound_example() {
        let d = max_reliable_depth(520.0, 0.10, 0.15, 0.5).unwrap();
        assert!((min_reliable_disparity(0.15, 0.5).unwrap() - 3.833_333_333_333).abs() < 1e-9);
        assert!((d - 13.565).abs() < 5e-4, "{d}");
        let oracle = 520.0 * 0.10 / bisect_min_disparity(0.15, 0.5);
        assert!(((d - oracle) / oracle).abs() < 1e-6);
        let doubled = max_reliable_depth(520.0, 0.20, 0.15, 0.5).unwrap();
        assert!((doubled - 2.0 * d).abs() < 1e-12);
    }

    #[test]
    fn depth_bound_branches() {
        let d = min_reliable_disparity(0.15, 0.5).unwrap();
        assert!((relative_depth_error(d, -0.5) - 0.15).abs() < 1e-15);
        assert!(relative_depth_error(d, 0.5) < 0.15);
    }

    #[test]
    fn depth_bound_rejects_bad_input() {
        assert!(max_reliable_depth(520.0, 0.1, 0.0, 0.5).is_err());
        assert!(max_reliable_depth(520.0, 0.1, 1.0, 0.5).is_err());
        assert!(max_reliable_depth(520.0, 0.1, 0.15, 0.0).is_err());
        assert!(max_reliable_depth(-1.0, 0.1, 0.15, 0.5).is_err());
        assert!(max_reliable_depth(520.0, 0.0, 0.15, 0.5).is_err());
    }

    #[test]
    fn depth_closed_form_agrees_with_bisection() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..1000 {
            let (f, b) = (rng.random_range(100.0..2000.0), rng.random_range(0.01..1.0));
            let (eps, du) = (rng.random_range(0.01..0.9), rng.random_range(0.05..2.0));
            let closed = max_reliable_depth(f, b, eps, du).unwrap();
            let oracle = f * b / bisect_min_disparity(eps, du);
            assert!(((closed - oracle) / oracle).abs() < 1e-6);
        }
    }

    #[test]
    fn windowed_counts_examples() {
        let empty = EventStream::new(4, 4, "c").unwrap();
        assert!(windowed_event_counts(&empty, 5.0).unwrap().counts.is_empty());

        let events = (0..100).map(|i| ev(i * 50_000, 0, 0)).collect();
        let s = EventStream::with_events(4, 4, "c", events).unwrap();
        let w = windowed_event_counts(&s, 5.0).unwrap();
        assert_eq!(w.counts, vec![100]);
        assert!(w.trailing_partial);

        let w = windowed_event_counts(&s, 1.0).unwrap();
        assert_eq!(w.counts, vec![20; 5]);
        assert!(windowed_event_counts(&s, 0.0).is_err());
    }

    #[test]
    fn windowed_counts_match_filter_and_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let s = random_stream(&mut rng, 3000, 8, 8);
            let w = windowed_event_counts(&s, 0.01).unwrap();
            for (k, &c) in w.counts.iter().enumerate() {
                let lo = w.start_us + k as i64 * w.window_us;
                let hi = lo + w.window_us;
                let oracle = s.events().iter().filter(|e| e.t_us >= lo && e.t_us < hi).count();
                assert_eq!(c as usize, oracle);
            }
            assert_eq!(w.counts.iter().sum::<u64>() as usize, s.len());
        }
    }
}
