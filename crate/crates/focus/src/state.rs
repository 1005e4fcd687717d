use std::collections::VecDeque;
use std::sync::atomic::{AtomicI64, Ordering};

use evbench_core::diagnostics::stereo_count_ratio;
use evbench_core::Event;
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Camera {
    Left,
    Right,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FocusError {
    #[error("{camera:?} batch event {index}: timestamp {t_us} us precedes {previous_us} us")]
    DecreasingTimestamp {
        camera: Camera,
        index: usize,
        t_us: i64,
        previous_us: i64,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StimulusKind {
    CheckerboardFlicker,
    RotatingLine,
}

/// Display stimulus settings, served to the dashboard verbatim.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StimulusConfig {
    pub kind: StimulusKind,
    /// Hz for flicker, rad/s for rotation.
    pub frequency: f64,
    pub grid_size: u32,
    pub contrast: f64,
}

impl Default for StimulusConfig {
    fn default() -> Self {
        Self {
            kind: StimulusKind::CheckerboardFlicker,
            frequency: 5.0,
            grid_size: 8,
            contrast: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FocusConfig {
    /// Sliding window length, seconds.
    pub window: f64,
    /// Snapshot emission rate, Hz.
    pub cadence_hz: f64,
    /// Both rates must reach this fraction of their session peak.
    pub peak_fraction: f64,
    /// Largest `|ratio_percent|` still considered matched.
    pub ratio_threshold_percent: f64,
    pub stimulus: StimulusConfig,
}

impl Default for FocusConfig {
    fn default() -> Self {
        Self {
            window: 0.1,
            cadence_hz: 10.0,
            peak_fraction: 0.9,
            ratio_threshold_percent: 10.0,
            stimulus: StimulusConfig::default(),
        }
    }
}

impl FocusConfig {
    pub fn validate(&self) -> Result<(), FocusError> {
        let bad = |m: &str| Err(FocusError::InvalidConfig(m.to_owned()));
        if !(self.window > 0.0 && self.window.is_finite()) || self.window_us() < 1 {
            return bad("window must be at least one microsecond");
        }
        if !(self.cadence_hz > 0.0 && self.cadence_hz.is_finite()) {
            return bad("cadence must be positive");
        }
        if !(0.0..=1.0).contains(&self.peak_fraction) {
            return bad("peak fraction must lie in [0, 1]");
        }
        if !(self.ratio_threshold_percent >= 0.0) {
            return bad("ratio threshold must be non-negative");
        }
        if !(self.stimulus.frequency > 0.0) {
            return bad("stimulus frequency must be positive");
        }
        Ok(())
    }

    pub fn window_us(&self) -> i64 {
        (self.window * 1e6).round() as i64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FocusSnapshot {
    /// Window end, seconds on the event clock.
    pub t: f64,
    pub left_rate: f64,
    pub right_rate: f64,
    /// `None` while the right window is empty.
    pub ratio_percent: Option<f64>,
    pub left_peak: f64,
    pub right_peak: f64,
    pub in_focus: bool,
    pub window: f64,
}

/// Advisory focus predicate: both rates at or above `peak_fraction` of their
/// (non-zero) peaks and the stereo ratio within the threshold.
pub fn in_focus(
    left_rate: f64,
    right_rate: f64,
    left_peak: f64,
    right_peak: f64,
    ratio_percent: Option<f64>,
    config: &FocusConfig,
) -> bool {
    left_peak > 0.0
        && right_peak > 0.0
        && left_rate >= config.peak_fraction * left_peak
        && right_rate >= config.peak_fraction * right_peak
        && ratio_percent.is_some_and(|r| r.abs() <= config.ratio_threshold_percent)
}

#[derive(Debug, Default)]
struct CameraWindow {
    times: VecDeque<i64>,
    last_us: Option<i64>,
    peak: f64,
}

impl CameraWindow {
    fn count_in(&self, lo: i64, hi: i64) -> u64 {
        (self.times.partition_point(|&t| t < hi) - self.times.partition_point(|&t| t < lo)) as u64
    }
}

/// Per-camera sliding windows and session peaks.
///
/// Each camera has its own lock so the two ingestion producers never contend
/// with each other; a snapshot holds one lock at a time and never blocks on
/// emission.
#[derive(Debug)]
pub struct FocusService {
    config: FocusConfig,
    window_us: i64,
    left: Mutex<CameraWindow>,
    right: Mutex<CameraWindow>,
    clock_us: AtomicI64,
    last_snapshot_us: Mutex<Option<i64>>,
}

impl FocusService {
    pub fn new(config: FocusConfig) -> Result<Self, FocusError> {
        config.validate()?;
        Ok(Self {
            window_us: config.window_us(),
            config,
            left: Mutex::default(),
            right: Mutex::default(),
            clock_us: AtomicI64::new(i64::MIN),
            last_snapshot_us: Mutex::new(None),
        })
    }

    pub fn config(&self) -> &FocusConfig {
        &self.config
    }

    fn camera(&self, camera: Camera) -> &Mutex<CameraWindow> {
        match camera {
            Camera::Left => &self.left,
            Camera::Right => &self.right,
        }
    }

    /// Appends a batch to one camera's window and evicts events older than
    /// the newest timestamp minus the window. A batch that decreases in time
    /// (internally or relative to earlier batches) is rejected whole.
    pub fn ingest_batch(&self, camera: Camera, events: &[Event]) -> Result<usize, FocusError> {
        let Some(last) = events.last() else {
            return Ok(0);
        };
        let mut w = self.camera(camera).lock();
        let mut previous = w.last_us;
        for (index, e) in events.iter().enumerate() {
            if let Some(p) = previous {
                if e.t_us < p {
                    return Err(FocusError::DecreasingTimestamp {
                        camera,
                        index,
                        t_us: e.t_us,
                        previous_us: p,
                    });
                }
            }
            previous = Some(e.t_us);
        }
        w.times.extend(events.iter().map(|e| e.t_us));
        w.last_us = Some(last.t_us);
        let horizon = last.t_us - self.window_us;
        let stale = w.times.partition_point(|&t| t < horizon);
        w.times.drain(..stale);
        drop(w);
        self.advance_clock(last.t_us + 1);
        Ok(events.len())
    }

    /// Moves the service clock forward to `t_us` (never backward).
    pub fn advance_clock(&self, t_us: i64) {
        self.clock_us.fetch_max(t_us, Ordering::AcqRel);
    }

    /// Snapshot of the window `[t − window, t)` ending at `t_us`. Peaks are
    /// updated with the rates observed here.
    pub fn snapshot_at(&self, t_us: i64) -> FocusSnapshot {
        let mut last = self.last_snapshot_us.lock();
        let snap = self.compute(t_us);
        *last = Some(t_us);
        snap
    }

    /// Snapshot at the service clock, nudged forward so consecutive
    /// snapshot times are strictly increasing.
    pub fn snapshot(&self) -> FocusSnapshot {
        let mut last = self.last_snapshot_us.lock();
        let clock = self.clock_us.load(Ordering::Acquire).max(0);
        let t = match *last {
            Some(prev) if clock <= prev => prev + 1,
            _ => clock,
        };
        let snap = self.compute(t);
        *last = Some(t);
        snap
    }

    fn compute(&self, t_us: i64) -> FocusSnapshot {
        let window_s = self.window_us as f64 / 1e6;
        let lo = t_us.saturating_sub(self.window_us);
        let read = |camera| {
            let mut w = self.camera(camera).lock();
            let count = w.count_in(lo, t_us);
            let rate = count as f64 * 1e6 / self.window_us as f64;
            if rate > w.peak {
                w.peak = rate;
            }
            (count, rate, w.peak)
        };
        let (left_count, left_rate, left_peak) = read(Camera::Left);
        let (right_count, right_rate, right_peak) = read(Camera::Right);
        let ratio_percent = stereo_count_ratio(left_count, right_count)
            .ok()
            .map(|r| r.ratio_percent);
        FocusSnapshot {
            t: t_us as f64 / 1e6,
            left_rate,
            right_rate,
            ratio_percent,
            left_peak,
            right_peak,
            in_focus: in_focus(
                left_rate,
                right_rate,
                left_peak,
                right_peak,
                ratio_percent,
                &self.config,
            ),
            window: window_s,
        }
    }

    /// Starts a new peak session; the next snapshot's peaks equal its rates.
    pub fn reset_peaks(&self) {
        self.left.lock().peak = 0.0;
        self.right.lock().peak = 0.0;
    }

    /// Events currently retained for `camera`.
    pub fn retained(&self, camera: Camera) -> usize {
        self.camera(camera).lock().times.len()
    }
}
