use super::{EventStream, IngestError, Trajectory};

/// A hardware pulse as seen in a device's own data stream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyncMarker {
    pub pulse_index: u64,
    /// Device clock, microseconds.
    pub device_t: f64,
}

impl SyncMarker {
    pub fn new(pulse_index: u64, device_t: f64) -> Self {
        Self {
            pulse_index,
            device_t,
        }
    }
}

/// Piecewise-linear map from device microseconds to common-timeline seconds.
///
/// Exact at anchors; linear between them; beyond the first/last anchor the
/// nearest segment is extended.
#[derive(Clone, Debug, PartialEq)]
pub struct ClockMap {
    anchors: Vec<(f64, f64)>,
}

impl ClockMap {
    /// Anchors as `(device_us, common_s)`; both coordinates strictly increasing.
    pub fn from_anchors(anchors: Vec<(f64, f64)>) -> Result<Self, IngestError> {
        if anchors.len() < 2 {
            return Err(IngestError::TooFewMarkers(anchors.len()));
        }
        for (i, w) in anchors.windows(2).enumerate() {
            let ok = w[0].0.is_finite()
                && w[1].0.is_finite()
                && w[0].1.is_finite()
                && w[1].1.is_finite()
                && w[1].0 > w[0].0
                && w[1].1 > w[0].1;
            if !ok {
                return Err(IngestError::NonMonotoneMarkers(i + 1));
            }
        }
        Ok(Self { anchors })
    }

    /// Microseconds to seconds, no offset.
    pub fn identity() -> Self {
        Self {
            anchors: vec![(0.0, 0.0), (1e6, 1.0)],
        }
    }

    /// `common_s = device_us * 1e-6 + offset_s`.
    pub fn offset(offset_s: f64) -> Self {
        Self {
            anchors: vec![(0.0, offset_s), (1e6, 1.0 + offset_s)],
        }
    }

    pub fn anchors(&self) -> &[(f64, f64)] {
        &self.anchors
    }

    /// Device microseconds to common seconds.
    pub fn map(&self, device_us: f64) -> f64 {
        self.map_scaled(device_us, 1.0)
    }

    /// Device seconds to common seconds.
    pub fn map_seconds(&self, device_s: f64) -> f64 {
        self.map_scaled(device_s, 1e-6)
    }

    /// `scale` converts anchor device times into the unit of `x`.
    fn map_scaled(&self, x: f64, scale: f64) -> f64 {
        let a = &self.anchors;
        // index of the segment [a[k], a[k+1]] to use
        let k = match a.partition_point(|&(d, _)| d * scale <= x) {
            0 => 0,
            n if n >= a.len() => a.len() - 2,
            n => n - 1,
        };
        let (d0, c0) = (a[k].0 * scale, a[k].1);
        let (d1, c1) = (a[k + 1].0 * scale, a[k + 1].1);
        if x == d0 {
            return c0;
        }
        if x == d1 {
            return c1;
        }
        c0 + (c1 - c0) * ((x - d0) / (d1 - d0))
    }

    /// Re-times a trajectory whose timestamps are device seconds.
    pub fn apply_to_trajectory(&self, traj: &Trajectory) -> Trajectory {
        traj.map_times(|t| self.map_seconds(t))
    }

    /// Re-times events; the result stays in integer microseconds, rounded to
    /// the nearest microsecond of the common timeline.
    pub fn apply_to_events(&self, stream: &EventStream) -> EventStream {
        stream.map_events(|e| {
            let mut out = *e;
            out.t_us = (self.map(e.t_us as f64) * 1e6).round() as i64;
            out
        })
    }
}

/// Anchors marker `k` at `host_t0 + pulse_index_k / pulse_hz`.
pub fn build_clock_map(
    markers: &[SyncMarker],
    pulse_hz: f64,
    host_t0: f64,
) -> Result<ClockMap, IngestError> {
    if !(pulse_hz > 0.0 && pulse_hz.is_finite()) {
        return Err(IngestError::InvalidPulseRate(pulse_hz));
    }
    if markers.len() < 2 {
        return Err(IngestError::TooFewMarkers(markers.len()));
    }
    for (i, w) in markers.windows(2).enumerate() {
        if w[1].pulse_index <= w[0].pulse_index || w[1].device_t <= w[0].device_t {
            return Err(IngestError::NonMonotoneMarkers(i + 1));
        }
    }
    ClockMap::from_anchors(
        markers
            .iter()
            .map(|m| (m.device_t, host_t0 + m.pulse_index as f64 / pulse_hz))
            .collect(),
    )
}
