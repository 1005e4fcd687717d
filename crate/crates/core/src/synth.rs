//! Analytic motion and event-rate fixtures.
//!
//! Trajectories come with closed-form velocities so metric tests never rely
//! on numerical differentiation.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Pose, Rotation};
use crate::ingest::{Event, EventStream, Polarity, Trajectory, TrajectorySample};
use crate::metrics::VelocitySample;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be non-negative and finite, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("rate profile breakpoints must be strictly increasing and end before {end}")]
    InvalidProfile { end: f64 },
    #[error("event resolution {0}x{1} is empty")]
    EmptyResolution(u16, u16),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PatternKind {
    /// Straight line along +x at constant speed, fixed orientation.
    Line { speed: f64 },
    /// Planar circle about the origin; the body yaws with the heading.
    Circle { radius: f64, rate: f64 },
    /// Figure-eight `x = a·sin(Ωt)`, `y = a/2·sin(2Ωt)` with coupled yaw and
    /// roll oscillation.
    Lemniscate { scale: f64, rate: f64 },
    /// Circle traversed at `rate` while the body spins at `spin` about z.
    SpinCircle { radius: f64, rate: f64, spin: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionPattern {
    pub kind: PatternKind,
    pub duration: f64,
    pub sample_hz: f64,
}

impl MotionPattern {
    pub fn new(kind: PatternKind, duration: f64, sample_hz: f64) -> Self {
        Self {
            kind,
            duration,
            sample_hz,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        positive("duration", self.duration)?;
        positive("sample_hz", self.sample_hz)?;
        let check = |name, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(SynthError::NonPositive { name, value: v })
            }
        };
        match self.kind {
            PatternKind::Line { speed } => check("speed", speed),
            PatternKind::Circle { radius, rate } => {
                positive("radius", radius)?;
                check("rate", rate)
            }
            PatternKind::Lemniscate { scale, rate } => {
                positive("scale", scale)?;
                check("rate", rate)
            }
            PatternKind::SpinCircle { radius, rate, spin } => {
                positive("radius", radius)?;
                check("rate", rate)?;
                check("spin", spin)
            }
        }
    }

    /// Pose, world-frame linear velocity and body-frame angular velocity at `t`.
    pub fn state_at(&self, t: f64) -> (Pose, Vector3<f64>, Vector3<f64>) {
        match self.kind {
            PatternKind::Line { speed } => (
                Pose::from_translation(Vector3::new(speed * t, 0.0, 0.0)),
                Vector3::new(speed, 0.0, 0.0),
                Vector3::zeros(),
            ),
            PatternKind::Circle { radius, rate } => {
                let (s, c) = (rate * t).sin_cos();
                (
                    Pose::new(
                        Rotation::rot_z(rate * t),
                        Vector3::new(radius * c, radius * s, 0.0),
                    ),
                    Vector3::new(-radius * rate * s, radius * rate * c, 0.0),
                    Vector3::new(0.0, 0.0, rate),
                )
            }
            PatternKind::Lemniscate { scale, rate } => {
                const YAW: f64 = 0.5;
                const ROLL: f64 = 0.3;
                let (s1, c1) = (rate * t).sin_cos();
                let (s2, c2) = (2.0 * rate * t).sin_cos();
                let (yaw, yaw_dot) = (YAW * s1, YAW * rate * c1);
                let (roll, roll_dot) = (ROLL * s2, 2.0 * ROLL * rate * c2);
                let (sr, cr) = roll.sin_cos();
                (
                    Pose::new(
                        Rotation::rot_z(yaw) * Rotation::rot_x(roll),
                        Vector3::new(scale * s1, 0.5 * scale * s2, 0.0),
                    ),
                    Vector3::new(scale * rate * c1, scale * rate * c2, 0.0),
                    Vector3::new(roll_dot, yaw_dot * sr, yaw_dot * cr),
                )
            }
            PatternKind::SpinCircle { radius, rate, spin } => {
                let (s, c) = (rate * t).sin_cos();
                (
                    Pose::new(
                        Rotation::rot_z(spin * t),
                        Vector3::new(radius * c, radius * s, 0.0),
                    ),
                    Vector3::new(-radius * rate * s, radius * rate * c, 0.0),
                    Vector3::new(0.0, 0.0, spin),
                )
            }
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64, SynthError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(SynthError::NonPositive { name, value })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<f64, SynthError> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(SynthError::Negative { name, value })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthTrajectory {
    pub trajectory: Trajectory,
    /// Exact derivatives at each sample.
    pub velocities: Vec<VelocitySample>,
}

/// Samples `pattern` at `t_i = i / sample_hz` for `t_i ≤ duration`.
pub fn synth_trajectory(pattern: &MotionPattern) -> Result<SynthTrajectory, SynthError> {
    pattern.validate()?;
    let n = (pattern.duration * pattern.sample_hz).floor() as usize + 1;
    let mut samples = Vec::with_capacity(n);
    let mut velocities = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / pattern.sample_hz;
        let (pose, v, omega) = pattern.state_at(t);
        samples.push(TrajectorySample::new(t, pose));
        velocities.push(VelocitySample::new(t, v, Some(omega)));
    }
    let trajectory = Trajectory::new(samples).expect("sample times are strictly increasing");
    Ok(SynthTrajectory {
        trajectory,
        velocities,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Per-axis standard deviation of additive position noise, metres.
    pub position_sigma: f64,
    /// Per-axis standard deviation of the right-multiplied rotation
    /// perturbation `exp(n)`, radians.
    pub rotation_sigma: f64,
    pub seed: u64,
}

/// Adds independent Gaussian noise to every pose. Zero sigmas leave the
/// trajectory untouched.
pub fn perturb_trajectory(traj: &Trajectory, noise: &NoiseModel) -> Result<Trajectory, SynthError> {
    let sp = non_negative("position_sigma", noise.position_sigma)?;
    let sr = non_negative("rotation_sigma", noise.rotation_sigma)?;
    if sp == 0.0 && sr == 0.0 {
        return Ok(traj.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let np = Normal::new(0.0, sp).expect("sigma validated");
    let nr = Normal::new(0.0, sr).expect("sigma validated");
    let mut draw = |d: &Normal<f64>| Vector3::from_fn(|_, _| d.sample(&mut rng));
    let samples = traj
        .iter()
        .map(|s| {
            let dp = draw(&np);
            let dr = draw(&nr);
            let rotation = if sr == 0.0 {
                s.pose.rotation
            } else {
                s.pose.rotation * Rotation::exp(&dr)
            };
            let translation = if sp == 0.0 {
                s.pose.translation
            } else {
                s.pose.translation + dp
            };
            TrajectorySample::new(s.t, Pose::new(rotation, translation))
        })
        .collect();
    Ok(Trajectory::new(samples).expect("times are unchanged"))
}

/// Piecewise-constant event rate. Breakpoint `(t_k, r_k)` holds rate `r_k`
/// (events/s) from `t_k` to the next breakpoint or `end`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateProfile {
    pub breakpoints: Vec<(f64, f64)>,
    pub end: f64,
}

impl RateProfile {
    pub fn constant(rate: f64, duration: f64) -> Self {
        Self {
            breakpoints: vec![(0.0, rate)],
            end: duration,
        }
    }

    /// `before` on `[0, at)`, `after` on `[at, end)`.
    pub fn step(before: f64, after: f64, at: f64, end: f64) -> Self {
        Self {
            breakpoints: vec![(0.0, before), (at, after)],
            end,
        }
    }

    /// Expected rate at `t`, zero outside the profile.
    pub fn rate_at(&self, t: f64) -> f64 {
        if t >= self.end {
            return 0.0;
        }
        self.breakpoints
            .iter()
            .rev()
            .find(|(tk, _)| *tk <= t)
            .map_or(0.0, |(_, r)| *r)
    }

    fn segments(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints.iter().enumerate().map(|(i, &(t0, r))| {
            let t1 = self.breakpoints.get(i + 1).map_or(self.end, |b| b.0);
            (t0, t1, r)
        })
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad = || SynthError::InvalidProfile { end: self.end };
        if !self.end.is_finite() {
            return Err(bad());
        }
        for &(t, r) in &self.breakpoints {
            if !t.is_finite() || t < 0.0 || t >= self.end {
                return Err(bad());
            }
            non_negative("rate", r)?;
        }
        if self.breakpoints.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(bad());
        }
        Ok(())
    }
}

/// Inhomogeneous Poisson event stream with uniformly random pixels and
/// polarities. Each segment draws a Poisson count and places that many
/// events uniformly in time, microsecond resolution.
pub fn synth_event_rate_stream(
    profile: &RateProfile,
    width: u16,
    height: u16,
    seed: u64,
) -> Result<EventStream, SynthError> {
    if width == 0 || height == 0 {
        return Err(SynthError::EmptyResolution(width, height));
    }
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::new();
    for (t0, t1, rate) in profile.segments() {
        let lambda = rate * (t1 - t0);
        if lambda <= 0.0 {
            continue;
        }
        let count = Poisson::new(lambda).expect("lambda is positive").sample(&mut rng) as usize;
        let (lo, hi) = ((t0 * 1e6).round() as i64, (t1 * 1e6).round() as i64);
        if hi <= lo {
            continue;
        }
        let mut times: Vec<i64> = (0..count).map(|_| rng.random_range(lo..hi)).collect();
        times.sort_unstable();
        events.extend(times.into_iter().map(|t| {
            let polarity = if rng.random_bool(0.5) {
                Polarity::Positive
            } else {
                Polarity::Negative
            };
            Event::new(t, rng.random_range(0..width), rng.random_range(0..height), polarity)
        }));
    }
    Ok(EventStream::with_events(width, height, "synth", events)
        .expect("generated events are in range and ordered"))
}
