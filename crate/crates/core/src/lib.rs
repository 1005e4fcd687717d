//! Evaluation and dataset diagnostics for event-camera state estimation.
//!
//! The crate is organized bottom-up: [`geometry`] provides SE(3) math,
//! [`ingest`] reads trajectories and event streams, [`alignment`] pairs and
//! registers estimates against ground truth, [`metrics`] computes pose and
//! velocity errors with weighted precision curves, [`diagnostics`] scores
//! dataset quality and [`synth`] generates analytic fixtures.

pub mod alignment;
pub mod diagnostics;
pub mod geometry;
pub mod ingest;
pub mod metrics;
pub mod report;
pub mod synth;

pub use geometry::{Pose, Rotation, Twist};
pub use ingest::{Event, EventStream, Trajectory, TrajectorySample};
