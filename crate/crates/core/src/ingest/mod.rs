//! Parsing of trajectories, velocity series and event streams, and mapping
//! of device clocks onto a common timeline.

mod clock;
mod events;
mod trajectory;
mod velocity;

use thiserror::Error;

pub use clock::{build_clock_map, ClockMap, SyncMarker};
pub use events::{
    parse_events, read_events_binary, read_events_csv, write_events_binary, write_events_csv,
    BinaryEventReader, Event, EventFormat, EventStream, Polarity, BINARY_MAGIC, BINARY_RECORD_LEN,
};
pub use trajectory::{parse_trajectory, write_trajectory, Trajectory, TrajectorySample};
pub use velocity::{parse_velocities, write_velocities};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate timestamp {t}")]
    DuplicateTimestamp { line: usize, t: f64 },
    #[error("line {line}: timestamp {t} is earlier than the previous sample")]
    Unsorted { line: usize, t: f64 },
    #[error("line {line}: quaternion norm {norm} deviates from 1 by more than 1e-3")]
    NonUnitQuaternion { line: usize, norm: f64 },
    #[error("event {index}: pixel ({x}, {y}) outside {width}x{height}")]
    CoordinateOutOfRange {
        index: usize,
        x: u64,
        y: u64,
        width: u16,
        height: u16,
    },
    #[error("event {index}: timestamp {t_us} us decreases")]
    DecreasingTimestamp { index: usize, t_us: i64 },
    #[error("event {index}: invalid polarity {value}")]
    InvalidPolarity { index: usize, value: i64 },
    #[error("event {index}: timestamp {t_us} us cannot be stored in the binary format")]
    TimestampOutOfRange { index: usize, t_us: i64 },
    #[error("sensor resolution {width}x{height} is empty")]
    EmptyResolution { width: u16, height: u16 },
    #[error("binary event stream does not start with magic \"EVB1\"")]
    BadMagic,
    #[error("binary event stream truncated inside a record")]
    Truncated,
    #[error("clock map needs at least 2 markers, got {0}")]
    TooFewMarkers(usize),
    #[error("clock markers must increase in both pulse index and device time (marker {0})")]
    NonMonotoneMarkers(usize),
    #[error("pulse rate must be positive and finite, got {0}")]
    InvalidPulseRate(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
