//! Live stereo focus assist.
//!
//! Two cameras stream events into per-camera sliding windows. At a fixed
//! cadence the service publishes both event rates, their session peaks, the
//! stereo count ratio and an advisory in-focus flag over a WebSocket.

mod ingest;
mod server;
mod state;

pub use ingest::{ingest_reader, open_source, replay_offline, replay_paced, SourceError};
pub use server::{router, serve, spawn_ticker, AppState};
pub use state::{
    in_focus, Camera, FocusConfig, FocusError, FocusService, FocusSnapshot, StimulusConfig,
    StimulusKind,
};
