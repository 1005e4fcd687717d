use std::io::Read;
use std::sync::Arc;
use std::time::Duration;

use evbench_core::ingest::{BinaryEventReader, IngestError};
use evbench_core::{Event, EventStream};
use thiserror::Error;
use tokio::time::Instant;

use crate::state::{Camera, FocusError, FocusService, FocusSnapshot};

#[derive(Debug, Error)]
pub enum SourceError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Focus(#[from] FocusError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Deterministic replay without wall-clock pacing.
///
/// Snapshots fall on multiples of the cadence period, starting with the
/// first multiple after the earliest event. Each is taken after ingesting
/// every event strictly before it, for as long as either stream has events
/// at or after the previous snapshot.
pub fn replay_offline(
    service: &FocusService,
    left: &[Event],
    right: &[Event],
) -> Result<Vec<FocusSnapshot>, FocusError> {
    let period_us = ((1e6 / service.config().cadence_hz).round() as i64).max(1);
    let Some(start) = [left.first(), right.first()]
        .into_iter()
        .flatten()
        .map(|e| e.t_us)
        .min()
    else {
        return Ok(Vec::new());
    };
    let end = [left.last(), right.last()]
        .into_iter()
        .flatten()
        .map(|e| e.t_us)
        .max()
        .expect("non-empty");
    let (mut li, mut ri) = (0, 0);
    let mut out = Vec::new();
    let mut t = start.div_euclid(period_us) * period_us;
    while t <= end {
        t += period_us;
        let lj = li + left[li..].partition_point(|e| e.t_us < t);
        let rj = ri + right[ri..].partition_point(|e| e.t_us < t);
        service.ingest_batch(Camera::Left, &left[li..lj])?;
        service.ingest_batch(Camera::Right, &right[ri..rj])?;
        (li, ri) = (lj, rj);
        out.push(service.snapshot_at(t));
    }
    Ok(out)
}

/// Feeds one camera's stream into the service in real time: an event with
/// timestamp `t` is ingested `(t − origin_us) / speed` after `started`.
pub async fn replay_paced(
    service: Arc<FocusService>,
    camera: Camera,
    stream: EventStream,
    origin_us: i64,
    started: Instant,
    speed: f64,
) -> Result<usize, FocusError> {
    let tick = Duration::from_millis(5);
    let events = stream.events();
    let mut next = 0;
    while next < events.len() {
        let elapsed_us = (started.elapsed().as_secs_f64() * speed * 1e6) as i64;
        let now = origin_us + elapsed_us;
        let end = next + events[next..].partition_point(|e| e.t_us < now);
        service.ingest_batch(camera, &events[next..end])?;
        service.advance_clock(now);
        next = end;
        tokio::time::sleep(tick).await;
    }
    Ok(events.len())
}

/// Reads the packed binary event format from `reader` until end of stream,
/// ingesting in small batches. Blocking; run on a dedicated thread.
pub fn ingest_reader<R: Read>(
    service: &FocusService,
    camera: Camera,
    reader: R,
    batch: usize,
) -> Result<usize, SourceError> {
    let mut reader = BinaryEventReader::new(reader)?;
    let mut total = 0;
    loop {
        let events = reader.next_batch(batch.max(1))?;
        if events.is_empty() {
            return Ok(total);
        }
        total += service.ingest_batch(camera, &events)?;
    }
}

/// Opens a live source: `tcp://host:port` connects to a socket, anything
/// else is opened as a file or named pipe.
pub fn open_source(spec: &str) -> std::io::Result<Box<dyn Read + Send>> {
    match spec.strip_prefix("tcp://") {
        Some(addr) => Ok(Box::new(std::net::TcpStream::connect(addr)?)),
        None => Ok(Box::new(std::io::BufReader::new(std::fs::File::open(spec)?))),
    }
}
