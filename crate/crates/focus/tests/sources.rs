use std::io::Cursor;
use std::sync::Arc;

use evbench_core::ingest::write_events_binary;
use evbench_core::synth::{synth_event_rate_stream, RateProfile};
use evbench_focus::{ingest_reader, replay_paced, Camera, FocusConfig, FocusService};
use tokio::time::Instant;

#[test]
fn binary_reader_feeds_the_window() {
    let stream = synth_event_rate_stream(&RateProfile::constant(2000.0, 1.0), 32, 32, 5).unwrap();
    let mut buf = Vec::new();
    write_events_binary(&stream, &mut buf).unwrap();
    let svc = FocusService::new(FocusConfig::default()).unwrap();
    let n = ingest_reader(&svc, Camera::Left, Cursor::new(buf), 64).unwrap();
    assert_eq!(n, stream.len());
    let last = stream.events().last().unwrap().t_us;
    let expected = stream
        .events()
        .iter()
        .filter(|e| e.t_us >= last + 1 - 100_000 && e.t_us <= last)
        .count();
    let s = svc.snapshot_at(last + 1);
    assert_eq!(s.left_rate, expected as f64 * 10.0);
}

#[test]
fn truncated_binary_stream_is_an_error() {
    let stream = synth_event_rate_stream(&RateProfile::constant(100.0, 1.0), 8, 8, 1).unwrap();
    let mut buf = Vec::new();
    write_events_binary(&stream, &mut buf).unwrap();
    buf.pop();
    let svc = FocusService::new(FocusConfig::default()).unwrap();
    assert!(ingest_reader(&svc, Camera::Right, Cursor::new(buf), 16).is_err());
}

#[tokio::test]
async fn paced_replay_delivers_every_event() {
    let stream = synth_event_rate_stream(&RateProfile::constant(1000.0, 0.5), 16, 16, 3).unwrap();
    let svc = Arc::new(FocusService::new(FocusConfig::default()).unwrap());
    let started = Instant::now();
    let n = replay_paced(Arc::clone(&svc), Camera::Left, stream.clone(), 0, started, 20.0)
        .await
        .unwrap();
    assert_eq!(n, stream.len());
    // 0.5 s of stream at 20x takes at least 25 ms of wall time
    assert!(started.elapsed().as_millis() >= 20);
    let s = svc.snapshot();
    assert!(s.t * 1e6 >= stream.events().last().unwrap().t_us as f64);
}
