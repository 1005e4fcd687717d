use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Subcommand};
use evbench_core::EventStream;
use evbench_focus::{
    ingest_reader, open_source, replay_offline, replay_paced, serve, AppState, Camera,
    FocusConfig, FocusService,
};

use crate::error::{require_file, CliError};
use crate::io::read_events;

#[derive(Subcommand, Debug)]
pub enum FocusCommand {
    /// Serve live rates from two binary event sources (files, FIFOs or tcp://host:port).
    Serve(ServeArgs),
    /// Replay two recorded binary streams.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ServiceArgs {
    /// Sliding window, seconds.
    #[arg(long, default_value_t = 0.1)]
    pub window: f64,
    /// Snapshot rate, Hz.
    #[arg(long, default_value_t = 10.0)]
    pub cadence: f64,
    #[arg(long, default_value_t = 0.9)]
    pub peak_fraction: f64,
    #[arg(long, default_value_t = 10.0)]
    pub ratio_threshold: f64,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
}

impl ServiceArgs {
    fn config(&self) -> FocusConfig {
        FocusConfig {
            window: self.window,
            cadence_hz: self.cadence,
            peak_fraction: self.peak_fraction,
            ratio_threshold_percent: self.ratio_threshold,
            ..FocusConfig::default()
        }
    }
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long)]
    pub left: String,
    #[arg(long)]
    pub right: String,
    #[command(flatten)]
    pub service: ServiceArgs,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    #[arg(long)]
    pub left: PathBuf,
    #[arg(long)]
    pub right: PathBuf,
    /// Playback speed relative to real time.
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
    /// Print snapshots as JSON lines without pacing or serving.
    #[arg(long)]
    pub offline: bool,
    #[command(flatten)]
    pub service: ServiceArgs,
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(CliError::other)
}

fn new_service(args: &ServiceArgs) -> Result<Arc<FocusService>, CliError> {
    Ok(Arc::new(FocusService::new(args.config()).map_err(CliError::other)?))
}

pub fn run(c: FocusCommand) -> Result<(), CliError> {
    match c {
        FocusCommand::Serve(a) => run_serve(a),
        FocusCommand::Replay(a) => run_replay(a),
    }
}

fn run_serve(a: ServeArgs) -> Result<(), CliError> {
    let service = new_service(&a.service)?;
    for (camera, spec) in [(Camera::Left, a.left.clone()), (Camera::Right, a.right.clone())] {
        let source = open_source(&spec)
            .map_err(|e| CliError::new(CliError::MISSING_FILE, format!("{spec}: {e}")))?;
        let svc = Arc::clone(&service);
        std::thread::spawn(move || match ingest_reader(&svc, camera, source, 256) {
            Ok(n) => tracing::info!("{camera:?} source closed after {n} events"),
            Err(e) => tracing::error!("{camera:?} source failed: {e}"),
        });
    }
    runtime()?.block_on(async move {
        let listener = tokio::net::TcpListener::bind(a.service.addr)
            .await
            .map_err(CliError::other)?;
        tracing::info!("focus service listening on {}", a.service.addr);
        serve(listener, AppState::new(service))
            .await
            .map_err(CliError::other)
    })
}

fn run_replay(a: ReplayArgs) -> Result<(), CliError> {
    require_file(&a.left)?;
    require_file(&a.right)?;
    let left = read_events(&a.left, "left", None)?;
    let right = read_events(&a.right, "right", None)?;
    let service = new_service(&a.service)?;
    if a.offline {
        let snaps = replay_offline(&service, left.events(), right.events()).map_err(CliError::other)?;
        let mut out = std::io::stdout().lock();
        for s in snaps {
            let line = serde_json::to_string(&s).map_err(CliError::other)?;
            writeln!(out, "{line}").map_err(CliError::other)?;
        }
        return Ok(());
    }
    if !(a.speed > 0.0) {
        return Err(CliError::other("--speed must be positive"));
    }
    runtime()?.block_on(paced(service, left, right, a.speed, a.service.addr))
}

async fn paced(
    service: Arc<FocusService>,
    left: EventStream,
    right: EventStream,
    speed: f64,
    addr: SocketAddr,
) -> Result<(), CliError> {
    let origin = [left.events().first(), right.events().first()]
        .into_iter()
        .flatten()
        .map(|e| e.t_us)
        .min()
        .unwrap_or(0);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(CliError::other)?;
    tracing::info!("replaying at {speed}x, serving on {addr}");
    let started = tokio::time::Instant::now();
    let server = tokio::spawn(serve(listener, AppState::new(Arc::clone(&service))));
    for (camera, stream) in [(Camera::Left, left), (Camera::Right, right)] {
        let svc = Arc::clone(&service);
        tokio::spawn(async move {
            match replay_paced(svc, camera, stream, origin, started, speed).await {
                Ok(n) => tracing::info!("{camera:?} replay finished after {n} events"),
                Err(e) => tracing::error!("{camera:?} replay failed: {e}"),
            }
        });
    }
    server
        .await
        .map_err(CliError::other)?
        .map_err(CliError::other)
}
