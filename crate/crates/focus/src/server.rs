use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use tokio::sync::broadcast;
use tokio::task::JoinHandle;

use crate::state::{FocusConfig, FocusService, FocusSnapshot};

#[derive(Clone)]
pub struct AppState {
    pub service: Arc<FocusService>,
    pub snapshots: broadcast::Sender<FocusSnapshot>,
}

impl AppState {
    pub fn new(service: Arc<FocusService>) -> Self {
        let (snapshots, _) = broadcast::channel(64);
        Self { service, snapshots }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/ws/focus", get(ws_focus))
        .route("/reset-peaks", post(reset_peaks))
        .route("/config", get(config))
        .with_state(state)
}

async fn config(State(state): State<AppState>) -> Json<FocusConfig> {
    Json(state.service.config().clone())
}

async fn reset_peaks(State(state): State<AppState>) -> impl IntoResponse {
    state.service.reset_peaks();
    StatusCode::NO_CONTENT
}

async fn ws_focus(ws: WebSocketUpgrade, State(state): State<AppState>) -> impl IntoResponse {
    let rx = state.snapshots.subscribe();
    ws.on_upgrade(move |socket| forward(socket, rx))
}

async fn forward(mut socket: WebSocket, mut rx: broadcast::Receiver<FocusSnapshot>) {
    loop {
        let snap = match rx.recv().await {
            Ok(s) => s,
            Err(broadcast::error::RecvError::Lagged(n)) => {
                tracing::debug!("websocket client skipped {n} snapshots");
                continue;
            }
            Err(broadcast::error::RecvError::Closed) => break,
        };
        let text = serde_json::to_string(&snap).expect("snapshot serializes");
        if socket.send(Message::Text(text.into())).await.is_err() {
            break;
        }
    }
}

/// Emits one snapshot per cadence tick to every websocket subscriber.
pub fn spawn_ticker(state: AppState) -> JoinHandle<()> {
    let period = Duration::from_secs_f64(1.0 / state.service.config().cadence_hz);
    tokio::spawn(async move {
        let mut interval = tokio::time::interval(period);
        interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
        loop {
            interval.tick().await;
            // no subscribers is not an error
            let _ = state.snapshots.send(state.service.snapshot());
        }
    })
}

/// Serves the endpoints on `listener` with a running ticker until the
/// listener fails.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    let ticker = spawn_ticker(state.clone());
    let result = axum::serve(listener, router(state)).await;
    ticker.abort();
    result
}
