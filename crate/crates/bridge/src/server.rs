// SPDX-License-Identifier: Apache-2.0 OR MIT

use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{IntoResponse, Json, Response};
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use loomcas::sim::{write_csv, ScenarioConfig, TraceRecord};
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc};
use tokio::time::MissedTickBehavior;

use crate::protocol::{Frame, ServerMessage, PROTOCOL_VERSION};
use crate::session::Session;

#[derive(Debug, Clone)]
pub struct BridgeConfig {
    /// Every new connection starts from this scenario.
    pub scenario: ScenarioConfig,
    /// Writes each session's trace as CSV here on disconnect and on restart.
    pub trace_dir: Option<PathBuf>,
    /// Outbound frames buffered per client before the oldest are dropped.
    pub queue_depth: usize,
}

impl BridgeConfig {
    pub fn new(scenario: ScenarioConfig) -> Self {
        Self {
            scenario,
            trace_dir: None,
            queue_depth: 16,
        }
    }
}

struct Shared {
    cfg: BridgeConfig,
    next_id: AtomicU64,
}

pub fn router(cfg: BridgeConfig) -> Router {
    let shared = Arc::new(Shared {
        cfg,
        next_id: AtomicU64::new(1),
    });
    Router::new().route("/", get(info)).route("/ws", get(upgrade)).with_state(shared)
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener, cfg: BridgeConfig) -> io::Result<()> {
    // Reject a bad base scenario before accepting anyone.
    Session::new(cfg.scenario.clone()).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))?;
    log::info!("bridge listening on {}", listener.local_addr()?);
    axum::serve(listener, router(cfg)).await
}

async fn info(State(shared): State<Arc<Shared>>) -> Json<serde_json::Value> {
    Json(serde_json::json!({
        "protocol": PROTOCOL_VERSION,
        "scenario": shared.cfg.scenario.name,
        "websocket": "/ws",
    }))
}

async fn upgrade(ws: WebSocketUpgrade, State(shared): State<Arc<Shared>>) -> Response {
    let id = shared.next_id.fetch_add(1, Ordering::Relaxed);
    ws.on_upgrade(move |socket| run_session(socket, shared, id)).into_response()
}

enum Inbound {
    Text(String),
    Binary,
}

async fn run_session(socket: WebSocket, shared: Arc<Shared>, id: u64) {
    let cfg = &shared.cfg;
    let (mut sink, mut stream) = socket.split();
    let (out_tx, mut out_rx) = broadcast::channel::<String>(cfg.queue_depth.max(1));
    let (in_tx, mut in_rx) = mpsc::channel::<Inbound>(64);

    let writer = tokio::spawn(async move {
        loop {
            match out_rx.recv().await {
                Ok(text) => {
                    if sink.send(Message::Text(text.into())).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(n)) => log::debug!("session {id}: dropped {n} stale frames"),
                Err(broadcast::error::RecvError::Closed) => break,
            }
        }
        let _ = sink.close().await;
    });
    let reader = tokio::spawn(async move {
        while let Some(Ok(msg)) = stream.next().await {
            let item = match msg {
                Message::Text(t) => Inbound::Text(t.to_string()),
                Message::Binary(_) => Inbound::Binary,
                Message::Close(_) => break,
                _ => continue,
            };
            if in_tx.send(item).await.is_err() {
                break;
            }
        }
    });

    let send = |f: Frame| {
        let _ = out_tx.send(f.to_json());
    };
    let mut session = match Session::new(cfg.scenario.clone()) {
        Ok(s) => s.recording(cfg.trace_dir.is_some()),
        Err(e) => {
            send(Frame::new(ServerMessage::Error {
                message: format!("scenario rejected: {e}"),
            }));
            drop(out_tx);
            let _ = writer.await;
            reader.abort();
            return;
        }
    };
    log::info!("session {id}: started '{}'", session.config().name);
    send(session.hello());

    let mut period = session.period();
    let mut ticker = pacer(period);
    let mut segment = 0;
    loop {
        tokio::select! {
            _ = ticker.tick() => match session.tick() {
                Ok(Some(f)) => send(f),
                Ok(None) => {}
                Err(e) => {
                    send(Frame::new(ServerMessage::Error { message: format!("simulation stopped: {e}") }));
                    break;
                }
            },
            inbound = in_rx.recv() => match inbound {
                Some(Inbound::Text(text)) => {
                    let generation = session.generation();
                    for f in session.handle_text(&text) {
                        send(f);
                    }
                    if session.generation() != generation {
                        // No tick ran since the restart, so this is all pre-restart.
                        save_trace(cfg, id, segment, &session.take_trace());
                        segment += 1;
                    }
                    if session.period() != period {
                        period = session.period();
                        ticker = pacer(period);
                    }
                }
                Some(Inbound::Binary) => send(Frame::new(ServerMessage::Error {
                    message: "binary frames are not supported; send JSON text".into(),
                })),
                None => break,
            },
        }
    }
    save_trace(cfg, id, segment, &session.take_trace());
    log::info!("session {id}: closed");
    reader.abort();
    drop(out_tx);
    let _ = writer.await;
}

fn pacer(period: f64) -> tokio::time::Interval {
    let mut i = tokio::time::interval(Duration::from_secs_f64(period));
    i.set_missed_tick_behavior(MissedTickBehavior::Skip);
    i
}

fn save_trace(cfg: &BridgeConfig, id: u64, segment: usize, trace: &[TraceRecord]) {
    let Some(dir) = &cfg.trace_dir else { return };
    if trace.is_empty() {
        return;
    }
    let path = dir.join(format!("session-{id}-{segment}.csv"));
    let result = fs::create_dir_all(dir)
        .and_then(|_| File::create(&path))
        .and_then(|f| write_csv(BufWriter::new(f), trace).map_err(io::Error::other));
    match result {
        Ok(()) => log::info!("session {id}: wrote {}", path.display()),
        Err(e) => log::warn!("session {id}: could not write {}: {e}", path.display()),
    }
}
