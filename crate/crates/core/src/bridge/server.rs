use std::collections::BTreeMap;
use std::future::Future;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use serde_json::Value;
use tokio::net::TcpListener;
use tokio::sync::mpsc;
use tokio::time::{Instant, MissedTickBehavior};

use crate::error::{Error, Result};
use crate::sim::Scenario;

use super::session::{error_reply, BridgeOptions, SessionState};

/// Wall period of the pacing loop.
const TICK: Duration = Duration::from_millis(2);
/// Outbound messages buffered per client before it is dropped as stalled.
const CLIENT_BUFFER: usize = 4096;

enum Inbound {
    Connect { id: u64, tx: mpsc::Sender<String> },
    Text { id: u64, text: String },
    Disconnect { id: u64 },
}

#[derive(Clone)]
struct AppState {
    inbound: mpsc::UnboundedSender<Inbound>,
    next_id: Arc<AtomicU64>,
}

/// A bound but not yet running bridge.
pub struct BridgeServer {
    listener: TcpListener,
    session: SessionState,
}

impl BridgeServer {
    /// Binds 127.0.0.1:`port`; port 0 picks a free port.
    pub async fn bind(scenario: Scenario, options: BridgeOptions, port: u16) -> Result<Self> {
        let session = SessionState::new(scenario, options)?;
        let addr = SocketAddr::from(([127, 0, 0, 1], port));
        let listener = TcpListener::bind(addr)
            .await
            .map_err(|e| Error::io(format!("binding {addr}"), e))?;
        Ok(Self { listener, session })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        self.listener
            .local_addr()
            .map_err(|e| Error::io("reading the bound address", e))
    }

    /// Serves until `shutdown` resolves.
    pub async fn run(self, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<()> {
        let (tx, rx) = mpsc::unbounded_channel();
        let (stop_tx, stop_rx) = tokio::sync::watch::channel(false);
        let sim = tokio::spawn(pace(self.session, rx, stop_rx));
        let app = Router::new().route("/ws", get(upgrade)).with_state(AppState {
            inbound: tx,
            next_id: Arc::new(AtomicU64::new(1)),
        });
        let served = axum::serve(self.listener, app)
            .with_graceful_shutdown(async move {
                shutdown.await;
                let _ = stop_tx.send(true);
            })
            .await;
        let _ = sim.await;
        served.map_err(|e| Error::io("serving", e))
    }
}

/// Runs a bridge on its own runtime until Ctrl-C.
pub fn serve_blocking(scenario: Scenario, port: u16) -> Result<()> {
    let rt = tokio::runtime::Runtime::new().map_err(|e| Error::io("starting the runtime", e))?;
    rt.block_on(async move {
        let server = BridgeServer::bind(scenario, BridgeOptions::default(), port).await?;
        log::info!("bridge listening on {}", server.local_addr()?);
        server
            .run(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    })
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| client(socket, state))
}

async fn client(socket: WebSocket, state: AppState) {
    let id = state.next_id.fetch_add(1, Ordering::Relaxed);
    let (out_tx, mut out_rx) = mpsc::channel::<String>(CLIENT_BUFFER);
    if state.inbound.send(Inbound::Connect { id, tx: out_tx }).is_err() {
        return;
    }
    let (mut sink, mut stream) = socket.split();
    let writer = tokio::spawn(async move {
        while let Some(text) = out_rx.recv().await {
            if sink.send(Message::Text(text)).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });
    while let Some(Ok(msg)) = stream.next().await {
        let text = match msg {
            Message::Text(t) => t,
            Message::Binary(_) => "<binary frame>".to_string(),
            Message::Close(_) => break,
            Message::Ping(_) | Message::Pong(_) => continue,
        };
        if state.inbound.send(Inbound::Text { id, text }).is_err() {
            break;
        }
    }
    let _ = state.inbound.send(Inbound::Disconnect { id });
    writer.abort();
}

/// The single context owning the session: applies inbound messages in
/// arrival order and advances the simulation against the wall clock. The
/// first connected client controls; later ones observe.
async fn pace(
    mut session: SessionState,
    mut rx: mpsc::UnboundedReceiver<Inbound>,
    mut stop: tokio::sync::watch::Receiver<bool>,
) {
    let start = Instant::now();
    let mut tick = tokio::time::interval(TICK);
    tick.set_missed_tick_behavior(MissedTickBehavior::Skip);
    let mut clients: BTreeMap<u64, mpsc::Sender<String>> = BTreeMap::new();
    let mut controller: Option<u64> = None;
    let send = |clients: &mut BTreeMap<u64, mpsc::Sender<String>>, id: u64, v: &Value| {
        if let Some(tx) = clients.get(&id) {
            if tx.try_send(v.to_string()).is_err() {
                clients.remove(&id);
            }
        }
    };
    loop {
        tokio::select! {
            _ = tick.tick() => {
                let now = start.elapsed().as_secs_f64();
                let states = match session.advance_to(now) {
                    Ok(states) => states,
                    Err(e) => {
                        let _ = session.reset();
                        vec![error_reply(format!("{e}; session reset"))]
                    }
                };
                for st in &states {
                    let ids: Vec<u64> = clients.keys().copied().collect();
                    for id in ids {
                        send(&mut clients, id, st);
                    }
                }
                if controller.is_some_and(|c| !clients.contains_key(&c)) {
                    session.release_input();
                    controller = clients.keys().next().copied();
                }
            }
            msg = rx.recv() => {
                let now = start.elapsed().as_secs_f64();
                match msg {
                    None => break,
                    Some(Inbound::Connect { id, tx }) => {
                        clients.insert(id, tx);
                        controller.get_or_insert(id);
                        let mut hello = session.hello_message();
                        hello["role"] = Value::from(if controller == Some(id) { "controller" } else { "observer" });
                        send(&mut clients, id, &hello);
                    }
                    Some(Inbound::Text { id, text }) => {
                        let reply = if controller == Some(id) {
                            session.handle_client_message(&text, now)
                        } else {
                            error_reply("observer: another client holds control")
                        };
                        send(&mut clients, id, &reply);
                    }
                    Some(Inbound::Disconnect { id }) => {
                        clients.remove(&id);
                        if controller == Some(id) {
                            session.release_input();
                            controller = clients.keys().next().copied();
                        }
                    }
                }
            }
            _ = stop.changed() => break,
        }
    }
}
