//! The bridge over a real WebSocket connection.

use std::net::SocketAddr;
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use serde_json::Value;
use tokio::net::TcpStream;
use tokio::sync::oneshot;
use tokio::time::{timeout, Instant};
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

use telesim::bridge::{BridgeOptions, BridgeServer};
use telesim::sim::{ControllerMode, Scenario};

type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

struct Running {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<telesim::Result<()>>,
}

impl Running {
    async fn shutdown(mut self) {
        let _ = self.stop.take().unwrap().send(());
        timeout(Duration::from_secs(5), self.task)
            .await
            .expect("server stops")
            .unwrap()
            .unwrap();
    }
}

async fn start() -> Running {
    let sc = Scenario::standard(ControllerMode::Kinematic);
    let server = BridgeServer::bind(sc, BridgeOptions::default(), 0).await.unwrap();
    let addr = server.local_addr().unwrap();
    let (tx, rx) = oneshot::channel();
    let task = tokio::spawn(server.run(async {
        let _ = rx.await;
    }));
    Running {
        addr,
        stop: Some(tx),
        task,
    }
}

async fn connect(addr: SocketAddr) -> Ws {
    connect_async(format!("ws://{addr}/ws")).await.unwrap().0
}

async fn next_json(ws: &mut Ws) -> Value {
    loop {
        let msg = timeout(Duration::from_secs(5), ws.next())
            .await
            .expect("message within 5 s")
            .expect("stream open")
            .unwrap();
        if let Message::Text(t) = msg {
            return serde_json::from_str(&t).unwrap();
        }
    }
}

/// Next message that is not a periodic state.
async fn next_reply(ws: &mut Ws) -> Value {
    loop {
        let v = next_json(ws).await;
        if v["type"] != "state" {
            return v;
        }
    }
}

async fn send(ws: &mut Ws, text: &str) {
    ws.send(Message::Text(text.to_string())).await.unwrap();
}

fn tau1_is_zero(state: &Value) -> bool {
    state["tau1_star"]
        .as_array()
        .unwrap()
        .iter()
        .all(|x| x.as_f64() == Some(0.0))
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn hello_then_states_at_the_configured_rate() {
    let srv = start().await;
    let mut ws = connect(srv.addr).await;
    let hello = next_json(&mut ws).await;
    assert_eq!(hello["type"], "hello");
    assert_eq!(hello["role"], "controller");
    assert_eq!(hello["dof"], 2);

    let started = Instant::now();
    let mut states = Vec::new();
    while started.elapsed() < Duration::from_secs(2) {
        let v = next_json(&mut ws).await;
        assert_eq!(v["type"], "state");
        states.push(v["t"].as_f64().unwrap());
    }
    // 33 ms of sim time per state at rate 1: about 60 in 2 s.
    assert!((50..=70).contains(&states.len()), "{} states", states.len());
    assert!(states.windows(2).all(|w| w[1] > w[0]));
    srv.shutdown().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn every_message_gets_one_reply() {
    let srv = start().await;
    let mut ws = connect(srv.addr).await;
    next_json(&mut ws).await;

    send(&mut ws, r#"{"type":"set_rate","value":100}"#).await;
    let ack = next_reply(&mut ws).await;
    assert_eq!(ack["type"], "ack");
    assert_eq!(ack["of"], "set_rate");
    assert_eq!(ack["rate"], 10.0);

    for bad in [
        "not json",
        r#"{"type":"warp"}"#,
        r#"{"type":"set_target","x":"left"}"#,
    ] {
        send(&mut ws, bad).await;
        assert_eq!(next_reply(&mut ws).await["type"], "error", "{bad}");
    }
    ws.send(Message::Binary(vec![1, 2, 3])).await.unwrap();
    assert_eq!(next_reply(&mut ws).await["type"], "error");

    send(&mut ws, r#"{"type":"pause"}"#).await;
    let ack = next_reply(&mut ws).await;
    assert_eq!(ack["paused"], true);
    srv.shutdown().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn second_client_observes_until_the_controller_leaves() {
    let srv = start().await;
    let mut first = connect(srv.addr).await;
    assert_eq!(next_json(&mut first).await["role"], "controller");
    let mut second = connect(srv.addr).await;
    assert_eq!(next_json(&mut second).await["role"], "observer");

    send(&mut second, r#"{"type":"pause"}"#).await;
    let err = next_reply(&mut second).await;
    assert_eq!(err["type"], "error");
    assert!(err["detail"].as_str().unwrap().contains("observer"));

    first.close(None).await.unwrap();
    drop(first);
    tokio::time::sleep(Duration::from_millis(100)).await;
    send(&mut second, r#"{"type":"pause"}"#).await;
    assert_eq!(next_reply(&mut second).await["type"], "ack");
    srv.shutdown().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn dead_man_zeroes_the_operator_torque() {
    let srv = start().await;
    let mut ws = connect(srv.addr).await;
    next_json(&mut ws).await;
    send(&mut ws, r#"{"type":"set_target","x":0.3,"y":0.5}"#).await;
    assert_eq!(next_reply(&mut ws).await["type"], "ack");
    let released = Instant::now();

    let mut saw_torque = false;
    loop {
        let v = next_json(&mut ws).await;
        if v["type"] != "state" {
            continue;
        }
        let elapsed = released.elapsed();
        if elapsed < Duration::from_millis(400) {
            saw_torque |= !tau1_is_zero(&v);
        } else if elapsed > Duration::from_millis(600) {
            assert!(
                tau1_is_zero(&v),
                "τ1* still applied {elapsed:?} after the last input: {v}"
            );
            break;
        }
    }
    assert!(saw_torque, "the target never produced a torque");
    srv.shutdown().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn controller_disconnect_releases_the_input() {
    let srv = start().await;
    let mut controller = connect(srv.addr).await;
    next_json(&mut controller).await;
    let mut observer = connect(srv.addr).await;
    next_json(&mut observer).await;

    send(&mut controller, r#"{"type":"set_target","x":0.3,"y":0.5}"#).await;
    assert_eq!(next_reply(&mut controller).await["type"], "ack");
    loop {
        if !tau1_is_zero(&next_json(&mut observer).await) {
            break;
        }
    }
    controller.close(None).await.unwrap();
    drop(controller);
    let closed = Instant::now();
    loop {
        let v = next_json(&mut observer).await;
        if tau1_is_zero(&v) {
            break;
        }
    }
    // Well before the dead-man interval would have expired.
    assert!(
        closed.elapsed() < Duration::from_millis(400),
        "{:?}",
        closed.elapsed()
    );
    srv.shutdown().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn busy_port_is_reported() {
    let srv = start().await;
    let sc = Scenario::standard(ControllerMode::Kinematic);
    let err = BridgeServer::bind(sc, BridgeOptions::default(), srv.addr.port())
        .await
        .err()
        .expect("second bind fails");
    assert!(err.to_string().contains("binding"), "{err}");
    srv.shutdown().await;
}
