//! Starts a bridge on a free local port, connects as a WebSocket client,
//! sets a target once and prints state messages. With no further input the
//! dead-man switch drops the spring torque after half a second.

use futures::{SinkExt, StreamExt};
use serde_json::Value;
use tokio_tungstenite::{connect_async, tungstenite::Message};

use telesim::bridge::{BridgeOptions, BridgeServer};
use telesim::sim::{ControllerMode, Scenario};

#[tokio::main]
async fn main() -> telesim::Result<()> {
    let server = BridgeServer::bind(
        Scenario::standard(ControllerMode::Kinematic),
        BridgeOptions::default(),
        0,
    )
    .await?;
    let addr = server.local_addr()?;
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let running = tokio::spawn(server.run(async {
        let _ = stopped.await;
    }));

    let (mut ws, _) = connect_async(format!("ws://{addr}/ws"))
        .await
        .expect("bridge accepts");
    ws.send(Message::Text(r#"{"type":"set_target","x":0.55,"y":0.45}"#.into()))
        .await
        .expect("send");
    let mut states = 0;
    while let Some(Ok(Message::Text(text))) = ws.next().await {
        let v: Value = serde_json::from_str(&text).expect("json");
        match v["type"].as_str() {
            Some("state") => {
                states += 1;
                if states % 10 == 0 {
                    println!(
                        "t = {:.3}  ee1 = {}  τ1* = {}  sync error = {:.2e}",
                        v["t"].as_f64().unwrap_or(f64::NAN),
                        v["ee1"],
                        v["tau1_star"],
                        v["sync_error"].as_f64().unwrap_or(f64::NAN)
                    );
                }
                if states == 60 {
                    break;
                }
            }
            _ => println!("{v}"),
        }
    }
    let _ = ws.close(None).await;
    let _ = stop.send(());
    running.await.expect("server task")?;
    Ok(())
}
