//! Drives an interactive session without a network: the operator drags the
//! master end effector toward a target, then lets go and the dead-man
//! switch releases the spring. Wall time is simulated here.

use telesim::bridge::{BridgeOptions, SessionState};
use telesim::sim::{ControllerMode, Scenario};

fn main() -> telesim::Result<()> {
    let mut s = SessionState::new(
        Scenario::standard(ControllerMode::Kinematic),
        BridgeOptions::default(),
    )?;
    println!("{}", s.hello_message());
    println!(
        "{}",
        s.handle_client_message(r#"{"type":"set_rate","value":4}"#, 0.0)
    );
    let mut now = 0.0;
    while now < 3.0 {
        now += 0.1;
        // Input keeps arriving for the first second of wall time.
        if now < 1.0 {
            s.handle_client_message(r#"{"type":"set_target","x":0.55,"y":0.45}"#, now);
        }
        if let Some(st) = s.advance_to(now)?.last() {
            if ((now * 10.0).round() as i64) % 5 == 0 {
                println!(
                    "wall {now:.1} s  sim {:.2} s  ee1 {}  ee2 {}  τ1* {}",
                    st["t"].as_f64().unwrap(),
                    st["ee1"],
                    st["ee2"],
                    st["tau1_star"]
                );
            }
        }
    }
    println!("{}", s.handle_client_message("{\"type\":\"warp\"}", now));
    Ok(())
}
