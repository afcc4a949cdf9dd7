//! Real-time bridge: paces an interactive session against the wall clock
//! and exchanges JSON messages with a browser cockpit over WebSocket at
//! `/ws`.
//!
//! Client to server: `set_target{x,y}`, `set_torque{values}` (only with
//! [`BridgeOptions::allow_joint_torque`]), `pause`, `resume`, `reset`,
//! `set_rate{value}`. Every message gets exactly one `ack` or `error` reply.
//! Server to client: one `hello` on connect, then `state` messages every
//! 33 ms of sim time.

mod server;
mod session;

pub use server::{serve_blocking, BridgeServer};
pub use session::{
    error_reply, BridgeOptions, ClientMessage, OperatorInput, SessionState, MAX_RATE, MIN_RATE,
};
