//! Simulation and verification of bilateral teleoperation between robots
//! whose torque interface is hidden behind an inner PD/PID position loop.
//!
//! The crate is layered bottom-up: [`dynamics`] and [`closed_robot`] model
//! the plants, [`channel`] the delayed network, [`control`] the outer loops,
//! [`sim`] wires them into a deterministic run producing a [`sim::Trace`],
//! and [`analysis`] checks gain conditions and trace-level claims. [`cli`]
//! and [`bridge`] are the batch and interactive front ends.

// `!(x > 0.0)` is used on purpose so that NaN fails validation. `Aborted`
// carries the partial trace by value, and controller variants differ in size.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::result_large_err,
    clippy::large_enum_variant
)]

pub mod analysis;
pub mod bridge;
pub mod channel;
pub mod cli;
pub mod closed_robot;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod integrate;
pub mod sim;

pub use error::{Error, Result};
