//! Outer-loop controllers.
//!
//! Closed-architecture robots receive a joint velocity command; the
//! open-torque master receives a torque. Every controller runs at its own
//! sampling period and its output is held between updates.

mod adaptive;
mod dynsep;
mod kinematic;
mod open_master;

pub use adaptive::{
    adaptation_step, adaptive_command, AdaptiveController, AdaptiveGains, AdaptiveInit, AdaptiveOutput,
    AdaptiveState,
};
pub use dynsep::{
    dynsep_z_step, reference_signals, zeta_star_dot, AuxGains, AuxState, DynSepController, ReferenceSignals,
    ZStep,
};
pub use kinematic::{KinematicController, KinematicGains, KinematicOutput, KinematicReference};
pub use open_master::{open_torque_master, OpenMasterController, OpenMasterParams, OpenMasterState};

use crate::dynamics::JointVec;
use crate::error::Result;

/// What an outer loop sends to its robot.
#[derive(Debug, Clone, PartialEq)]
pub enum Actuation {
    Velocity(JointVec),
    Torque(JointVec),
}

impl Actuation {
    pub fn values(&self) -> &JointVec {
        match self {
            Actuation::Velocity(v) | Actuation::Torque(v) => v,
        }
    }
}

/// Measurements available to an outer loop at an update instant.
#[derive(Debug, Clone)]
pub struct Observation {
    pub t: f64,
    pub q: JointVec,
    pub qd: JointVec,
    /// Inner-loop command position, when the manufacturer exposes it.
    pub qc_inner: Option<JointVec>,
    /// Peer position q_j(t − T_j).
    pub peer_q: JointVec,
    /// Peer velocity q̇_j(t − T_j).
    pub peer_qd: JointVec,
}

impl Observation {
    /// ξ = q̇ + αq of the local robot.
    pub fn xi(&self, alpha: f64) -> JointVec {
        &self.qd + &self.q * alpha
    }

    /// Delayed peer ξ_j(t − T_j) = q̇_j(t − T_j) + α q_j(t − T_j).
    pub fn peer_xi(&self, alpha: f64) -> JointVec {
        &self.peer_qd + &self.peer_q * alpha
    }
}

/// A named vector signal exposed for tracing.
pub type Signal = (&'static str, JointVec);

#[derive(Debug, Clone)]
pub enum Controller {
    Kinematic(KinematicController),
    DynSep(DynSepController),
    Adaptive(AdaptiveController),
    OpenMaster(OpenMasterController),
}

impl Controller {
    pub fn update(&mut self, obs: &Observation, dt: f64) -> Result<Actuation> {
        match self {
            Controller::Kinematic(c) => c.update(obs, dt).map(Actuation::Velocity),
            Controller::DynSep(c) => c.update(obs, dt).map(Actuation::Velocity),
            Controller::Adaptive(c) => c.update(obs, dt).map(Actuation::Velocity),
            Controller::OpenMaster(c) => c.update(obs, dt).map(Actuation::Torque),
        }
    }

    /// Internals from the most recent update, in a fixed order per controller kind.
    pub fn signals(&self) -> Vec<Signal> {
        match self {
            Controller::Kinematic(c) => c.signals(),
            Controller::DynSep(c) => c.signals(),
            Controller::Adaptive(c) => c.signals(),
            Controller::OpenMaster(c) => c.signals(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Controller::Kinematic(_) => "kinematic",
            Controller::DynSep(_) => "dynsep",
            Controller::Adaptive(_) => "adaptive",
            Controller::OpenMaster(_) => "open_master",
        }
    }
}

/// Trapezoid increment of a running integral.
pub(crate) fn trapezoid(prev: Option<&JointVec>, current: &JointVec, dt: f64) -> JointVec {
    match prev {
        Some(p) => (p + current) * (dt / 2.0),
        None => JointVec::zeros(current.len()),
    }
}
