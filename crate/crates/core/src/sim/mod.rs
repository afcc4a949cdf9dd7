//! Scenario orchestration: two robots, two delay lines, a controller pair,
//! operator and environment models, run at a fixed step into a [`Trace`].

mod models;
mod run;
mod scenario;
mod trace;

pub use models::{environment_torque, operator_torque, EnvironmentModel, OperatorModel};
pub use run::{build_controllers, run_scenario, Aborted, Simulation};
pub use scenario::{
    probe_torque, standard_adaptive_gains, standard_open_master, ControllerMode, RobotSpec, Scenario,
    PROBE_HORIZON,
};
pub use trace::Trace;
