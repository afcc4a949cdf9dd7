use std::fmt;

use crate::channel::DelayLine;
use crate::closed_robot::{read_inner_command, step_closed_robot, step_open_robot, Architecture, RobotState};
use crate::control::{
    Actuation, AdaptiveController, Controller, DynSepController, KinematicController, Observation,
    OpenMasterController,
};
use crate::dynamics::JointVec;
use crate::error::{Error, Result};

use super::models::{environment_torque, operator_torque};
use super::scenario::{ControllerMode, Scenario};
use super::trace::Trace;

const BASE_SIGNALS: [&str; 5] = ["q", "qd", "qc", "qdot_c", "tau"];

/// A run that stopped on a numeric fault, with the rows logged before it.
#[derive(Debug)]
pub struct Aborted {
    pub trace: Trace,
    pub error: Error,
}

impl fmt::Display for Aborted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} rows kept)", self.error, self.trace.len())
    }
}

impl std::error::Error for Aborted {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Builds the outer-loop controllers the scenario's mode calls for.
pub fn build_controllers(sc: &Scenario) -> [Controller; 2] {
    [0, 1].map(|i| {
        let r = sc.robot(i);
        match sc.mode {
            ControllerMode::Kinematic => {
                Controller::Kinematic(KinematicController::new(r.kinematic, &r.q0 + &r.command_offset))
            }
            ControllerMode::KinematicFallback => Controller::Kinematic(
                KinematicController::new(r.kinematic, &r.q0 + &r.command_offset).with_outer_reference(),
            ),
            ControllerMode::DynSep => {
                Controller::DynSep(DynSepController::new(r.adaptive.aux.clone(), r.q0.clone()))
            }
            ControllerMode::Adaptive | ControllerMode::HybridOpenMaster => {
                if sc.mode.architecture(i) == Architecture::OpenTorque {
                    let mut c = OpenMasterController::new(r.open_master.clone(), r.dof());
                    c.gravity_columns = r.needs_gravity_columns();
                    Controller::OpenMaster(c)
                } else {
                    Controller::Adaptive(
                        AdaptiveController::new(r.adaptive.clone(), r.q0.clone(), r.adaptive_init.clone())
                            .with_gravity_columns(r.needs_gravity_columns()),
                    )
                }
            }
        }
    })
}

/// Fixed-step teleoperation run. Each plant step evaluates the delays,
/// publishes both robots' (q, q̇), updates controllers whose period is due,
/// evaluates operator and environment torques, logs, then advances both
/// robots with every input held.
#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    k: u64,
    robots: [RobotState; 2],
    controllers: [Controller; 2],
    /// `lines[i]` carries robot i's stacked [q; q̇].
    lines: [DelayLine; 2],
    held: [Actuation; 2],
    tau_star: [JointVec; 2],
    delays: [f64; 2],
    interactive: Option<JointVec>,
    trace: Trace,
    recording: bool,
    warnings: Vec<String>,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self> {
        let controllers = build_controllers(&scenario);
        Self::with_controllers(scenario, controllers)
    }

    /// Uses the supplied controllers instead of the ones the mode implies.
    /// The controllers' parameters are not validated.
    pub fn with_controllers(scenario: Scenario, controllers: [Controller; 2]) -> Result<Self> {
        let warnings = scenario.validate()?;
        let m = scenario.dof();
        let robots = [0, 1].map(|i| {
            let r = scenario.robot(i);
            let st = match scenario.mode.architecture(i) {
                Architecture::Closed => RobotState::closed(r.q0.clone(), r.qd0.clone()),
                Architecture::OpenTorque => RobotState::open(r.q0.clone(), r.qd0.clone()),
            };
            st.with_command_readable(r.command_readable)
                .with_gravity_precompensated(r.gravity_precompensated)
        });
        let lines = [
            DelayLine::for_delay(scenario.channel_fwd.max_delay()),
            DelayLine::for_delay(scenario.channel_bwd.max_delay()),
        ];
        let held = [0, 1].map(|i| match scenario.mode.architecture(i) {
            Architecture::Closed => Actuation::Velocity(JointVec::zeros(m)),
            Architecture::OpenTorque => Actuation::Torque(JointVec::zeros(m)),
        });
        let mut names: Vec<String> = vec!["t".into(), "T1".into(), "T2".into()];
        for sig in BASE_SIGNALS {
            for i in 1..=2 {
                let base = if sig == "tau" {
                    format!("tau{i}_star")
                } else {
                    format!("{sig}{i}")
                };
                names.extend((0..m).map(|j| format!("{base}.{j}")));
            }
        }
        for (i, c) in controllers.iter().enumerate() {
            for (sig, v) in c.signals() {
                names.extend((0..v.len()).map(|j| Trace::vector_name(sig, i + 1, j)));
            }
        }
        let trace = Trace::new(names)?;
        Ok(Self {
            k: 0,
            robots,
            controllers,
            lines,
            held,
            tau_star: [JointVec::zeros(m), JointVec::zeros(m)],
            delays: [0.0, 0.0],
            interactive: None,
            trace,
            recording: true,
            warnings,
            scenario,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn step_index(&self) -> u64 {
        self.k
    }

    pub fn time(&self) -> f64 {
        self.k as f64 * self.scenario.plant_dt
    }

    pub fn robot(&self, i: usize) -> &RobotState {
        &self.robots[i]
    }

    pub fn controller(&self, i: usize) -> &Controller {
        &self.controllers[i]
    }

    /// Most recent (T1, T2).
    pub fn delays(&self) -> [f64; 2] {
        self.delays
    }

    /// Most recent (τ1*, τ2*).
    pub fn tau_star(&self) -> &[JointVec; 2] {
        &self.tau_star
    }

    pub fn held_command(&self, i: usize) -> &Actuation {
        &self.held[i]
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    /// Disables logging, for long interactive sessions.
    pub fn set_recording(&mut self, on: bool) {
        self.recording = on;
    }

    /// Operator torque used by an interactive operator model.
    pub fn set_interactive_torque(&mut self, tau: Option<JointVec>) {
        self.interactive = tau;
    }

    fn packet(st: &RobotState) -> JointVec {
        let m = st.q.len();
        JointVec::from_iterator(2 * m, st.q.iter().chain(st.qd.iter()).copied())
    }

    fn observe(&mut self) -> Result<()> {
        let sc = &self.scenario;
        let t = self.time();
        let m = sc.dof();
        self.delays = [sc.channel_fwd.delay_at(t), sc.channel_bwd.delay_at(t)];
        for i in 0..2 {
            self.lines[i].push(t, Self::packet(&self.robots[i]))?;
        }
        for i in 0..2 {
            if !self.k.is_multiple_of(sc.cmd_every(i)) {
                continue;
            }
            let peer = 1 - i;
            // The master hears the slave through T2, the slave the master through T1.
            let delay = if i == 0 { self.delays[1] } else { self.delays[0] };
            let packet = self.lines[peer].sample_delayed(t, delay)?;
            let st = &self.robots[i];
            let obs = Observation {
                t,
                q: st.q.clone(),
                qd: st.qd.clone(),
                qc_inner: match sc.mode.architecture(i) {
                    Architecture::Closed => read_inner_command(st),
                    Architecture::OpenTorque => None,
                },
                peer_q: packet.rows(0, m).into_owned(),
                peer_qd: packet.rows(m, m).into_owned(),
            };
            self.held[i] = self.controllers[i].update(&obs, sc.cmd_dt(i))?;
        }
        let (m1, m2) = (&self.robots[0], &self.robots[1]);
        self.tau_star = [
            operator_torque(&sc.operator, t, &m1.q, &m1.qd, self.interactive.as_ref()),
            environment_torque(&sc.environment, &m2.q, &m2.qd),
        ];
        if self.recording && self.k.is_multiple_of(sc.decimation as u64) {
            self.log_row(t)?;
        }
        Ok(())
    }

    fn log_row(&mut self, t: f64) -> Result<()> {
        let m = self.scenario.dof();
        let mut row = Vec::with_capacity(self.trace.names().len());
        row.extend([t, self.delays[0], self.delays[1]]);
        for sig in BASE_SIGNALS {
            for i in 0..2 {
                let st = &self.robots[i];
                match sig {
                    "q" => row.extend(st.q.iter()),
                    "qd" => row.extend(st.qd.iter()),
                    "qc" => row.extend(st.qc.iter()),
                    "qdot_c" => match &self.held[i] {
                        Actuation::Velocity(v) => row.extend(v.iter()),
                        Actuation::Torque(_) => row.extend(std::iter::repeat_n(0.0, m)),
                    },
                    _ => row.extend(self.tau_star[i].iter()),
                }
            }
        }
        for c in &self.controllers {
            for (_, v) in c.signals() {
                row.extend(v.iter());
            }
        }
        self.trace.push_row(&row)
    }

    fn integrate(&mut self) -> Result<()> {
        let sc = &self.scenario;
        let dt = sc.plant_dt;
        for i in 0..2 {
            let r = sc.robot(i);
            // Operator torque pushes the master; the environment resists the slave.
            let tau_ext = if i == 0 {
                self.tau_star[0].clone()
            } else {
                -&self.tau_star[1]
            };
            let next = match &self.held[i] {
                Actuation::Velocity(cmd) => {
                    step_closed_robot(&self.robots[i], &r.inner, &r.model, &tau_ext, cmd, dt)?
                }
                Actuation::Torque(tau) => step_open_robot(&self.robots[i], &r.model, tau, &tau_ext, dt)?,
            };
            self.robots[i] = next;
        }
        Ok(())
    }

    fn numeric(&self, e: Error) -> Error {
        match e {
            Error::NonFinite(_) | Error::Contract(_) => Error::NumericAbort {
                t: self.time(),
                detail: e.to_string(),
            },
            other => other,
        }
    }

    /// One plant step.
    pub fn advance(&mut self) -> Result<()> {
        self.observe().map_err(|e| self.numeric(e))?;
        self.integrate().map_err(|e| self.numeric(e))?;
        self.k += 1;
        Ok(())
    }

    /// Runs to the scenario duration, logging the final instant as well.
    pub fn run(mut self) -> Result<Trace, Aborted> {
        let n = self.scenario.steps();
        let outcome = (0..n)
            .try_for_each(|_| self.advance())
            .and_then(|_| self.observe().map_err(|e| self.numeric(e)));
        match outcome {
            Ok(()) => Ok(self.trace),
            Err(error) => Err(Aborted {
                trace: self.trace,
                error,
            }),
        }
    }
}

/// Validates and runs a scenario.
pub fn run_scenario(sc: &Scenario) -> Result<Trace, Aborted> {
    let sim = Simulation::new(sc.clone()).map_err(|error| Aborted {
        trace: Trace::new(vec![]).expect("empty trace"),
        error,
    })?;
    sim.run()
}
