use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dynamics::JointVec;
use crate::error::{Error, Result};
use crate::sim::{OperatorModel, Scenario, Simulation};

/// Tunables of an interactive session.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeOptions {
    /// Cartesian operator spring K_h (N/m) and damper D_h (N·s/m).
    pub k_h: f64,
    pub d_h: f64,
    /// Sim-time period of state messages (s).
    pub state_period: f64,
    /// Wall time after which operator input expires (s).
    pub dead_man: f64,
    /// Diagonal of the scale in reflected = −diag(scale)·∫(q2 − q_c2).
    pub reflected_scale: JointVec,
    /// Whether clients may set τ1* directly.
    pub allow_joint_torque: bool,
    /// Sim lag (s) beyond which the pacer drops time instead of catching up.
    pub max_lag: f64,
}

impl Default for BridgeOptions {
    fn default() -> Self {
        Self {
            k_h: 20.0,
            d_h: 2.0,
            state_period: 0.033,
            dead_man: 0.5,
            reflected_scale: JointVec::from_vec(vec![3.0, 3.25]),
            allow_joint_torque: false,
            max_lag: 0.25,
        }
    }
}

pub const MIN_RATE: f64 = 0.1;
pub const MAX_RATE: f64 = 10.0;

/// Latest operator input.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorInput {
    None,
    EeTarget(Vector2<f64>),
    JointTorque(JointVec),
}

/// Client → server messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    SetTarget { x: f64, y: f64 },
    SetTorque { values: Vec<f64> },
    Pause,
    Resume,
    Reset,
    SetRate { value: f64 },
}

impl ClientMessage {
    fn name(&self) -> &'static str {
        match self {
            ClientMessage::SetTarget { .. } => "set_target",
            ClientMessage::SetTorque { .. } => "set_torque",
            ClientMessage::Pause => "pause",
            ClientMessage::Resume => "resume",
            ClientMessage::Reset => "reset",
            ClientMessage::SetRate { .. } => "set_rate",
        }
    }
}

pub fn error_reply(detail: impl Into<String>) -> Value {
    json!({"type": "error", "detail": detail.into()})
}

/// An interactive simulation paced against a wall clock supplied by the
/// caller. `now` arguments are wall seconds on any fixed origin.
#[derive(Debug, Clone)]
pub struct SessionState {
    scenario: Scenario,
    options: BridgeOptions,
    sim: Simulation,
    rate: f64,
    paused: bool,
    input: OperatorInput,
    last_input_wall: f64,
    /// Wall and sim time at the last pacing (re)anchor.
    anchor: Option<(f64, f64)>,
    next_state_t: f64,
    /// ∫(q2 − q_c2), rectangle rule over plant steps.
    int_slave_error: JointVec,
}

impl SessionState {
    /// The scenario's operator is replaced by the interactive one.
    pub fn new(mut scenario: Scenario, options: BridgeOptions) -> Result<Self> {
        scenario.operator = OperatorModel::Interactive;
        if options.reflected_scale.len() != scenario.dof() {
            return Err(Error::config("reflected_scale must have one entry per joint"));
        }
        let sim = Self::fresh_sim(&scenario)?;
        let m = scenario.dof();
        Ok(Self {
            scenario,
            options,
            sim,
            rate: 1.0,
            paused: false,
            input: OperatorInput::None,
            last_input_wall: f64::NEG_INFINITY,
            anchor: None,
            next_state_t: 0.0,
            int_slave_error: JointVec::zeros(m),
        })
    }

    fn fresh_sim(sc: &Scenario) -> Result<Simulation> {
        let mut sim = Simulation::new(sc.clone())?;
        sim.set_recording(false);
        Ok(sim)
    }

    pub fn sim_clock(&self) -> f64 {
        self.sim.time()
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn paused(&self) -> bool {
        self.paused
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// The input in force at `now`, after the dead-man rule.
    pub fn input(&self, now: f64) -> &OperatorInput {
        if now - self.last_input_wall > self.options.dead_man {
            &OperatorInput::None
        } else {
            &self.input
        }
    }

    /// Drops the operator input, as on a controlling client's disconnect.
    pub fn release_input(&mut self) {
        self.input = OperatorInput::None;
        self.last_input_wall = f64::NEG_INFINITY;
    }

    /// τ1* the operator applies in the current state at `now`.
    pub fn operator_torque(&self, now: f64) -> Result<JointVec> {
        let m = self.scenario.dof();
        match self.input(now) {
            OperatorInput::None => Ok(JointVec::zeros(m)),
            OperatorInput::JointTorque(tau) => Ok(tau.clone()),
            OperatorInput::EeTarget(target) => {
                let st = self.sim.robot(0);
                let (x, jac) = self
                    .scenario
                    .master
                    .model
                    .forward_kinematics_and_jacobian(&st.q)?;
                let qd = Vector2::new(st.qd[0], st.qd[1]);
                let force = (target - x) * self.options.k_h - jac * qd * self.options.d_h;
                let tau = jac.transpose() * force;
                Ok(JointVec::from_column_slice(tau.as_slice()))
            }
        }
    }

    /// Applies one message; returns the reply (an ack or an error).
    pub fn handle_client_message(&mut self, text: &str, now: f64) -> Value {
        let msg: ClientMessage = match serde_json::from_str(text) {
            Ok(m) => m,
            Err(e) => return error_reply(format!("malformed message: {e}")),
        };
        match self.apply(&msg, now) {
            Ok(mut ack) => {
                ack["type"] = json!("ack");
                ack["of"] = json!(msg.name());
                ack
            }
            Err(detail) => error_reply(detail),
        }
    }

    fn apply(&mut self, msg: &ClientMessage, now: f64) -> std::result::Result<Value, String> {
        let m = self.scenario.dof();
        match msg {
            ClientMessage::SetTarget { x, y } => {
                if !(x.is_finite() && y.is_finite()) {
                    return Err("target must be finite".into());
                }
                self.input = OperatorInput::EeTarget(Vector2::new(*x, *y));
                self.last_input_wall = now;
                Ok(json!({"x": x, "y": y}))
            }
            ClientMessage::SetTorque { values } => {
                if !self.options.allow_joint_torque {
                    return Err("joint torque input is disabled; send set_target".into());
                }
                if values.len() != m || values.iter().any(|v| !v.is_finite()) {
                    return Err(format!("values must be {m} finite numbers"));
                }
                self.input = OperatorInput::JointTorque(JointVec::from_column_slice(values));
                self.last_input_wall = now;
                Ok(json!({"values": values}))
            }
            ClientMessage::Pause => {
                self.paused = true;
                self.anchor = None;
                Ok(json!({"paused": true, "t": self.sim_clock()}))
            }
            ClientMessage::Resume => {
                self.paused = false;
                self.anchor = None;
                Ok(json!({"paused": false, "t": self.sim_clock()}))
            }
            ClientMessage::Reset => {
                self.reset().map_err(|e| e.to_string())?;
                Ok(json!({"t": self.sim_clock(), "seed": self.scenario.seed}))
            }
            ClientMessage::SetRate { value } => {
                if !value.is_finite() {
                    return Err("rate must be finite".into());
                }
                self.rate = value.clamp(MIN_RATE, MAX_RATE);
                self.anchor = None;
                Ok(json!({"rate": self.rate}))
            }
        }
    }

    /// Restarts the scenario with the same seed; input and pacing are cleared.
    pub fn reset(&mut self) -> Result<()> {
        self.sim = Self::fresh_sim(&self.scenario)?;
        self.release_input();
        self.anchor = None;
        self.next_state_t = 0.0;
        self.int_slave_error.fill(0.0);
        Ok(())
    }

    /// One plant step with the operator torque at `now`.
    pub fn step(&mut self, now: f64) -> Result<()> {
        let tau = self.operator_torque(now)?;
        self.sim.set_interactive_torque(Some(tau));
        self.sim.advance()?;
        let st = self.sim.robot(1);
        self.int_slave_error += (&st.q - &st.qc) * self.scenario.plant_dt;
        Ok(())
    }

    /// Advances the simulation to wall time `now` and returns the state
    /// messages due on the way.
    pub fn advance_to(&mut self, now: f64) -> Result<Vec<Value>> {
        let mut out = Vec::new();
        if self.paused {
            return Ok(out);
        }
        let dt = self.scenario.plant_dt;
        let (wall0, sim0) = *self.anchor.get_or_insert((now, self.sim.time()));
        let mut target = sim0 + self.rate * (now - wall0);
        if target - self.sim.time() > self.options.max_lag * self.rate.max(1.0) {
            // Cannot keep up; restart pacing from here.
            self.anchor = Some((now, self.sim.time()));
            target = self.sim.time() + dt;
        }
        while self.sim.time() + 0.5 * dt <= target {
            self.step(now)?;
            if self.sim.time() + 1e-9 >= self.next_state_t {
                out.push(self.state_message()?);
                self.next_state_t += self.options.state_period;
            }
        }
        Ok(out)
    }

    pub fn hello_message(&self) -> Value {
        let arm = |m: &crate::dynamics::ArmModel| json!({"l1": m.l1, "l2": m.l2});
        json!({
            "type": "hello",
            "dof": self.scenario.dof(),
            "mode": self.scenario.mode.name(),
            "master": arm(&self.scenario.master.model),
            "slave": arm(&self.scenario.slave.model),
            "plant_dt": self.scenario.plant_dt,
            "state_period": self.options.state_period,
            "rate": self.rate,
            "paused": self.paused,
        })
    }

    pub fn state_message(&self) -> Result<Value> {
        let s = &self.sim;
        let (r1, r2) = (s.robot(0), s.robot(1));
        let ee = |i: usize, q: &JointVec| -> Result<[f64; 2]> {
            let (x, _) = self.scenario.robot(i).model.forward_kinematics_and_jacobian(q)?;
            Ok([x[0], x[1]])
        };
        let v = |x: &JointVec| x.iter().copied().collect::<Vec<f64>>();
        let reflected = -self.options.reflected_scale.component_mul(&self.int_slave_error);
        let [t1, t2] = s.delays();
        let tau = s.tau_star();
        Ok(json!({
            "type": "state",
            "t": s.time(),
            "q1": v(&r1.q),
            "q2": v(&r2.q),
            "qc2": v(&r2.qc),
            "ee1": ee(0, &r1.q)?,
            "ee2": ee(1, &r2.q)?,
            "tau1_star": v(&tau[0]),
            "tau2_star": v(&tau[1]),
            "T1": t1,
            "T2": t2,
            "sync_error": (&r1.q - &r2.q).amax(),
            "reflected": v(&reflected),
            "paused": self.paused,
            "rate": self.rate,
        }))
    }
}
