//! A robot with closed architecture: the plant is driven by a hidden
//! manufacturer PD/PID position loop and only accepts a joint velocity
//! command. An open-torque mode is provided for hybrid setups.
//!
//! The inner loop is continuous-time and integrates together with the plant.
//! The integrated state is `(q, q̇, q_c, ∫(q − q_c))`; the velocity command is
//! held constant across each step.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::{check_dim, check_finite, ArmModel, JointVec};
use crate::error::{Error, Result};
use crate::integrate::rk4_step;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InnerMode {
    Pd,
    #[default]
    Pid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    #[default]
    Closed,
    OpenTorque,
}

/// Diagonal inner-loop gains, stored as their diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerGains {
    pub kd: JointVec,
    pub kp: JointVec,
    pub ki: JointVec,
    pub mode: InnerMode,
}

impl InnerGains {
    pub fn pid(kd: JointVec, kp: JointVec, ki: JointVec) -> Self {
        Self {
            kd,
            kp,
            ki,
            mode: InnerMode::Pid,
        }
    }

    pub fn pd(kd: JointVec, kp: JointVec) -> Self {
        let ki = DVector::zeros(kd.len());
        Self {
            kd,
            kp,
            ki,
            mode: InnerMode::Pd,
        }
    }

    /// Uniform gains on every joint.
    pub fn uniform(dof: usize, kd: f64, kp: f64, ki: f64) -> Self {
        Self::pid(
            DVector::from_element(dof, kd),
            DVector::from_element(dof, kp),
            DVector::from_element(dof, ki),
        )
    }

    /// Integral gains actually applied (zero in PD mode).
    pub fn effective_ki(&self) -> JointVec {
        match self.mode {
            InnerMode::Pid => self.ki.clone(),
            InnerMode::Pd => DVector::zeros(self.kd.len()),
        }
    }

    pub fn validate(&self, dof: usize) -> Result<()> {
        for (name, v) in [("kd", &self.kd), ("kp", &self.kp)] {
            if v.len() != dof {
                return Err(Error::config(format!(
                    "inner gain {name} must have {dof} entries"
                )));
            }
            if v.iter().any(|x| !x.is_finite() || *x <= 0.0) {
                return Err(Error::config(format!("inner gain {name} must be > 0")));
            }
        }
        if self.mode == InnerMode::Pid {
            if self.ki.len() != dof {
                return Err(Error::config(format!("inner gain ki must have {dof} entries")));
            }
            if self.ki.iter().any(|x| !x.is_finite() || *x <= 0.0) {
                return Err(Error::config("inner gain ki must be > 0 in pid mode"));
            }
        }
        Ok(())
    }
}

/// Plant state plus the hidden inner-loop internals.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub q: JointVec,
    pub qd: JointVec,
    /// Inner-loop command position.
    pub qc: JointVec,
    /// ∫(q − q_c) dσ.
    pub pid_integral: JointVec,
    pub arch: Architecture,
    /// Exact gravity feedforward is applied inside the robot.
    pub gravity_precompensated: bool,
    pub command_readable: bool,
}

impl RobotState {
    /// The manufacturer initializes its command position at the current pose.
    pub fn closed(q0: JointVec, qd0: JointVec) -> Self {
        let m = q0.len();
        Self {
            qc: q0.clone(),
            q: q0,
            qd: qd0,
            pid_integral: DVector::zeros(m),
            arch: Architecture::Closed,
            gravity_precompensated: true,
            command_readable: true,
        }
    }

    pub fn open(q0: JointVec, qd0: JointVec) -> Self {
        Self {
            arch: Architecture::OpenTorque,
            ..Self::closed(q0, qd0)
        }
    }

    pub fn with_gravity_precompensated(mut self, on: bool) -> Self {
        self.gravity_precompensated = on;
        self
    }

    pub fn with_command_readable(mut self, on: bool) -> Self {
        self.command_readable = on;
        self
    }

    pub fn kinetic_energy(&self, model: &ArmModel) -> Result<f64> {
        let m = model.mass_matrix(&self.q)?;
        Ok(0.5 * self.qd.dot(&(m * &self.qd)))
    }

    fn check_finite(&self) -> Result<()> {
        for (v, what) in [
            (&self.q, "joint position after step"),
            (&self.qd, "joint velocity after step"),
            (&self.qc, "inner command after step"),
            (&self.pid_integral, "inner integral after step"),
        ] {
            check_finite(v, what)?;
        }
        Ok(())
    }
}

/// The inner command position if the manufacturer exposes it.
pub fn read_inner_command(state: &RobotState) -> Option<JointVec> {
    state.command_readable.then(|| state.qc.clone())
}

fn feedforward(state: &RobotState, model: &ArmModel, q: &JointVec) -> Result<JointVec> {
    if state.gravity_precompensated {
        model.gravity_vector(q)
    } else {
        Ok(DVector::zeros(q.len()))
    }
}

fn inner_law(
    gains: &InnerGains,
    ki: &JointVec,
    q: &JointVec,
    qd: &JointVec,
    qc: &JointVec,
    integral: &JointVec,
    qdot_c: &JointVec,
) -> JointVec {
    -(gains.kd.component_mul(&(qd - qdot_c))) - gains.kp.component_mul(&(q - qc)) - ki.component_mul(integral)
}

/// −K_D(q̇ − q̇_c) − K_P(q − q_c) − K_I∫(q − q_c), plus g(q) when pre-compensated.
pub fn inner_torque(
    state: &RobotState,
    gains: &InnerGains,
    model: &ArmModel,
    qdot_c: &JointVec,
) -> Result<JointVec> {
    if state.arch != Architecture::Closed {
        return Err(Error::contract("inner_torque called on an open-torque robot"));
    }
    let ki = gains.effective_ki();
    let tau = inner_law(
        gains,
        &ki,
        &state.q,
        &state.qd,
        &state.qc,
        &state.pid_integral,
        qdot_c,
    );
    Ok(tau + feedforward(state, model, &state.q)?)
}

fn acceleration(model: &ArmModel, q: &JointVec, qd: &JointVec, tau: JointVec) -> Result<JointVec> {
    let m = model.mass_matrix(q)?;
    let rhs = tau - model.coriolis_matrix(q, qd)? * qd - model.gravity_vector(q)?;
    m.cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or_else(|| Error::contract("inertia matrix lost positive definiteness"))
}

/// Advances a closed-architecture robot by one RK4 step under a held velocity command.
///
/// `tau_ext` is the external torque as it enters the dynamics: +τ1* on the
/// master, −τ2* on the slave.
pub fn step_closed_robot(
    state: &RobotState,
    gains: &InnerGains,
    model: &ArmModel,
    tau_ext: &JointVec,
    qdot_c_star: &JointVec,
    dt: f64,
) -> Result<RobotState> {
    if state.arch != Architecture::Closed {
        return Err(Error::contract(
            "step_closed_robot called on an open-torque robot",
        ));
    }
    if !(dt > 0.0) {
        return Err(Error::contract("dt must be > 0"));
    }
    let m = model.dof();
    check_dim(qdot_c_star, m)?;
    check_dim(tau_ext, m)?;
    let ki = gains.effective_ki();
    let mut x = DVector::zeros(4 * m);
    x.rows_mut(0, m).copy_from(&state.q);
    x.rows_mut(m, m).copy_from(&state.qd);
    x.rows_mut(2 * m, m).copy_from(&state.qc);
    x.rows_mut(3 * m, m).copy_from(&state.pid_integral);

    let next = rk4_step(&x, dt, |x| {
        let q = x.rows(0, m).into_owned();
        let qd = x.rows(m, m).into_owned();
        let qc = x.rows(2 * m, m).into_owned();
        let integral = x.rows(3 * m, m).into_owned();
        let tau = inner_law(gains, &ki, &q, &qd, &qc, &integral, qdot_c_star)
            + feedforward(state, model, &q)?
            + tau_ext;
        let qdd = acceleration(model, &q, &qd, tau)?;
        let mut dx = DVector::zeros(4 * m);
        dx.rows_mut(0, m).copy_from(&qd);
        dx.rows_mut(m, m).copy_from(&qdd);
        dx.rows_mut(2 * m, m).copy_from(qdot_c_star);
        dx.rows_mut(3 * m, m).copy_from(&(q - qc));
        Ok(dx)
    })?;

    let out = RobotState {
        q: next.rows(0, m).into_owned(),
        qd: next.rows(m, m).into_owned(),
        qc: next.rows(2 * m, m).into_owned(),
        pid_integral: next.rows(3 * m, m).into_owned(),
        ..state.clone()
    };
    out.check_finite()?;
    Ok(out)
}

/// Advances an open-torque robot: M q̈ + C q̇ + g = τ_cmd + τ_ext (+ g when pre-compensated).
pub fn step_open_robot(
    state: &RobotState,
    model: &ArmModel,
    tau_cmd: &JointVec,
    tau_ext: &JointVec,
    dt: f64,
) -> Result<RobotState> {
    if state.arch != Architecture::OpenTorque {
        return Err(Error::contract(
            "step_open_robot called on a closed-architecture robot",
        ));
    }
    if !(dt > 0.0) {
        return Err(Error::contract("dt must be > 0"));
    }
    let m = model.dof();
    check_dim(tau_cmd, m)?;
    check_dim(tau_ext, m)?;
    let mut x = DVector::zeros(2 * m);
    x.rows_mut(0, m).copy_from(&state.q);
    x.rows_mut(m, m).copy_from(&state.qd);
    let next = rk4_step(&x, dt, |x| {
        let q = x.rows(0, m).into_owned();
        let qd = x.rows(m, m).into_owned();
        let tau = tau_cmd + tau_ext + feedforward(state, model, &q)?;
        let qdd = acceleration(model, &q, &qd, tau)?;
        let mut dx = DVector::zeros(2 * m);
        dx.rows_mut(0, m).copy_from(&qd);
        dx.rows_mut(m, m).copy_from(&qdd);
        Ok(dx)
    })?;
    let out = RobotState {
        q: next.rows(0, m).into_owned(),
        qd: next.rows(m, m).into_owned(),
        ..state.clone()
    };
    out.check_finite()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::joint_vec;
    use crate::integrate::observed_order;

    fn stiff() -> InnerGains {
        InnerGains::uniform(2, 2.0, 20.0, 1.0)
    }

    fn zero() -> JointVec {
        DVector::zeros(2)
    }

    #[test]
    fn zero_error_servo_gives_zero_torque() {
        let model = ArmModel::canonical();
        let state = RobotState::closed(joint_vec(&[0.3, -0.2]), zero());
        let tau = inner_torque(&state, &stiff(), &model, &zero()).unwrap();
        assert_eq!(tau, zero());

        let model = model.with_gravity(9.81);
        let tau = inner_torque(&state, &stiff(), &model, &zero()).unwrap();
        assert_eq!(tau, model.gravity_vector(&state.q).unwrap());
    }

    #[test]
    fn single_term_responses() {
        let model = ArmModel::canonical();
        let mut state = RobotState::closed(zero(), joint_vec(&[1.0, 0.0]));
        let tau = inner_torque(&state, &stiff(), &model, &zero()).unwrap();
        assert_eq!(tau, joint_vec(&[-2.0, 0.0]));

        state.qd = zero();
        state.q = joint_vec(&[0.1, 0.0]);
        state.pid_integral = joint_vec(&[0.05, 0.0]);
        let tau = inner_torque(&state, &stiff(), &model, &zero()).unwrap();
        assert!((tau - joint_vec(&[-2.05, 0.0])).amax() < 1e-15);
    }

    #[test]
    fn architecture_mismatch_is_a_contract_violation() {
        let model = ArmModel::canonical();
        let open = RobotState::open(zero(), zero());
        assert!(matches!(
            inner_torque(&open, &stiff(), &model, &zero()),
            Err(Error::Contract(_))
        ));
        assert!(step_closed_robot(&open, &stiff(), &model, &zero(), &zero(), 1e-3).is_err());
        let closed = RobotState::closed(zero(), zero());
        assert!(step_open_robot(&closed, &model, &zero(), &zero(), 1e-3).is_err());
    }

    #[test]
    fn rest_is_an_equilibrium() {
        let model = ArmModel::canonical().with_gravity(9.81);
        let q0 = joint_vec(&[0.4, 0.9]);
        let mut state = RobotState::closed(q0.clone(), zero());
        for _ in 0..1000 {
            state = step_closed_robot(&state, &stiff(), &model, &zero(), &zero(), 1e-3).unwrap();
        }
        assert!((state.q - q0).amax() < 1e-12);
    }

    fn smooth_run(dt: f64) -> RobotState {
        let model = ArmModel::canonical();
        let mut state = RobotState::closed(joint_vec(&[0.2, -0.3]), joint_vec(&[0.5, -1.0]));
        let n = (0.5 / dt).round() as usize;
        let cmd = joint_vec(&[0.2, 0.1]);
        let tau = joint_vec(&[0.05, -0.02]);
        for _ in 0..n {
            state = step_closed_robot(&state, &stiff(), &model, &tau, &cmd, dt).unwrap();
        }
        state
    }

    #[test]
    fn closed_step_is_fourth_order() {
        let reference = smooth_run(1e-4);
        let steps = [4e-3, 2e-3, 1e-3];
        let errors: Vec<f64> = steps
            .iter()
            .map(|&h| (smooth_run(h).q - &reference.q).amax())
            .collect();
        let order = observed_order(&steps, &errors);
        assert!(order >= 3.8, "observed order {order}, errors {errors:?}");
    }

    #[test]
    fn velocity_servo_tracks_constant_command() {
        let model = ArmModel::canonical();
        let mut state = RobotState::closed(zero(), zero());
        let cmd = joint_vec(&[0.1, 0.0]);
        for _ in 0..5000 {
            state = step_closed_robot(&state, &stiff(), &model, &zero(), &cmd, 1e-3).unwrap();
        }
        assert!((state.qd[0] - 0.1).abs() < 0.002, "qd = {}", state.qd);
        assert!(state.qd[1].abs() < 0.002);
    }

    #[test]
    fn inner_command_readability() {
        let model = ArmModel::canonical();
        let mut state = RobotState::closed(zero(), zero());
        assert_eq!(read_inner_command(&state), Some(zero()));
        let cmd = joint_vec(&[1.0, 0.0]);
        for _ in 0..1000 {
            state = step_closed_robot(&state, &stiff(), &model, &zero(), &cmd, 1e-3).unwrap();
        }
        let qc = read_inner_command(&state).unwrap();
        assert!((qc - joint_vec(&[1.0, 0.0])).amax() < 1e-9);
        assert_eq!(read_inner_command(&state.with_command_readable(false)), None);
    }

    #[test]
    fn command_offset_is_constant() {
        // An outer integrator with its own origin, fed the same command stream.
        let model = ArmModel::canonical();
        let mut state = RobotState::closed(joint_vec(&[0.1, 0.2]), zero());
        let theta = joint_vec(&[0.05, -0.3]);
        let mut qc_star = &state.qc + &theta;
        let dt = 1e-3;
        for k in 0..3000 {
            let t = k as f64 * dt;
            let cmd = joint_vec(&[(2.0 * t).sin(), 0.3 * (0.7 * t).cos()]);
            state = step_closed_robot(&state, &stiff(), &model, &zero(), &cmd, dt).unwrap();
            qc_star += cmd * dt;
            assert!((&qc_star - &state.qc - &theta).amax() < 1e-10);
        }
    }

    #[test]
    fn pd_mode_matches_pid_with_zero_ki() {
        let model = ArmModel::canonical();
        let pd = InnerGains::pd(joint_vec(&[2.0, 3.0]), joint_vec(&[20.0, 10.0]));
        let pid0 = InnerGains::pid(pd.kd.clone(), pd.kp.clone(), zero());
        let mut a = RobotState::closed(joint_vec(&[0.1, 0.2]), joint_vec(&[0.3, 0.0]));
        let mut b = a.clone();
        let cmd = joint_vec(&[0.2, -0.1]);
        for _ in 0..500 {
            a = step_closed_robot(&a, &pd, &model, &zero(), &cmd, 1e-3).unwrap();
            b = step_closed_robot(&b, &pid0, &model, &zero(), &cmd, 1e-3).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn open_robot_gravity_hold() {
        let model = ArmModel::canonical().with_gravity(9.81);
        let q0 = joint_vec(&[0.3, 0.5]);
        let mut state = RobotState::open(q0.clone(), zero()).with_gravity_precompensated(false);
        let hold = model.gravity_vector(&q0).unwrap();
        for _ in 0..1000 {
            state = step_open_robot(&state, &model, &hold, &zero(), 1e-3).unwrap();
        }
        assert!((state.q - q0).amax() < 1e-12);
    }

    #[test]
    fn open_robot_conserves_kinetic_energy() {
        let model = ArmModel::canonical();
        let mut state = RobotState::open(zero(), joint_vec(&[1.0, 0.0]));
        let e0 = state.kinetic_energy(&model).unwrap();
        for _ in 0..1000 {
            state = step_open_robot(&state, &model, &zero(), &zero(), 1e-3).unwrap();
            let e = state.kinetic_energy(&model).unwrap();
            assert!((e - e0).abs() < 1e-6);
        }
    }

    fn impulse_run(dt: f64) -> RobotState {
        let model = ArmModel::canonical();
        let mut state = RobotState::open(joint_vec(&[0.1, 0.4]), zero());
        let n = (0.4 / dt).round() as usize;
        let kick = joint_vec(&[0.5, -0.2]);
        for k in 0..n {
            let tau = if (k as f64) * dt < 0.1 {
                kick.clone()
            } else {
                zero()
            };
            state = step_open_robot(&state, &model, &zero(), &tau, dt).unwrap();
        }
        state
    }

    #[test]
    fn open_step_is_fourth_order() {
        let reference = impulse_run(1e-4);
        let steps = [4e-3, 2e-3, 1e-3];
        let errors: Vec<f64> = steps
            .iter()
            .map(|&h| (impulse_run(h).q - &reference.q).amax())
            .collect();
        let order = observed_order(&steps, &errors);
        assert!(order >= 3.8, "observed order {order}, errors {errors:?}");
    }
}
