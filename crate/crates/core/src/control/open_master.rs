use nalgebra::{DMatrix, DVector};

use crate::dynamics::{regressor, regressor_without_gravity, JointVec, PARAM_COUNT};
use crate::error::{Error, Result};
use crate::integrate::rk4_step;

use super::{Observation, Signal};

/// Parameters of the torque-level master controller.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenMasterParams {
    pub alpha: f64,
    pub lambda_m: f64,
    pub lambda: f64,
    /// Diagonal of K1.
    pub k1: JointVec,
    /// Γ1, symmetric positive definite p×p.
    pub gamma1: DMatrix<f64>,
}

impl OpenMasterParams {
    pub fn validate(&self, dof: usize) -> Result<()> {
        if self.k1.len() != dof {
            return Err(Error::Dimension {
                expected: dof,
                got: self.k1.len(),
            });
        }
        let ok = [self.alpha, self.lambda_m, self.lambda]
            .iter()
            .all(|x| x.is_finite() && *x > 0.0)
            && self.k1.iter().all(|x| x.is_finite() && *x > 0.0)
            && self.gamma1.nrows() == PARAM_COUNT
            && self.gamma1.ncols() == PARAM_COUNT
            && self.gamma1.clone().cholesky().is_some();
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid open-master parameters {self:?}")))
        }
    }

    fn z_rate(&self, z: &JointVec, qd: &JointVec, xi: &JointVec, xi_peer: &JointVec) -> JointVec {
        -qd * self.alpha - (xi - xi_peer) * self.lambda + (qd - z) * self.lambda_m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpenMasterState {
    pub z1: JointVec,
    pub theta1_hat: DVector<f64>,
}

impl OpenMasterState {
    /// z1(0) = 0, ϑ̂1(0) = 0.
    pub fn zero(dof: usize) -> Self {
        Self {
            z1: JointVec::zeros(dof),
            theta1_hat: DVector::zeros(PARAM_COUNT),
        }
    }
}

/// Output of one update.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenMasterOutput {
    pub tau: JointVec,
    pub z1: JointVec,
    pub z1_dot: JointVec,
    pub s1: JointVec,
}

/// τ1 = −K1 s1 + Y(q1, q̇1, z1, ż1) ϑ̂1 with s1 = q̇1 − z1. Advances z1 by RK4
/// with measurements held and ϑ̂1 by explicit Euler.
pub fn open_torque_master(
    state: &mut OpenMasterState,
    q1: &JointVec,
    qd1: &JointVec,
    xi2_delayed: &JointVec,
    params: &OpenMasterParams,
    gravity_columns: bool,
    dt: f64,
) -> Result<OpenMasterOutput> {
    if !(dt > 0.0) {
        return Err(Error::contract("dt must be > 0"));
    }
    let xi1 = qd1 + q1 * params.alpha;
    let z1 = state.z1.clone();
    let z1_dot = params.z_rate(&z1, qd1, &xi1, xi2_delayed);
    let s1 = qd1 - &z1;
    let y = if gravity_columns {
        regressor(q1, qd1, &z1, &z1_dot)?
    } else {
        regressor_without_gravity(q1, qd1, &z1, &z1_dot)?
    };
    let tau = -params.k1.component_mul(&s1) + &y * &state.theta1_hat;
    state.theta1_hat -= &params.gamma1 * (y.transpose() * &s1) * dt;
    state.z1 = rk4_step(&z1, dt, |z| Ok(params.z_rate(z, qd1, &xi1, xi2_delayed)))?;
    if tau.iter().chain(state.z1.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("open-master controller"));
    }
    Ok(OpenMasterOutput { tau, z1, z1_dot, s1 })
}

#[derive(Debug, Clone)]
pub struct OpenMasterController {
    pub params: OpenMasterParams,
    pub state: OpenMasterState,
    pub gravity_columns: bool,
    last: Option<OpenMasterOutput>,
}

impl OpenMasterController {
    pub fn new(params: OpenMasterParams, dof: usize) -> Self {
        Self {
            params,
            state: OpenMasterState::zero(dof),
            gravity_columns: false,
            last: None,
        }
    }

    pub fn last_output(&self) -> Option<&OpenMasterOutput> {
        self.last.as_ref()
    }

    pub fn update(&mut self, obs: &Observation, dt: f64) -> Result<JointVec> {
        let xi2 = obs.peer_xi(self.params.alpha);
        let out = open_torque_master(
            &mut self.state,
            &obs.q,
            &obs.qd,
            &xi2,
            &self.params,
            self.gravity_columns,
            dt,
        )?;
        let tau = out.tau.clone();
        self.last = Some(out);
        Ok(tau)
    }

    pub fn signals(&self) -> Vec<Signal> {
        let m = self.state.z1.len();
        let (z1, s1, tau) = match &self.last {
            Some(o) => (o.z1.clone(), o.s1.clone(), o.tau.clone()),
            None => (self.state.z1.clone(), JointVec::zeros(m), JointVec::zeros(m)),
        };
        vec![
            ("tau_cmd", tau),
            ("z", z1),
            ("s", s1),
            ("theta_hat", self.state.theta1_hat.clone()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::joint_vec;

    fn params() -> OpenMasterParams {
        OpenMasterParams {
            alpha: 1.5,
            lambda_m: 2.0,
            lambda: 36.0,
            k1: JointVec::from_element(2, 0.02),
            gamma1: DMatrix::identity(PARAM_COUNT, PARAM_COUNT) * 0.0005,
        }
    }

    #[test]
    fn synchronized_state_gives_zero_torque() {
        let p = params();
        let q = joint_vec(&[0.2, 0.1]);
        let qd = joint_vec(&[0.3, -0.1]);
        let mut st = OpenMasterState {
            z1: qd.clone(),
            theta1_hat: DVector::zeros(PARAM_COUNT),
        };
        let xi = &qd + &q * p.alpha;
        let out = open_torque_master(&mut st, &q, &qd, &xi, &p, false, 1e-3).unwrap();
        assert_eq!(out.tau, JointVec::zeros(2));
        assert!((out.z1_dot + &qd * p.alpha).amax() < 1e-15);
    }

    #[test]
    fn damping_on_velocity_error() {
        let p = params();
        let zero = JointVec::zeros(2);
        let qd = joint_vec(&[1.0, 0.0]);
        let mut st = OpenMasterState::zero(2);
        let out = open_torque_master(&mut st, &zero, &qd, &qd, &p, false, 1e-3).unwrap();
        assert!((out.tau - joint_vec(&[-0.02, 0.0])).amax() < 1e-15);
    }

    #[test]
    fn rest_is_a_fixed_point() {
        let p = params();
        let q = joint_vec(&[0.4, -0.3]);
        let zero = JointVec::zeros(2);
        let xi = &q * p.alpha;
        let mut st = OpenMasterState::zero(2);
        for _ in 0..100 {
            let out = open_torque_master(&mut st, &q, &zero, &xi, &p, true, 1e-3).unwrap();
            assert_eq!(out.tau, zero);
        }
        assert_eq!(st, OpenMasterState::zero(2));
    }
}
