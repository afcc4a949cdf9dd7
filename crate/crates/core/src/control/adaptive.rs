use nalgebra::{DMatrix, DVector};

use crate::dynamics::{regressor, regressor_without_gravity, JointVec, PARAM_COUNT};
use crate::error::{Error, Result};

use super::dynsep::{dynsep_z_step, reference_signals, zeta_star_dot, AuxGains, AuxState, ReferenceSignals};
use super::{trapezoid, Observation, Signal};

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveGains {
    pub aux: AuxGains,
    pub gamma: f64,
    pub gamma_star: f64,
    /// Γ, symmetric positive definite p×p.
    pub gamma_theta: DMatrix<f64>,
    /// Diagonals of Γ*, Γ*_P, Γ*_I.
    pub gamma_w: JointVec,
    pub gamma_wp: JointVec,
    pub gamma_wi: JointVec,
}

impl AdaptiveGains {
    pub fn validate(&self, dof: usize) -> Result<()> {
        self.aux.validate(dof)?;
        for v in [&self.gamma_w, &self.gamma_wp, &self.gamma_wi] {
            if v.len() != dof {
                return Err(Error::Dimension {
                    expected: dof,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite() || *x <= 0.0) {
                return Err(Error::config("adaptation gains must be > 0"));
            }
        }
        let g = &self.gamma_theta;
        if g.nrows() != PARAM_COUNT || g.ncols() != PARAM_COUNT {
            return Err(Error::Dimension {
                expected: PARAM_COUNT,
                got: g.nrows(),
            });
        }
        let symmetric = (g - g.transpose()).amax() <= 1e-12 * g.amax().max(1.0);
        if !symmetric || g.clone().cholesky().is_none() {
            return Err(Error::config("Gamma must be symmetric positive definite"));
        }
        if !(self.gamma >= 0.0 && self.gamma_star >= 0.0) {
            return Err(Error::config("gamma and gamma_star must be >= 0"));
        }
        Ok(())
    }
}

/// Initial estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveInit {
    pub theta_hat: DVector<f64>,
    pub w_hat: JointVec,
    pub wp_hat: JointVec,
    pub wi_hat: JointVec,
}

impl AdaptiveInit {
    /// ϑ̂ = 0, ŵ = 0, ŵ_P = 3, ŵ_I = 0.5.
    pub fn standard(dof: usize) -> Self {
        Self {
            theta_hat: DVector::zeros(PARAM_COUNT),
            w_hat: JointVec::zeros(dof),
            wp_hat: JointVec::from_element(dof, 3.0),
            wi_hat: JointVec::from_element(dof, 0.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveState {
    pub aux: AuxState,
    /// ∫(q_c − z).
    pub int_qc_minus_z: JointVec,
    pub theta_hat: DVector<f64>,
    pub w_hat: JointVec,
    pub wp_hat: JointVec,
    pub wi_hat: JointVec,
    prev_qc_minus_z: Option<JointVec>,
}

impl AdaptiveState {
    pub fn new(z0: JointVec, init: AdaptiveInit) -> Self {
        let m = z0.len();
        Self {
            aux: AuxState::at_rest(z0),
            int_qc_minus_z: JointVec::zeros(m),
            theta_hat: init.theta_hat,
            w_hat: init.w_hat,
            wp_hat: init.wp_hat,
            wi_hat: init.wi_hat,
            prev_qc_minus_z: None,
        }
    }

    /// Advances ∫(q_c − z) with the current sample.
    pub fn accumulate_command_error(&mut self, qc_minus_z: &JointVec, dt: f64) {
        self.int_qc_minus_z += trapezoid(self.prev_qc_minus_z.as_ref(), qc_minus_z, dt);
        self.prev_qc_minus_z = Some(qc_minus_z.clone());
    }

    /// Largest estimate magnitude over ϑ̂, ŵ, ŵ_P, ŵ_I.
    pub fn estimate_sup_norm(&self) -> f64 {
        [
            self.theta_hat.amax(),
            self.w_hat.amax(),
            self.wp_hat.amax(),
            self.wi_hat.amax(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// q̇_c = ż − ŵ_P∘(q_c − z) − ŵ_I∘∫(q_c − z) + ŵ∘(Yϑ̂).
pub fn adaptive_command(
    state: &AdaptiveState,
    z: &JointVec,
    zd: &JointVec,
    qc: &JointVec,
    y: &DMatrix<f64>,
) -> JointVec {
    let y_theta = y * &state.theta_hat;
    zd - state.wp_hat.component_mul(&(qc - z)) - state.wi_hat.component_mul(&state.int_qc_minus_z)
        + state.w_hat.component_mul(&y_theta)
}

/// One explicit Euler step of the estimate dynamics, all driven by s.
#[allow(clippy::too_many_arguments)]
pub fn adaptation_step(
    state: &mut AdaptiveState,
    s: &JointVec,
    y: &DMatrix<f64>,
    z: &JointVec,
    qc: &JointVec,
    int_qc_minus_z: &JointVec,
    gains: &AdaptiveGains,
    dt: f64,
) {
    let y_theta = y * &state.theta_hat;
    state.theta_hat -= &gains.gamma_theta * (y.transpose() * s) * dt;
    state.w_hat -= gains.gamma_w.component_mul(&y_theta.component_mul(s)) * dt;
    state.wp_hat -= gains.gamma_wp.component_mul(&(z - qc).component_mul(s)) * dt;
    state.wi_hat -= gains.gamma_wi.component_mul(&(-int_qc_minus_z).component_mul(s)) * dt;
}

/// Everything computed at one update instant.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveOutput {
    pub command: JointVec,
    pub z: JointVec,
    pub zd: JointVec,
    pub zdd: JointVec,
    pub int_psi_star: JointVec,
    pub refs: ReferenceSignals,
    pub zeta_star_dot: JointVec,
    /// ∫(q_c − z) used in the command.
    pub int_qc_minus_z: JointVec,
    /// Estimates used in the command (before adaptation).
    pub theta_hat: DVector<f64>,
    pub w_hat: JointVec,
    pub wp_hat: JointVec,
    pub wi_hat: JointVec,
}

/// Adaptive dynamic controller for a closed-architecture robot.
///
/// Requires a readable inner command position. With `gravity_columns` off
/// the regressor omits the gravity parameters, which is the model of a robot
/// whose gravity is cancelled by its own inner loop.
#[derive(Debug, Clone)]
pub struct AdaptiveController {
    pub gains: AdaptiveGains,
    pub state: AdaptiveState,
    pub gravity_columns: bool,
    last: Option<AdaptiveOutput>,
}

impl AdaptiveController {
    /// z(0) = q(0), ż(0) = 0.
    pub fn new(gains: AdaptiveGains, q0: JointVec, init: AdaptiveInit) -> Self {
        Self {
            gains,
            state: AdaptiveState::new(q0, init),
            gravity_columns: false,
            last: None,
        }
    }

    pub fn with_gravity_columns(mut self, on: bool) -> Self {
        self.gravity_columns = on;
        self
    }

    pub fn last_output(&self) -> Option<&AdaptiveOutput> {
        self.last.as_ref()
    }

    pub fn regressor(
        &self,
        q: &JointVec,
        qd: &JointVec,
        zeta: &JointVec,
        zetad: &JointVec,
    ) -> Result<DMatrix<f64>> {
        if self.gravity_columns {
            regressor(q, qd, zeta, zetad)
        } else {
            regressor_without_gravity(q, qd, zeta, zetad)
        }
    }

    pub fn step(
        &mut self,
        q: &JointVec,
        qd: &JointVec,
        qc: &JointVec,
        xi_peer: &JointVec,
        dt: f64,
    ) -> Result<AdaptiveOutput> {
        let g = &self.gains;
        self.state.accumulate_command_error(&(qc - &self.state.aux.z), dt);
        let zs = dynsep_z_step(&mut self.state.aux, q, qd, xi_peer, &g.aux, dt)?;
        let refs = reference_signals(
            q,
            qd,
            &zs.z,
            &zs.zd,
            &zs.int_psi_star,
            g.gamma,
            g.gamma_star,
            g.aux.alpha,
        );
        let zsd = zeta_star_dot(&zs.zdd, qd, &zs.zd, &refs.psi_star, g.gamma, g.gamma_star);
        let y = self.regressor(q, qd, &refs.zeta_star, &zsd)?;
        let command = adaptive_command(&self.state, &zs.z, &zs.zd, qc, &y);
        let out = AdaptiveOutput {
            command: command.clone(),
            z: zs.z.clone(),
            zd: zs.zd,
            zdd: zs.zdd,
            int_psi_star: zs.int_psi_star,
            refs: refs.clone(),
            zeta_star_dot: zsd,
            int_qc_minus_z: self.state.int_qc_minus_z.clone(),
            theta_hat: self.state.theta_hat.clone(),
            w_hat: self.state.w_hat.clone(),
            wp_hat: self.state.wp_hat.clone(),
            wi_hat: self.state.wi_hat.clone(),
        };
        let int_qc_minus_z = self.state.int_qc_minus_z.clone();
        adaptation_step(
            &mut self.state,
            &refs.s,
            &y,
            &zs.z,
            qc,
            &int_qc_minus_z,
            &self.gains,
            dt,
        );
        if !self.state.estimate_sup_norm().is_finite() || command.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("adaptive estimates"));
        }
        self.last = Some(out.clone());
        Ok(out)
    }

    pub fn update(&mut self, obs: &Observation, dt: f64) -> Result<JointVec> {
        let qc = obs
            .qc_inner
            .as_ref()
            .ok_or_else(|| Error::config("adaptive control requires a readable inner command"))?;
        let xi_peer = obs.peer_xi(self.gains.aux.alpha);
        self.step(&obs.q, &obs.qd, qc, &xi_peer, dt).map(|o| o.command)
    }

    pub fn signals(&self) -> Vec<Signal> {
        let o = match &self.last {
            Some(o) => o.clone(),
            None => {
                let m = self.state.aux.z.len();
                let zero = JointVec::zeros(m);
                AdaptiveOutput {
                    command: zero.clone(),
                    z: self.state.aux.z.clone(),
                    zd: self.state.aux.zd.clone(),
                    zdd: zero.clone(),
                    int_psi_star: self.state.aux.int_psi_star.clone(),
                    refs: ReferenceSignals {
                        psi_star: zero.clone(),
                        zeta_star: zero.clone(),
                        s: zero.clone(),
                        xi: zero.clone(),
                    },
                    zeta_star_dot: zero,
                    int_qc_minus_z: self.state.int_qc_minus_z.clone(),
                    theta_hat: self.state.theta_hat.clone(),
                    w_hat: self.state.w_hat.clone(),
                    wp_hat: self.state.wp_hat.clone(),
                    wi_hat: self.state.wi_hat.clone(),
                }
            }
        };
        vec![
            ("z", o.z),
            ("zd", o.zd),
            ("zdd", o.zdd),
            ("psi_star", o.refs.psi_star),
            ("int_psi_star", o.int_psi_star),
            ("zeta_star", o.refs.zeta_star),
            ("zeta_star_dot", o.zeta_star_dot),
            ("s", o.refs.s),
            ("int_qc_minus_z", o.int_qc_minus_z),
            ("theta_hat", o.theta_hat),
            ("w_hat", o.w_hat),
            ("wp_hat", o.wp_hat),
            ("wi_hat", o.wi_hat),
        ]
    }
}
