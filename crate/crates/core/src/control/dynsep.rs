use crate::dynamics::JointVec;
use crate::error::{Error, Result};
use crate::integrate::rk4_step;

use super::{Observation, Signal};

/// Gains of the auxiliary (z, ż) command generator.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxGains {
    pub alpha: f64,
    pub lambda: f64,
    /// Diagonals of Λ_D, Λ_P, Λ_I.
    pub lambda_d: JointVec,
    pub lambda_p: JointVec,
    pub lambda_i: JointVec,
}

impl AuxGains {
    pub fn uniform(dof: usize, alpha: f64, lambda: f64, ld: f64, lp: f64, li: f64) -> Self {
        Self {
            alpha,
            lambda,
            lambda_d: JointVec::from_element(dof, ld),
            lambda_p: JointVec::from_element(dof, lp),
            lambda_i: JointVec::from_element(dof, li),
        }
    }

    pub fn dof(&self) -> usize {
        self.lambda_d.len()
    }

    pub fn validate(&self, dof: usize) -> Result<()> {
        for v in [&self.lambda_d, &self.lambda_p, &self.lambda_i] {
            if v.len() != dof {
                return Err(Error::Dimension {
                    expected: dof,
                    got: v.len(),
                });
            }
        }
        let positive = |v: &JointVec| v.iter().all(|x| x.is_finite() && *x > 0.0);
        let ok = self.alpha.is_finite()
            && self.alpha > 0.0
            && self.lambda.is_finite()
            && self.lambda > 0.0
            && positive(&self.lambda_d)
            && positive(&self.lambda_p)
            && positive(&self.lambda_i);
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid auxiliary gains {self:?}")))
        }
    }

    /// z̈ for a given (z, ż, ∫(q − z)) with the measurements held.
    fn zdd(
        &self,
        z: &JointVec,
        zd: &JointVec,
        int_psi: &JointVec,
        q: &JointVec,
        qd: &JointVec,
        xi_peer: &JointVec,
    ) -> JointVec {
        let xi = qd + q * self.alpha;
        -qd * self.alpha - (xi - xi_peer) * self.lambda
            + self.lambda_d.component_mul(&(qd - zd))
            + self.lambda_p.component_mul(&(q - z))
            + self.lambda_i.component_mul(int_psi)
    }
}

/// Auxiliary vector z, its rate, and ∫(q − z).
#[derive(Debug, Clone, PartialEq)]
pub struct AuxState {
    pub z: JointVec,
    pub zd: JointVec,
    pub int_psi_star: JointVec,
}

impl AuxState {
    /// z(0) = z0, ż(0) = 0, no accumulated integral.
    pub fn at_rest(z0: JointVec) -> Self {
        let m = z0.len();
        Self {
            z: z0,
            zd: JointVec::zeros(m),
            int_psi_star: JointVec::zeros(m),
        }
    }
}

/// Values of the auxiliary state at the update instant, before advancing.
#[derive(Debug, Clone, PartialEq)]
pub struct ZStep {
    pub z: JointVec,
    pub zd: JointVec,
    pub zdd: JointVec,
    pub int_psi_star: JointVec,
}

/// Evaluates z̈ at the current instant and advances (z, ż, ∫(q − z)) by one
/// RK4 step of length `dt` with q, q̇ and the delayed peer ξ held.
pub fn dynsep_z_step(
    state: &mut AuxState,
    q: &JointVec,
    qd: &JointVec,
    xi_peer: &JointVec,
    gains: &AuxGains,
    dt: f64,
) -> Result<ZStep> {
    if !(dt > 0.0) {
        return Err(Error::contract("dt must be > 0"));
    }
    let m = q.len();
    let zdd = gains.zdd(&state.z, &state.zd, &state.int_psi_star, q, qd, xi_peer);
    let current = ZStep {
        z: state.z.clone(),
        zd: state.zd.clone(),
        zdd,
        int_psi_star: state.int_psi_star.clone(),
    };

    let mut x = JointVec::zeros(3 * m);
    x.rows_mut(0, m).copy_from(&state.z);
    x.rows_mut(m, m).copy_from(&state.zd);
    x.rows_mut(2 * m, m).copy_from(&state.int_psi_star);
    let x = rk4_step(&x, dt, |x| {
        let z = x.rows(0, m).into_owned();
        let zd = x.rows(m, m).into_owned();
        let i = x.rows(2 * m, m).into_owned();
        let mut dx = JointVec::zeros(3 * m);
        dx.rows_mut(0, m).copy_from(&zd);
        dx.rows_mut(m, m)
            .copy_from(&gains.zdd(&z, &zd, &i, q, qd, xi_peer));
        dx.rows_mut(2 * m, m).copy_from(&(q - &z));
        Ok(dx)
    })?;
    state.z = x.rows(0, m).into_owned();
    state.zd = x.rows(m, m).into_owned();
    state.int_psi_star = x.rows(2 * m, m).into_owned();
    if state.z.iter().chain(state.zd.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("auxiliary state"));
    }
    Ok(current)
}

/// Filtered references built from the auxiliary vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSignals {
    /// ψ* = q − z.
    pub psi_star: JointVec,
    /// ζ* = ż − γψ* − γ*∫ψ*.
    pub zeta_star: JointVec,
    /// s = q̇ − ζ*.
    pub s: JointVec,
    /// ξ = q̇ + αq.
    pub xi: JointVec,
}

#[allow(clippy::too_many_arguments)]
pub fn reference_signals(
    q: &JointVec,
    qd: &JointVec,
    z: &JointVec,
    zd: &JointVec,
    int_psi_star: &JointVec,
    gamma: f64,
    gamma_star: f64,
    alpha: f64,
) -> ReferenceSignals {
    let psi_star = q - z;
    let zeta_star = zd - &psi_star * gamma - int_psi_star * gamma_star;
    let s = qd - &zeta_star;
    ReferenceSignals {
        psi_star,
        zeta_star,
        s,
        xi: qd + q * alpha,
    }
}

/// ζ̇* = z̈ − γ(q̇ − ż) − γ*ψ*, exact given z̈.
pub fn zeta_star_dot(
    zdd: &JointVec,
    qd: &JointVec,
    zd: &JointVec,
    psi_star: &JointVec,
    gamma: f64,
    gamma_star: f64,
) -> JointVec {
    zdd - (qd - zd) * gamma - psi_star * gamma_star
}

/// Kinematic controller with dynamic separation: q̇_c* = ż, z(0) = q_c(0).
#[derive(Debug, Clone)]
pub struct DynSepController {
    pub gains: AuxGains,
    pub aux: AuxState,
    last: Option<ZStep>,
}

impl DynSepController {
    pub fn new(gains: AuxGains, qc0: JointVec) -> Self {
        Self {
            gains,
            aux: AuxState::at_rest(qc0),
            last: None,
        }
    }

    pub fn last_step(&self) -> Option<&ZStep> {
        self.last.as_ref()
    }

    /// Emits the mean of ż over the coming hold interval, (z(t + dt) − z(t))/dt,
    /// so a held command integrates q_c onto z at every update instant.
    pub fn update(&mut self, obs: &Observation, dt: f64) -> Result<JointVec> {
        let xi_peer = obs.peer_xi(self.gains.alpha);
        let step = dynsep_z_step(&mut self.aux, &obs.q, &obs.qd, &xi_peer, &self.gains, dt)?;
        let command = (&self.aux.z - &step.z) / dt;
        self.last = Some(step);
        Ok(command)
    }

    pub fn signals(&self) -> Vec<Signal> {
        let step = self.last.clone().unwrap_or_else(|| ZStep {
            z: self.aux.z.clone(),
            zd: self.aux.zd.clone(),
            zdd: JointVec::zeros(self.aux.z.len()),
            int_psi_star: self.aux.int_psi_star.clone(),
        });
        vec![
            ("z", step.z),
            ("zd", step.zd),
            ("zdd", step.zdd),
            ("int_psi_star", step.int_psi_star),
        ]
    }
}
