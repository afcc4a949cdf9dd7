//! Closed-form rigid-body dynamics of a two-link planar manipulator.
//!
//! Joint angles are measured from the horizontal, gravity acts along −y.
//! The dynamics are linear in the five lumped parameters
//! `(a1, a2, a3, b1, b2)`:
//!
//! ```text
//! M(q) = [ a1 + 2 a2 cos q2   a3 + a2 cos q2 ]
//!        [ a3 + a2 cos q2     a3             ]
//! g(q) = ( b1 cos q1 + b2 cos(q1 + q2),  b2 cos(q1 + q2) )
//! ```
//!
//! Vectors are runtime-sized ([`JointVec`]) so that the rest of the crate
//! never hard-codes the DOF count.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Joint-space vector (rad, rad/s or N·m depending on context).
pub type JointVec = DVector<f64>;

/// Number of lumped dynamic parameters of the two-link arm.
pub const PARAM_COUNT: usize = 5;

/// Indices of the gravity-only parameters (`b1`, `b2`) in the parameter vector.
pub const GRAVITY_PARAMS: [usize; 2] = [3, 4];

pub fn joint_vec(values: &[f64]) -> JointVec {
    DVector::from_column_slice(values)
}

pub(crate) fn check_finite(v: &JointVec, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn check_dim(v: &JointVec, dof: usize) -> Result<()> {
    if v.len() == dof {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected: dof,
            got: v.len(),
        })
    }
}

/// Physical parameters of a two-link planar arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmModel {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    pub lc1: f64,
    pub lc2: f64,
    pub i1: f64,
    pub i2: f64,
    /// Gravitational acceleration; 0 models a horizontal or pre-compensated arm.
    pub g0: f64,
}

impl Default for ArmModel {
    fn default() -> Self {
        Self::canonical()
    }
}

impl ArmModel {
    pub const DOF: usize = 2;

    /// Uniform slender links: m = (1, 0.8) kg, l = (0.5, 0.4) m, COM at mid-link, g0 = 0.
    pub fn canonical() -> Self {
        Self::uniform_links(1.0, 0.8, 0.5, 0.4, 0.0)
    }

    /// A light desktop haptic device, roughly the size of a stylus-type master.
    pub fn haptic_master() -> Self {
        Self::uniform_links(0.08, 0.06, 0.133, 0.133, 0.0)
    }

    pub fn uniform_links(m1: f64, m2: f64, l1: f64, l2: f64, g0: f64) -> Self {
        Self {
            m1,
            m2,
            l1,
            l2,
            lc1: l1 / 2.0,
            lc2: l2 / 2.0,
            i1: m1 * l1 * l1 / 12.0,
            i2: m2 * l2 * l2 / 12.0,
            g0,
        }
    }

    pub fn with_gravity(mut self, g0: f64) -> Self {
        self.g0 = g0;
        self
    }

    pub fn dof(&self) -> usize {
        Self::DOF
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.m1, self.m2, self.l1, self.l2, self.lc1, self.lc2, self.i1, self.i2, self.g0,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("arm model parameters must be finite"));
        }
        if self.m1 <= 0.0 || self.m2 <= 0.0 {
            return Err(Error::config("link masses must be > 0"));
        }
        if self.l1 <= 0.0 || self.l2 <= 0.0 {
            return Err(Error::config("link lengths must be > 0"));
        }
        if !(self.lc1 > 0.0 && self.lc1 <= self.l1 && self.lc2 > 0.0 && self.lc2 <= self.l2) {
            return Err(Error::config("center-of-mass offsets must satisfy 0 < lc <= l"));
        }
        if self.i1 < 0.0 || self.i2 < 0.0 {
            return Err(Error::config("link inertias must be >= 0"));
        }
        Ok(())
    }

    /// The lumped parameter vector ϑ = (a1, a2, a3, b1, b2).
    pub fn params(&self) -> DynParams {
        let a1 = self.i1
            + self.i2
            + self.m1 * self.lc1 * self.lc1
            + self.m2 * (self.l1 * self.l1 + self.lc2 * self.lc2);
        let a2 = self.m2 * self.l1 * self.lc2;
        let a3 = self.i2 + self.m2 * self.lc2 * self.lc2;
        let b1 = (self.m1 * self.lc1 + self.m2 * self.l1) * self.g0;
        let b2 = self.m2 * self.lc2 * self.g0;
        DynParams {
            theta: DVector::from_column_slice(&[a1, a2, a3, b1, b2]),
        }
    }

    fn check_q(&self, q: &JointVec) -> Result<()> {
        check_dim(q, Self::DOF)?;
        check_finite(q, "joint position")
    }

    pub fn mass_matrix(&self, q: &JointVec) -> Result<DMatrix<f64>> {
        self.check_q(q)?;
        let p = self.params();
        let (a1, a2, a3) = (p.theta[0], p.theta[1], p.theta[2]);
        let c2 = q[1].cos();
        let off = a3 + a2 * c2;
        Ok(DMatrix::from_row_slice(2, 2, &[a1 + 2.0 * a2 * c2, off, off, a3]))
    }

    /// Christoffel-symbol Coriolis matrix, so that Ṁ − 2C is skew-symmetric.
    pub fn coriolis_matrix(&self, q: &JointVec, qd: &JointVec) -> Result<DMatrix<f64>> {
        self.check_q(q)?;
        check_dim(qd, Self::DOF)?;
        check_finite(qd, "joint velocity")?;
        let a2 = self.params().theta[1];
        let h = -a2 * q[1].sin();
        Ok(DMatrix::from_row_slice(
            2,
            2,
            &[h * qd[1], h * (qd[0] + qd[1]), -h * qd[0], 0.0],
        ))
    }

    pub fn gravity_vector(&self, q: &JointVec) -> Result<JointVec> {
        self.check_q(q)?;
        if self.g0 == 0.0 {
            return Ok(DVector::zeros(Self::DOF));
        }
        let p = self.params();
        let c12 = (q[0] + q[1]).cos();
        Ok(DVector::from_column_slice(&[
            p.theta[3] * q[0].cos() + p.theta[4] * c12,
            p.theta[4] * c12,
        ]))
    }

    /// End-effector position and its Jacobian. Singular configurations are returned as-is.
    pub fn forward_kinematics_and_jacobian(&self, q: &JointVec) -> Result<(Vector2<f64>, Matrix2<f64>)> {
        self.check_q(q)?;
        let (s1, c1) = q[0].sin_cos();
        let (s12, c12) = (q[0] + q[1]).sin_cos();
        let x = Vector2::new(self.l1 * c1 + self.l2 * c12, self.l1 * s1 + self.l2 * s12);
        let jac = Matrix2::new(
            -self.l1 * s1 - self.l2 * s12,
            -self.l2 * s12,
            self.l1 * c1 + self.l2 * c12,
            self.l2 * c12,
        );
        Ok((x, jac))
    }

    /// Smallest eigenvalue of M(q).
    pub fn min_inertia_eigenvalue(&self, q: &JointVec) -> Result<f64> {
        let m = self.mass_matrix(q)?;
        Ok(SymmetricEigen::new(m).eigenvalues.min())
    }
}

/// Lumped dynamic parameters ϑ = (a1, a2, a3, b1, b2).
#[derive(Debug, Clone, PartialEq)]
pub struct DynParams {
    pub theta: DVector<f64>,
}

impl DynParams {
    pub fn a1(&self) -> f64 {
        self.theta[0]
    }
    pub fn a2(&self) -> f64 {
        self.theta[1]
    }
    pub fn a3(&self) -> f64 {
        self.theta[2]
    }

    /// det M(q) = a1·a3 − a3² − a2²·cos²q2, so with a3 > 0 the inertia is
    /// uniformly positive definite iff a1·a3 − a3² − a2² > 0.
    pub fn is_physical(&self) -> bool {
        let (a1, a2, a3) = (self.a1(), self.a2(), self.a3());
        a1 > a3 && a3 > 0.0 && a2 >= 0.0 && a1 * a3 - a3 * a3 - a2 * a2 > 0.0
    }
}

/// Regressor Y(q, q̇, ζ, ζ̇) with Y·ϑ = M(q)ζ̇ + C(q, q̇)ζ + g(q).
pub fn regressor(q: &JointVec, qd: &JointVec, zeta: &JointVec, zetad: &JointVec) -> Result<DMatrix<f64>> {
    for v in [q, qd, zeta, zetad] {
        check_dim(v, ArmModel::DOF)?;
        check_finite(v, "regressor argument")?;
    }
    let (s2, c2) = q[1].sin_cos();
    let c1 = q[0].cos();
    let c12 = (q[0] + q[1]).cos();
    let y12 = c2 * (2.0 * zetad[0] + zetad[1]) - s2 * (qd[1] * zeta[0] + (qd[0] + qd[1]) * zeta[1]);
    let y22 = c2 * zetad[0] + s2 * qd[0] * zeta[0];
    #[rustfmt::skip]
    let y = DMatrix::from_row_slice(2, PARAM_COUNT, &[
        zetad[0], y12, zetad[1],            c1,  c12,
        0.0,      y22, zetad[0] + zetad[1], 0.0, c12,
    ]);
    Ok(y)
}

/// Regressor with the gravity columns zeroed, for arms whose gravity is
/// compensated outside the adaptive loop.
pub fn regressor_without_gravity(
    q: &JointVec,
    qd: &JointVec,
    zeta: &JointVec,
    zetad: &JointVec,
) -> Result<DMatrix<f64>> {
    let mut y = regressor(q, qd, zeta, zetad)?;
    for col in GRAVITY_PARAMS {
        y.column_mut(col).fill(0.0);
    }
    Ok(y)
}
