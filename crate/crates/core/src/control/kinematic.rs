use crate::dynamics::JointVec;
use crate::error::{Error, Result};

use super::{trapezoid, Observation, Signal};

/// Gains of the kinematic controller with dynamic feedback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicGains {
    /// Coupling gain on the delayed position difference (1/s).
    pub lambda: f64,
    /// Gain on the inner-loop position error (1/s).
    pub lambda_p: f64,
    /// Gain on the integral of the inner-loop position error (1/s²).
    pub lambda_m: f64,
}

impl Default for KinematicGains {
    fn default() -> Self {
        Self {
            lambda: 2.0,
            lambda_p: 5.0,
            lambda_m: 1.0,
        }
    }
}

impl KinematicGains {
    /// λ and λ_P must be positive, λ_M non-negative. λ_M = 0 is admitted so
    /// that the controller without the manipulability term can be studied.
    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda.is_finite()
            && self.lambda_p.is_finite()
            && self.lambda_m.is_finite()
            && self.lambda > 0.0
            && self.lambda_p > 0.0
            && self.lambda_m >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid kinematic gains {self:?}")))
        }
    }
}

/// Which command position the error terms are built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KinematicReference {
    /// The inner-loop command q_c is read from the robot.
    Inner,
    /// The controller's own integrated command q_c*.
    Outer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicOutput {
    pub command: JointVec,
    pub reference: KinematicReference,
    /// q − q_ref.
    pub psi: JointVec,
    /// ∫(q − q_ref).
    pub integral: JointVec,
}

/// q̇_c* = −λ(q − q_peer(t − T)) + λ_P(q − q_ref) + λ_M ∫(q − q_ref).
///
/// If the inner command position is unreadable (or `force_outer` is set)
/// the reference falls back to the controller's own q_c*, whose origin may
/// differ from the inner loop's by an unknown constant.
#[derive(Debug, Clone)]
pub struct KinematicController {
    pub gains: KinematicGains,
    pub force_outer: bool,
    integral: JointVec,
    prev_psi: Option<JointVec>,
    qc_star: JointVec,
    last: Option<KinematicOutput>,
}

impl KinematicController {
    /// `qc_star0` is the origin of the outer command position.
    pub fn new(gains: KinematicGains, qc_star0: JointVec) -> Self {
        let m = qc_star0.len();
        Self {
            gains,
            force_outer: false,
            integral: JointVec::zeros(m),
            prev_psi: None,
            qc_star: qc_star0,
            last: None,
        }
    }

    pub fn with_outer_reference(mut self) -> Self {
        self.force_outer = true;
        self
    }

    pub fn qc_star(&self) -> &JointVec {
        &self.qc_star
    }

    pub fn integral(&self) -> &JointVec {
        &self.integral
    }

    pub fn last_output(&self) -> Option<&KinematicOutput> {
        self.last.as_ref()
    }

    pub fn kinematic_command(
        &mut self,
        q: &JointVec,
        q_inner_c: Option<&JointVec>,
        q_peer_delayed: &JointVec,
        dt: f64,
    ) -> Result<KinematicOutput> {
        if !(dt > 0.0) {
            return Err(Error::contract("dt must be > 0"));
        }
        let (q_ref, reference) = match q_inner_c {
            Some(qc) if !self.force_outer => (qc, KinematicReference::Inner),
            _ => (&self.qc_star, KinematicReference::Outer),
        };
        let psi = q - q_ref;
        self.integral += trapezoid(self.prev_psi.as_ref(), &psi, dt);
        let g = self.gains;
        let command = -(q - q_peer_delayed) * g.lambda + &psi * g.lambda_p + &self.integral * g.lambda_m;
        self.qc_star += &command * dt;
        self.prev_psi = Some(psi.clone());
        let out = KinematicOutput {
            command,
            reference,
            psi,
            integral: self.integral.clone(),
        };
        self.last = Some(out.clone());
        Ok(out)
    }

    pub fn update(&mut self, obs: &Observation, dt: f64) -> Result<JointVec> {
        self.kinematic_command(&obs.q, obs.qc_inner.as_ref(), &obs.peer_q, dt)
            .map(|o| o.command)
    }

    pub fn signals(&self) -> Vec<Signal> {
        match &self.last {
            Some(o) => vec![
                ("psi", o.psi.clone()),
                ("int_psi", o.integral.clone()),
                ("qc_star", self.qc_star.clone()),
            ],
            None => {
                let z = JointVec::zeros(self.qc_star.len());
                vec![
                    ("psi", z.clone()),
                    ("int_psi", z),
                    ("qc_star", self.qc_star.clone()),
                ]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::joint_vec;

    fn zero() -> JointVec {
        JointVec::zeros(2)
    }

    #[test]
    fn consensus_fixed_point_gives_zero_command() {
        let q = joint_vec(&[0.3, -0.1]);
        let mut c = KinematicController::new(KinematicGains::default(), q.clone());
        let out = c.kinematic_command(&q, Some(&q), &q, 1e-3).unwrap();
        assert_eq!(out.command, zero());
        assert_eq!(out.reference, KinematicReference::Inner);
    }

    #[test]
    fn coupling_term_sign() {
        let gains = KinematicGains {
            lambda: 36.0,
            lambda_p: 1.0,
            lambda_m: 1.0,
        };
        let mut c = KinematicController::new(gains, zero());
        let q = joint_vec(&[0.1, 0.0]);
        let out = c.kinematic_command(&q, Some(&q), &zero(), 1e-3).unwrap();
        assert!((out.command - joint_vec(&[-3.6, 0.0])).amax() < 1e-12);
    }

    #[test]
    fn inner_error_terms_enter_with_plus_sign() {
        let gains = KinematicGains {
            lambda: 1.0,
            lambda_p: 2.0,
            lambda_m: 5.0,
        };
        let mut c = KinematicController::new(gains, zero());
        let q = joint_vec(&[0.1, 0.0]);
        let dt = 0.01;
        let first = c.kinematic_command(&q, Some(&zero()), &q, dt).unwrap();
        assert!((first.command - joint_vec(&[0.2, 0.0])).amax() < 1e-15);
        let second = c.kinematic_command(&q, Some(&zero()), &q, dt).unwrap();
        // ∫ψ after one trapezoid interval is 0.1·dt.
        assert!((second.integral[0] - 0.1 * dt).abs() < 1e-15);
        assert!((second.command[0] - (0.2 + 5.0 * 0.1 * dt)).abs() < 1e-15);
    }

    #[test]
    fn falls_back_to_outer_command_when_unreadable() {
        let gains = KinematicGains::default();
        let origin = joint_vec(&[0.5, 0.0]);
        let mut c = KinematicController::new(gains, origin.clone());
        let q = joint_vec(&[0.5, 0.0]);
        let out = c.kinematic_command(&q, None, &q, 1e-3).unwrap();
        assert_eq!(out.reference, KinematicReference::Outer);
        assert_eq!(out.psi, zero());

        let mut forced = KinematicController::new(gains, origin).with_outer_reference();
        let out = forced.kinematic_command(&q, Some(&zero()), &q, 1e-3).unwrap();
        assert_eq!(out.reference, KinematicReference::Outer);
    }

    #[test]
    fn outer_command_integrates_the_emitted_command() {
        let mut c = KinematicController::new(KinematicGains::default(), zero());
        let dt = 1e-3;
        let mut expected = zero();
        for k in 0..100 {
            let q = joint_vec(&[0.01 * k as f64, 0.0]);
            let out = c.kinematic_command(&q, None, &zero(), dt).unwrap();
            expected += out.command * dt;
        }
        assert!((c.qc_star() - expected).amax() < 1e-14);
    }
}
