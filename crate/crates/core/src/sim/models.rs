use crate::dynamics::JointVec;
use crate::error::{Error, Result};

/// Source of the operator torque τ1* applied to the master.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum OperatorModel {
    #[default]
    None,
    Constant {
        tau: JointVec,
    },
    /// `tau` on [t_on, t_off), zero otherwise.
    Pulse {
        tau: JointVec,
        t_on: f64,
        t_off: f64,
    },
    /// Diagonal spring-damper pulling the master toward `q_target`.
    SpringPull {
        k_h: JointVec,
        d_h: JointVec,
        q_target: JointVec,
    },
    /// Supplied from outside the simulation step by step.
    Interactive,
}

impl OperatorModel {
    pub fn validate(&self, dof: usize) -> Result<()> {
        let dims: Vec<&JointVec> = match self {
            OperatorModel::None | OperatorModel::Interactive => vec![],
            OperatorModel::Constant { tau } => vec![tau],
            OperatorModel::Pulse { tau, t_on, t_off } => {
                if !(t_on.is_finite() && t_off.is_finite() && t_on <= t_off) {
                    return Err(Error::config("operator pulse needs t_on <= t_off"));
                }
                vec![tau]
            }
            OperatorModel::SpringPull { k_h, d_h, q_target } => {
                if k_h
                    .iter()
                    .chain(d_h.iter())
                    .any(|g| !(*g >= 0.0) || !g.is_finite())
                {
                    return Err(Error::config("operator spring gains must be >= 0"));
                }
                vec![k_h, d_h, q_target]
            }
        };
        for v in dims {
            if v.len() != dof {
                return Err(Error::Dimension {
                    expected: dof,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::config("operator parameters must be finite"));
            }
        }
        Ok(())
    }
}

/// τ1* at time `t`. `interactive` is the externally supplied value, used
/// only by [`OperatorModel::Interactive`].
pub fn operator_torque(
    model: &OperatorModel,
    t: f64,
    q1: &JointVec,
    qd1: &JointVec,
    interactive: Option<&JointVec>,
) -> JointVec {
    let m = q1.len();
    match model {
        OperatorModel::None => JointVec::zeros(m),
        OperatorModel::Constant { tau } => tau.clone(),
        OperatorModel::Pulse { tau, t_on, t_off } => {
            if *t_on <= t && t < *t_off {
                tau.clone()
            } else {
                JointVec::zeros(m)
            }
        }
        OperatorModel::SpringPull { k_h, d_h, q_target } => {
            k_h.component_mul(&(q_target - q1)) - d_h.component_mul(qd1)
        }
        OperatorModel::Interactive => interactive.cloned().unwrap_or_else(|| JointVec::zeros(m)),
    }
}

/// Source of the environment torque τ2* exerted by the slave.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum EnvironmentModel {
    #[default]
    None,
    /// One-sided joint-space spring-damper engaged for q2 > q_wall.
    JointWall {
        q_wall: JointVec,
        k_e: JointVec,
        d_e: JointVec,
    },
}

impl EnvironmentModel {
    pub fn validate(&self, dof: usize) -> Result<()> {
        if let EnvironmentModel::JointWall { q_wall, k_e, d_e } = self {
            for v in [q_wall, k_e, d_e] {
                if v.len() != dof {
                    return Err(Error::Dimension {
                        expected: dof,
                        got: v.len(),
                    });
                }
            }
            if q_wall.iter().any(|x| !x.is_finite())
                || k_e
                    .iter()
                    .chain(d_e.iter())
                    .any(|g| !(*g >= 0.0) || !g.is_finite())
            {
                return Err(Error::config("wall gains must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// τ2*, positive when the slave pushes into the wall.
pub fn environment_torque(model: &EnvironmentModel, q2: &JointVec, qd2: &JointVec) -> JointVec {
    match model {
        EnvironmentModel::None => JointVec::zeros(q2.len()),
        EnvironmentModel::JointWall { q_wall, k_e, d_e } => JointVec::from_fn(q2.len(), |k, _| {
            let pen = q2[k] - q_wall[k];
            if pen > 0.0 {
                k_e[k] * pen + d_e[k] * qd2[k].max(0.0)
            } else {
                0.0
            }
        }),
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
    fn operator_models() {
        let q = joint_vec(&[0.1, 0.2]);
        assert_eq!(
            operator_torque(&OperatorModel::None, 1.0, &q, &zero(), None),
            zero()
        );

        let spring = OperatorModel::SpringPull {
            k_h: joint_vec(&[2.0, 2.0]),
            d_h: joint_vec(&[1.0, 1.0]),
            q_target: q.clone(),
        };
        assert_eq!(operator_torque(&spring, 0.0, &q, &zero(), None), zero());
        let pulled = operator_torque(&spring, 0.0, &joint_vec(&[-0.2, 0.2]), &zero(), None);
        assert!((pulled - joint_vec(&[0.6, 0.0])).amax() < 1e-15);

        let pulse = OperatorModel::Pulse {
            tau: joint_vec(&[1.0, 0.0]),
            t_on: 1.0,
            t_off: 2.0,
        };
        assert_eq!(operator_torque(&pulse, 0.5, &q, &zero(), None), zero());
        assert_eq!(operator_torque(&pulse, 1.0, &q, &zero(), None)[0], 1.0);
        assert_eq!(operator_torque(&pulse, 2.0, &q, &zero(), None), zero());

        let live = joint_vec(&[0.3, -0.3]);
        assert_eq!(
            operator_torque(&OperatorModel::Interactive, 0.0, &q, &zero(), Some(&live)),
            live
        );
        assert_eq!(
            operator_torque(&OperatorModel::Interactive, 0.0, &q, &zero(), None),
            zero()
        );
    }

    #[test]
    fn wall_models() {
        let wall = EnvironmentModel::JointWall {
            q_wall: joint_vec(&[0.5, 0.5]),
            k_e: joint_vec(&[50.0, 50.0]),
            d_e: joint_vec(&[5.0, 5.0]),
        };
        assert_eq!(
            environment_torque(&wall, &joint_vec(&[0.1, 0.4]), &zero()),
            zero()
        );
        let tau = environment_torque(&wall, &joint_vec(&[0.52, 0.0]), &zero());
        assert!((tau - joint_vec(&[1.0, 0.0])).amax() < 1e-12);

        let pushing = environment_torque(&wall, &joint_vec(&[0.52, 0.0]), &joint_vec(&[0.1, 0.0]));
        assert!((pushing[0] - 1.5).abs() < 1e-12);
        let retracting = environment_torque(&wall, &joint_vec(&[0.52, 0.0]), &joint_vec(&[-0.1, 0.0]));
        assert!((retracting[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        let bad = OperatorModel::SpringPull {
            k_h: joint_vec(&[-1.0, 0.0]),
            d_h: zero(),
            q_target: zero(),
        };
        assert!(bad.validate(2).is_err());
        assert!(OperatorModel::Constant {
            tau: joint_vec(&[1.0])
        }
        .validate(2)
        .is_err());
    }
}
