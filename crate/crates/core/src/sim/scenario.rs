use nalgebra::DMatrix;

use crate::analysis::{check_cubic_stability, check_gain_condition};
use crate::channel::DelayProfile;
use crate::closed_robot::{Architecture, InnerGains};
use crate::control::{AdaptiveGains, AdaptiveInit, AuxGains, KinematicGains, OpenMasterParams};
use crate::dynamics::{ArmModel, JointVec, PARAM_COUNT};
use crate::error::{Error, Result};

use super::models::{EnvironmentModel, OperatorModel};

/// Horizon (s) of the manipulability probe; the λ_M = 0 loop settles on
/// the K_P/K_I time scale of the inner loop.
pub const PROBE_HORIZON: f64 = 120.0;

/// Probe torque (N·m) on the master.
pub fn probe_torque() -> JointVec {
    JointVec::from_vec(vec![0.5, 0.0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerMode {
    /// Kinematic control built on the readable inner command.
    Kinematic,
    /// Kinematic control built on the controller's own command position.
    KinematicFallback,
    /// Kinematic control with q̇_c* = ż.
    DynSep,
    /// Adaptive dynamic control on both closed robots.
    Adaptive,
    /// Torque-controlled master, adaptive closed-architecture slave.
    HybridOpenMaster,
}

impl ControllerMode {
    pub const ALL: [ControllerMode; 5] = [
        ControllerMode::Kinematic,
        ControllerMode::KinematicFallback,
        ControllerMode::DynSep,
        ControllerMode::Adaptive,
        ControllerMode::HybridOpenMaster,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControllerMode::Kinematic => "kinematic",
            ControllerMode::KinematicFallback => "kinematic_fallback",
            ControllerMode::DynSep => "dynsep",
            ControllerMode::Adaptive => "adaptive",
            ControllerMode::HybridOpenMaster => "hybrid_open_master",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }

    /// Architecture of robot `i` (0 = master, 1 = slave).
    pub fn architecture(self, i: usize) -> Architecture {
        if self == ControllerMode::HybridOpenMaster && i == 0 {
            Architecture::OpenTorque
        } else {
            Architecture::Closed
        }
    }

    /// Whether robot `i` runs the adaptive controller.
    pub fn is_adaptive(self, i: usize) -> bool {
        match self {
            ControllerMode::Adaptive => true,
            ControllerMode::HybridOpenMaster => i == 1,
            _ => false,
        }
    }
}

/// One robot and the outer-loop parameters it may use. Only the parameters
/// relevant to the scenario's controller mode are read; `adaptive.aux` is
/// also the command generator of the dynamic-separation mode.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotSpec {
    pub model: ArmModel,
    pub inner: InnerGains,
    pub q0: JointVec,
    pub qd0: JointVec,
    pub command_readable: bool,
    pub gravity_precompensated: bool,
    /// Origin of the outer command position relative to the inner one.
    pub command_offset: JointVec,
    pub kinematic: KinematicGains,
    pub adaptive: AdaptiveGains,
    pub adaptive_init: AdaptiveInit,
    pub open_master: OpenMasterParams,
}

impl RobotSpec {
    pub fn dof(&self) -> usize {
        self.model.dof()
    }

    /// The regressor needs gravity columns only if gravity acts on the
    /// robot and nothing cancels it.
    pub fn needs_gravity_columns(&self) -> bool {
        !self.gravity_precompensated && self.model.g0 != 0.0
    }
}

/// Adaptive gains used by the slave in the hybrid experiment.
pub fn standard_adaptive_gains(dof: usize) -> AdaptiveGains {
    AdaptiveGains {
        aux: AuxGains::uniform(dof, 1.5, 20.0, 15.0, 75.0, 125.0),
        gamma: 30.0,
        gamma_star: 30.0,
        gamma_theta: DMatrix::identity(PARAM_COUNT, PARAM_COUNT) * 0.3,
        gamma_w: JointVec::from_element(dof, 0.005),
        gamma_wp: JointVec::from_element(dof, 10.0),
        gamma_wi: JointVec::from_element(dof, 10.0),
    }
}

/// Torque-level master parameters of the hybrid experiment.
pub fn standard_open_master(dof: usize) -> OpenMasterParams {
    OpenMasterParams {
        alpha: 1.5,
        lambda_m: 2.0,
        lambda: 36.0,
        k1: JointVec::from_element(dof, 0.02),
        gamma1: DMatrix::identity(PARAM_COUNT, PARAM_COUNT) * 0.0005,
    }
}

impl RobotSpec {
    /// A closed-architecture robot at `q0` with default parameters.
    pub fn standard(model: ArmModel, q0: JointVec) -> Self {
        let m = model.dof();
        Self {
            inner: InnerGains::uniform(m, 10.0, 40.0, 4.0),
            qd0: JointVec::zeros(m),
            command_readable: true,
            gravity_precompensated: true,
            command_offset: JointVec::zeros(m),
            kinematic: KinematicGains::default(),
            adaptive: standard_adaptive_gains(m),
            adaptive_init: AdaptiveInit::standard(m),
            open_master: standard_open_master(m),
            model,
            q0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub mode: ControllerMode,
    pub master: RobotSpec,
    pub slave: RobotSpec,
    /// Master → slave delay T1.
    pub channel_fwd: DelayProfile,
    /// Slave → master delay T2.
    pub channel_bwd: DelayProfile,
    pub operator: OperatorModel,
    pub environment: EnvironmentModel,
    pub duration: f64,
    pub plant_dt: f64,
    pub master_cmd_dt: f64,
    pub slave_cmd_dt: f64,
    /// Log every `decimation`-th plant step.
    pub decimation: usize,
    pub seed: u64,
}

impl Scenario {
    /// Defaults shared by every mode: two canonical arms 0.3 rad apart,
    /// random delays in [0.3, 0.9] s redrawn every 96 ms forward and 100 ms
    /// backward, 1 ms plant and master steps and an 8 ms slave command.
    pub fn standard(mode: ControllerMode) -> Self {
        let seed = 42;
        let model = ArmModel::canonical();
        let mut master = RobotSpec::standard(model.clone(), JointVec::from_vec(vec![0.6, 0.3]));
        let slave = RobotSpec::standard(model, JointVec::from_vec(vec![0.3, 0.3]));
        let mut duration = 30.0;
        if mode == ControllerMode::HybridOpenMaster {
            master.model = ArmModel::haptic_master();
            duration = 60.0;
        }
        let mut sc = Self {
            mode,
            master,
            slave,
            channel_fwd: DelayProfile::piecewise_uniform(0.3, 0.9, 0.096, 0),
            channel_bwd: DelayProfile::piecewise_uniform(0.3, 0.9, 0.1, 0),
            operator: OperatorModel::None,
            environment: EnvironmentModel::None,
            duration,
            plant_dt: 1e-3,
            master_cmd_dt: 1e-3,
            slave_cmd_dt: 8e-3,
            decimation: 1,
            seed,
        };
        sc.reseed(seed);
        sc
    }

    /// Quasi-static contact: the operator spring pulls the master toward
    /// (0.9, 0.7) while a joint wall at (0.45, 0.4) blocks the slave, with
    /// K_I = 1 on the master and 2 on the slave. Λ_I is shared, so the
    /// predicted ratio τ1*/τ2* is 0.5 in every mode that has one.
    ///
    /// Γ* is reduced to 1e-5: as ŵ and ϑ̂ learn, the ŵ∘(Yϑ̂) feedforward
    /// carries a velocity feedback about (λ + γ − Λ_D)·ŵ·M̂ that the sampled
    /// loop cannot sustain on the light distal link while in contact.
    pub fn contact(mode: ControllerMode) -> Self {
        let mut sc = Self::standard(mode);
        let v = |a: f64, b: f64| JointVec::from_vec(vec![a, b]);
        for (i, ki) in [(0, 1.0), (1, 2.0)] {
            let r = sc.robot_mut(i);
            r.inner = InnerGains::uniform(2, 10.0, 20.0, ki);
            r.adaptive.gamma_w = JointVec::from_element(2, 1e-5);
        }
        sc.environment = EnvironmentModel::JointWall {
            q_wall: v(0.45, 0.4),
            k_e: v(50.0, 50.0),
            d_e: v(5.0, 5.0),
        };
        sc.operator = OperatorModel::SpringPull {
            k_h: v(2.0, 2.0),
            d_h: v(0.5, 0.5),
            q_target: v(0.9, 0.7),
        };
        sc.duration = 120.0;
        sc
    }

    /// Kinematic free motion whose manipulability is probed, with the given λ_M.
    pub fn manipulability_base(lambda_m: f64) -> Self {
        let mut sc = Self::standard(ControllerMode::Kinematic);
        for i in 0..2 {
            sc.robot_mut(i).kinematic.lambda_m = lambda_m;
        }
        sc.duration = PROBE_HORIZON;
        sc
    }

    /// Sets the scenario seed and derives the random delay seeds from it.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        for (profile, salt) in [(&mut self.channel_fwd, 0u64), (&mut self.channel_bwd, 1)] {
            if let DelayProfile::PiecewiseUniform { seed: s, .. } = profile {
                *s = derive_seed(seed, salt);
            }
        }
    }

    pub fn robot(&self, i: usize) -> &RobotSpec {
        if i == 0 {
            &self.master
        } else {
            &self.slave
        }
    }

    pub fn robot_mut(&mut self, i: usize) -> &mut RobotSpec {
        if i == 0 {
            &mut self.master
        } else {
            &mut self.slave
        }
    }

    pub fn dof(&self) -> usize {
        self.master.dof()
    }

    pub fn steps(&self) -> u64 {
        (self.duration / self.plant_dt).round() as u64
    }

    /// Plant steps per command update of robot `i`.
    pub fn cmd_every(&self, i: usize) -> u64 {
        let dt = if i == 0 {
            self.master_cmd_dt
        } else {
            self.slave_cmd_dt
        };
        (dt / self.plant_dt).round() as u64
    }

    pub fn cmd_dt(&self, i: usize) -> f64 {
        self.cmd_every(i) as f64 * self.plant_dt
    }

    /// Validates the scenario and returns non-fatal gain-check warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let m = self.dof();
        if self.slave.dof() != m {
            return Err(Error::config("master and slave must have the same DOF"));
        }
        if !(self.plant_dt > 0.0 && self.plant_dt.is_finite()) {
            return Err(Error::config("plant_dt must be > 0"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::config("duration must be > 0"));
        }
        if self.decimation == 0 {
            return Err(Error::config("decimation must be >= 1"));
        }
        for (name, dt) in [
            ("master_cmd_dt", self.master_cmd_dt),
            ("slave_cmd_dt", self.slave_cmd_dt),
        ] {
            let ratio = dt / self.plant_dt;
            if !(ratio >= 1.0 - 1e-9) || (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
                return Err(Error::config(format!(
                    "{name} must be an integer multiple of plant_dt"
                )));
            }
        }
        self.channel_fwd.validate()?;
        self.channel_bwd.validate()?;
        self.operator.validate(m)?;
        self.environment.validate(m)?;

        let mut warnings = Vec::new();
        for i in 0..2 {
            let r = self.robot(i);
            let who = if i == 0 { "master" } else { "slave" };
            r.model.validate()?;
            for (name, v) in [
                ("q0", &r.q0),
                ("qd0", &r.qd0),
                ("command_offset", &r.command_offset),
            ] {
                if v.len() != m {
                    return Err(Error::config(format!("{who}.{name} must have {m} entries")));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::config(format!("{who}.{name} must be finite")));
                }
            }
            let arch = self.mode.architecture(i);
            if arch == Architecture::Closed {
                r.inner.validate(m)?;
            }
            match self.mode {
                ControllerMode::Kinematic | ControllerMode::KinematicFallback => {
                    r.kinematic.validate()?;
                    if self.mode == ControllerMode::Kinematic && !r.command_readable {
                        return Err(Error::config(format!(
                            "{who}: kinematic mode reads the inner command; use kinematic_fallback"
                        )));
                    }
                }
                ControllerMode::DynSep => {
                    r.adaptive.aux.validate(m)?;
                }
                ControllerMode::Adaptive | ControllerMode::HybridOpenMaster => {
                    if arch == Architecture::OpenTorque {
                        r.open_master.validate(m)?;
                    } else {
                        r.adaptive.validate(m)?;
                        if !r.command_readable {
                            return Err(Error::config(format!(
                                "{who}: adaptive control requires a readable inner command"
                            )));
                        }
                    }
                }
            }
            if arch == Architecture::Closed
                && matches!(
                    self.mode,
                    ControllerMode::DynSep | ControllerMode::Adaptive | ControllerMode::HybridOpenMaster
                )
            {
                let aux = &r.adaptive.aux;
                let report = check_cubic_stability(&aux.lambda_d, &aux.lambda_p, &aux.lambda_i);
                if !report.passed {
                    warnings.push(format!("{who}: auxiliary dynamics not exponentially stable"));
                }
            }
            if self.mode.is_adaptive(i) {
                let g = &r.adaptive;
                let eps = r
                    .inner
                    .kp
                    .iter()
                    .zip(r.inner.kd.iter())
                    .map(|(p, d)| p / d)
                    .fold(f64::INFINITY, f64::min)
                    * 1e-3;
                let report = check_gain_condition(
                    &r.inner.kd,
                    &r.inner.kp,
                    &r.inner.effective_ki(),
                    g.gamma,
                    g.gamma_star,
                    eps,
                );
                if !report.passed {
                    warnings.push(format!(
                        "{who}: gamma/gamma_star violate the gain condition for the inner gains"
                    ));
                }
            }
        }
        Ok(warnings)
    }

    /// Predicted static ratio τ1*/τ2* at rest in contact, when defined.
    pub fn theoretical_reflection(&self) -> Option<JointVec> {
        let ki1 = self.master.inner.effective_ki();
        let ki2 = self.slave.inner.effective_ki();
        match self.mode {
            ControllerMode::Kinematic | ControllerMode::KinematicFallback => Some(ki1.component_div(&ki2)),
            ControllerMode::DynSep | ControllerMode::Adaptive => {
                let w1 = ki1.component_div(&self.master.adaptive.aux.lambda_i);
                let w2 = ki2.component_div(&self.slave.adaptive.aux.lambda_i);
                Some(w1.component_div(&w2))
            }
            ControllerMode::HybridOpenMaster => None,
        }
    }
}

/// SplitMix64 finalizer over (seed, salt), so derived seeds are decorrelated.
fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_scenarios_validate() {
        for mode in ControllerMode::ALL {
            let sc = Scenario::standard(mode);
            let warnings = sc.validate().unwrap();
            assert!(warnings.is_empty(), "{mode:?}: {warnings:?}");
            assert_eq!(ControllerMode::parse(mode.name()), Some(mode));
        }
    }

    #[test]
    fn reseeding_changes_both_channels() {
        let mut sc = Scenario::standard(ControllerMode::Kinematic);
        let before = (sc.channel_fwd.clone(), sc.channel_bwd.clone());
        sc.reseed(7);
        assert_ne!(before.0, sc.channel_fwd);
        assert_ne!(before.1, sc.channel_bwd);
        assert_ne!(sc.channel_fwd.delay_at(0.0), sc.channel_bwd.delay_at(0.0));
    }

    #[test]
    fn command_period_must_be_a_multiple() {
        let mut sc = Scenario::standard(ControllerMode::Kinematic);
        sc.slave_cmd_dt = 2.5e-3;
        assert!(sc.validate().is_err());
        sc.slave_cmd_dt = 8e-3;
        assert_eq!(sc.cmd_every(1), 8);
    }

    #[test]
    fn adaptive_requires_readable_command() {
        let mut sc = Scenario::standard(ControllerMode::HybridOpenMaster);
        sc.slave.command_readable = false;
        assert!(matches!(sc.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn presets_validate() {
        for mode in [
            ControllerMode::Kinematic,
            ControllerMode::DynSep,
            ControllerMode::Adaptive,
        ] {
            let sc = Scenario::contact(mode);
            assert!(sc.validate().unwrap().is_empty(), "{mode:?}");
            assert_eq!(
                sc.theoretical_reflection().unwrap(),
                JointVec::from_element(2, 0.5)
            );
        }
        assert!(Scenario::manipulability_base(0.0).validate().is_ok());
    }

    #[test]
    fn theoretical_ratios() {
        let mut sc = Scenario::standard(ControllerMode::Kinematic);
        sc.master.inner = InnerGains::uniform(2, 10.0, 40.0, 1.0);
        sc.slave.inner = InnerGains::uniform(2, 10.0, 40.0, 2.0);
        assert_eq!(
            sc.theoretical_reflection().unwrap(),
            JointVec::from_element(2, 0.5)
        );
        sc.mode = ControllerMode::Adaptive;
        assert_eq!(
            sc.theoretical_reflection().unwrap(),
            JointVec::from_element(2, 0.5)
        );
        sc.slave.adaptive.aux.lambda_i = JointVec::from_element(2, 250.0);
        assert_eq!(
            sc.theoretical_reflection().unwrap(),
            JointVec::from_element(2, 1.0)
        );
    }
}
