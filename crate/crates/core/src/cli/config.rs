//! JSON scenario configuration. Every key is optional except
//! `controller_mode`; omitted keys keep the value of the chosen preset (see
//! `docs/config.md`). Emitting a parsed scenario writes every key, so parse,
//! emit and parse again reproduce the same [`Scenario`].

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channel::DelayProfile;
use crate::closed_robot::{InnerGains, InnerMode};
use crate::control::{AdaptiveGains, AdaptiveInit, AuxGains, KinematicGains, OpenMasterParams};
use crate::dynamics::{ArmModel, JointVec, PARAM_COUNT};
use crate::error::{Error, Result};
use crate::sim::{ControllerMode, EnvironmentModel, OperatorModel, RobotSpec, Scenario};

/// Per-joint values: a scalar applies to every joint.
#[derive(Debug, Clone, PartialEq)]
pub enum Joint {
    Scalar(f64),
    List(Vec<f64>),
}

impl Joint {
    fn from_vec(v: &JointVec) -> Self {
        Joint::List(v.iter().copied().collect())
    }

    fn resolve(&self, key: &str, dof: usize) -> Result<JointVec> {
        match self {
            Joint::Scalar(x) => Ok(JointVec::from_element(dof, *x)),
            Joint::List(v) if v.len() == dof => Ok(JointVec::from_column_slice(v)),
            Joint::List(v) => Err(Error::config(format!(
                "{key}: expected {dof} entries, got {}",
                v.len()
            ))),
        }
    }
}

impl Serialize for Joint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Joint::Scalar(x) => x.serialize(s),
            Joint::List(v) => v.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Joint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(d)?;
        let expected = "a number or an array of numbers";
        match value {
            serde_json::Value::Number(n) => Ok(Joint::Scalar(
                n.as_f64().ok_or_else(|| D::Error::custom(expected))?,
            )),
            serde_json::Value::Array(items) => items
                .iter()
                .map(|v| v.as_f64())
                .collect::<Option<Vec<f64>>>()
                .map(Joint::List)
                .ok_or_else(|| D::Error::custom(format!("expected {expected}"))),
            other => Err(D::Error::custom(format!("expected {expected}, got {other}"))),
        }
    }
}

/// A p×p gain matrix: scalar (times identity), diagonal, or full rows.
#[derive(Debug, Clone, PartialEq)]
pub enum Matrix {
    Scalar(f64),
    Diagonal(Vec<f64>),
    Full(Vec<Vec<f64>>),
}

impl Matrix {
    fn from_matrix(m: &DMatrix<f64>) -> Self {
        Matrix::Full(m.row_iter().map(|r| r.iter().copied().collect()).collect())
    }

    fn resolve(&self, key: &str, n: usize) -> Result<DMatrix<f64>> {
        let size_error = || Error::config(format!("{key}: expected a {n}x{n} matrix"));
        match self {
            Matrix::Scalar(x) => Ok(DMatrix::identity(n, n) * *x),
            Matrix::Diagonal(d) if d.len() == n => Ok(DMatrix::from_diagonal(&DVector::from_column_slice(d))),
            Matrix::Full(rows) if rows.len() == n && rows.iter().all(|r| r.len() == n) => {
                Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
            }
            _ => Err(size_error()),
        }
    }
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Matrix::Scalar(x) => x.serialize(s),
            Matrix::Diagonal(v) => v.serialize(s),
            Matrix::Full(rows) => rows.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde_json::Value;
        let expected = "expected a number, an array of numbers (diagonal) or an array of rows";
        let row = |v: &Value| -> Option<Vec<f64>> { v.as_array()?.iter().map(Value::as_f64).collect() };
        match Value::deserialize(d)? {
            Value::Number(n) => n
                .as_f64()
                .map(Matrix::Scalar)
                .ok_or_else(|| D::Error::custom(expected)),
            Value::Array(items) if items.iter().all(Value::is_number) => {
                Ok(Matrix::Diagonal(items.iter().filter_map(Value::as_f64).collect()))
            }
            Value::Array(items) => items
                .iter()
                .map(row)
                .collect::<Option<Vec<_>>>()
                .map(Matrix::Full)
                .ok_or_else(|| D::Error::custom(expected)),
            _ => Err(D::Error::custom(expected)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Kinematic,
    KinematicFallback,
    Dynsep,
    Adaptive,
    HybridOpenMaster,
}

impl From<ModeName> for ControllerMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Kinematic => ControllerMode::Kinematic,
            ModeName::KinematicFallback => ControllerMode::KinematicFallback,
            ModeName::Dynsep => ControllerMode::DynSep,
            ModeName::Adaptive => ControllerMode::Adaptive,
            ModeName::HybridOpenMaster => ControllerMode::HybridOpenMaster,
        }
    }
}

impl From<ControllerMode> for ModeName {
    fn from(m: ControllerMode) -> Self {
        match m {
            ControllerMode::Kinematic => ModeName::Kinematic,
            ControllerMode::KinematicFallback => ModeName::KinematicFallback,
            ControllerMode::DynSep => ModeName::Dynsep,
            ControllerMode::Adaptive => ModeName::Adaptive,
            ControllerMode::HybridOpenMaster => ModeName::HybridOpenMaster,
        }
    }
}

/// Base the omitted keys are taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// [`Scenario::standard`].
    #[default]
    Standard,
    /// [`Scenario::contact`].
    Contact,
    /// [`Scenario::manipulability_base`] with λ_M = 1.
    Manipulability,
}

impl Preset {
    fn build(self, mode: ControllerMode) -> Scenario {
        let mut sc = match self {
            Preset::Standard => Scenario::standard(mode),
            Preset::Contact => Scenario::contact(mode),
            Preset::Manipulability => Scenario::manipulability_base(1.0),
        };
        sc.mode = mode;
        sc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedModel {
    Canonical,
    HapticMaster,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Starting point for the listed parameters; the preset's arm otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<NamedModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lc1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lc2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnerConfig {
    #[serde(rename = "K_D", default, skip_serializing_if = "Option::is_none")]
    pub kd: Option<Joint>,
    #[serde(rename = "K_P", default, skip_serializing_if = "Option::is_none")]
    pub kp: Option<Joint>,
    #[serde(rename = "K_I", default, skip_serializing_if = "Option::is_none")]
    pub ki: Option<Joint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<InnerMode>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinematicConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(rename = "lambda_P", default, skip_serializing_if = "Option::is_none")]
    pub lambda_p: Option<f64>,
    #[serde(rename = "lambda_M", default, skip_serializing_if = "Option::is_none")]
    pub lambda_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(rename = "Lambda_D", default, skip_serializing_if = "Option::is_none")]
    pub lambda_d: Option<Joint>,
    #[serde(rename = "Lambda_P", default, skip_serializing_if = "Option::is_none")]
    pub lambda_p: Option<Joint>,
    #[serde(rename = "Lambda_I", default, skip_serializing_if = "Option::is_none")]
    pub lambda_i: Option<Joint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_star: Option<f64>,
    #[serde(rename = "Gamma", default, skip_serializing_if = "Option::is_none")]
    pub gamma_theta: Option<Matrix>,
    #[serde(rename = "Gamma_star", default, skip_serializing_if = "Option::is_none")]
    pub gamma_w: Option<Joint>,
    #[serde(rename = "Gamma_P_star", default, skip_serializing_if = "Option::is_none")]
    pub gamma_wp: Option<Joint>,
    #[serde(rename = "Gamma_I_star", default, skip_serializing_if = "Option::is_none")]
    pub gamma_wi: Option<Joint>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_hat: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_hat: Option<Joint>,
    #[serde(rename = "w_P_hat", default, skip_serializing_if = "Option::is_none")]
    pub wp_hat: Option<Joint>,
    #[serde(rename = "w_I_hat", default, skip_serializing_if = "Option::is_none")]
    pub wi_hat: Option<Joint>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpenMasterConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(rename = "lambda_M", default, skip_serializing_if = "Option::is_none")]
    pub lambda_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(rename = "K1", default, skip_serializing_if = "Option::is_none")]
    pub k1: Option<Joint>,
    #[serde(rename = "Gamma1", default, skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<InnerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q0: Option<Joint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qd0: Option<Joint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command_readable: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gravity_precompensated: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command_offset: Option<Joint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kinematic: Option<KinematicConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adaptive: Option<AdaptiveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adaptive_init: Option<InitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open_master: Option<OpenMasterConfig>,
}

/// Delay profiles. Random profiles take their seed from the scenario seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DelayConfig {
    Constant { delay: f64 },
    Sinusoid { mean: f64, amplitude: f64, period: f64 },
    PiecewiseUniform { lo: f64, hi: f64, update_period: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorConfig {
    None,
    Constant { tau: Joint },
    Pulse { tau: Joint, t_on: f64, t_off: f64 },
    SpringPull { k_h: Joint, d_h: Joint, q_target: Joint },
    Interactive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentConfig {
    None,
    JointWall { q_wall: Joint, k_e: Joint, d_e: Joint },
}

/// Where `run` writes its artifacts unless overridden on the command line.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub controller_mode: ModeName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plant_dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_cmd_dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slave_cmd_dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decimation: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master: Option<RobotConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slave: Option<RobotConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_fwd: Option<DelayConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_bwd: Option<DelayConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environment: Option<EnvironmentConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

/// A parsed configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub scenario: Scenario,
    pub output: OutputConfig,
    /// Non-fatal gain-check findings from validation.
    pub warnings: Vec<String>,
}

/// Reads and validates a configuration file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<Scenario> {
    load_config(path).map(|c| c.scenario)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<Config> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_config_str(text: &str) -> Result<Config> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: ConfigDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            Error::config(e.into_inner().to_string())
        } else {
            Error::config(format!("{path}: {}", e.into_inner()))
        }
    })?;
    doc.into_config()
}

fn positive(key: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::config(format!("{key} must be > 0, got {x}")))
    }
}

fn non_negative(key: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(Error::config(format!("{key} must be >= 0, got {x}")))
    }
}

fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
    if let Some(v) = v {
        *slot = v.clone();
    }
}

fn set_joint(slot: &mut JointVec, v: &Option<Joint>, key: &str, dof: usize) -> Result<()> {
    if let Some(v) = v {
        *slot = v.resolve(key, dof)?;
    }
    Ok(())
}

impl ModelConfig {
    fn apply(&self, model: &mut ArmModel) {
        match self.base {
            Some(NamedModel::Canonical) => *model = ArmModel::canonical(),
            Some(NamedModel::HapticMaster) => *model = ArmModel::haptic_master(),
            None => {}
        }
        for (slot, v) in [
            (&mut model.m1, self.m1),
            (&mut model.m2, self.m2),
            (&mut model.l1, self.l1),
            (&mut model.l2, self.l2),
            (&mut model.lc1, self.lc1),
            (&mut model.lc2, self.lc2),
            (&mut model.i1, self.i1),
            (&mut model.i2, self.i2),
            (&mut model.g0, self.g0),
        ] {
            if let Some(v) = v {
                *slot = v;
            }
        }
    }
}

impl RobotConfig {
    fn apply(&self, who: &str, r: &mut RobotSpec) -> Result<()> {
        if let Some(m) = &self.model {
            m.apply(&mut r.model);
        }
        let dof = r.dof();
        let key = |k: &str| format!("{who}.{k}");
        if let Some(c) = &self.inner {
            set_joint(&mut r.inner.kd, &c.kd, &key("inner.K_D"), dof)?;
            set_joint(&mut r.inner.kp, &c.kp, &key("inner.K_P"), dof)?;
            set_joint(&mut r.inner.ki, &c.ki, &key("inner.K_I"), dof)?;
            set(&mut r.inner.mode, &c.mode);
        }
        set_joint(&mut r.q0, &self.q0, &key("q0"), dof)?;
        set_joint(&mut r.qd0, &self.qd0, &key("qd0"), dof)?;
        set_joint(
            &mut r.command_offset,
            &self.command_offset,
            &key("command_offset"),
            dof,
        )?;
        set(&mut r.command_readable, &self.command_readable);
        set(&mut r.gravity_precompensated, &self.gravity_precompensated);
        if let Some(c) = &self.kinematic {
            if let Some(x) = c.lambda {
                r.kinematic.lambda = positive(&key("kinematic.lambda"), x)?;
            }
            if let Some(x) = c.lambda_p {
                r.kinematic.lambda_p = positive(&key("kinematic.lambda_P"), x)?;
            }
            if let Some(x) = c.lambda_m {
                // λ_M = 0 is only reachable through the manipulability contrast run.
                r.kinematic.lambda_m = positive(&key("kinematic.lambda_M"), x)?;
            }
        }
        if let Some(c) = &self.adaptive {
            let g = &mut r.adaptive;
            if let Some(x) = c.alpha {
                g.aux.alpha = positive(&key("adaptive.alpha"), x)?;
            }
            if let Some(x) = c.lambda {
                g.aux.lambda = positive(&key("adaptive.lambda"), x)?;
            }
            set_joint(&mut g.aux.lambda_d, &c.lambda_d, &key("adaptive.Lambda_D"), dof)?;
            set_joint(&mut g.aux.lambda_p, &c.lambda_p, &key("adaptive.Lambda_P"), dof)?;
            set_joint(&mut g.aux.lambda_i, &c.lambda_i, &key("adaptive.Lambda_I"), dof)?;
            if let Some(x) = c.gamma {
                g.gamma = non_negative(&key("adaptive.gamma"), x)?;
            }
            if let Some(x) = c.gamma_star {
                g.gamma_star = non_negative(&key("adaptive.gamma_star"), x)?;
            }
            if let Some(m) = &c.gamma_theta {
                g.gamma_theta = m.resolve(&key("adaptive.Gamma"), PARAM_COUNT)?;
            }
            set_joint(&mut g.gamma_w, &c.gamma_w, &key("adaptive.Gamma_star"), dof)?;
            set_joint(&mut g.gamma_wp, &c.gamma_wp, &key("adaptive.Gamma_P_star"), dof)?;
            set_joint(&mut g.gamma_wi, &c.gamma_wi, &key("adaptive.Gamma_I_star"), dof)?;
        }
        if let Some(c) = &self.adaptive_init {
            let init = &mut r.adaptive_init;
            if let Some(t) = &c.theta_hat {
                if t.len() != PARAM_COUNT {
                    return Err(Error::config(format!(
                        "{}: expected {PARAM_COUNT} entries, got {}",
                        key("adaptive_init.theta_hat"),
                        t.len()
                    )));
                }
                init.theta_hat = DVector::from_column_slice(t);
            }
            set_joint(&mut init.w_hat, &c.w_hat, &key("adaptive_init.w_hat"), dof)?;
            set_joint(&mut init.wp_hat, &c.wp_hat, &key("adaptive_init.w_P_hat"), dof)?;
            set_joint(&mut init.wi_hat, &c.wi_hat, &key("adaptive_init.w_I_hat"), dof)?;
        }
        if let Some(c) = &self.open_master {
            let p = &mut r.open_master;
            if let Some(x) = c.alpha {
                p.alpha = positive(&key("open_master.alpha"), x)?;
            }
            if let Some(x) = c.lambda_m {
                p.lambda_m = positive(&key("open_master.lambda_M"), x)?;
            }
            if let Some(x) = c.lambda {
                p.lambda = positive(&key("open_master.lambda"), x)?;
            }
            set_joint(&mut p.k1, &c.k1, &key("open_master.K1"), dof)?;
            if let Some(m) = &c.gamma1 {
                p.gamma1 = m.resolve(&key("open_master.Gamma1"), PARAM_COUNT)?;
            }
        }
        Ok(())
    }

    fn from_spec(r: &RobotSpec) -> Self {
        let m = &r.model;
        let InnerGains { kd, kp, ki, mode } = &r.inner;
        let KinematicGains {
            lambda,
            lambda_p,
            lambda_m,
        } = r.kinematic;
        let AdaptiveGains {
            aux,
            gamma,
            gamma_star,
            gamma_theta,
            gamma_w,
            gamma_wp,
            gamma_wi,
        } = &r.adaptive;
        let AuxGains {
            alpha,
            lambda: aux_lambda,
            lambda_d,
            lambda_p: aux_lambda_p,
            lambda_i,
        } = aux;
        let AdaptiveInit {
            theta_hat,
            w_hat,
            wp_hat,
            wi_hat,
        } = &r.adaptive_init;
        let OpenMasterParams {
            alpha: om_alpha,
            lambda_m: om_lambda_m,
            lambda: om_lambda,
            k1,
            gamma1,
        } = &r.open_master;
        Self {
            model: Some(ModelConfig {
                base: None,
                m1: Some(m.m1),
                m2: Some(m.m2),
                l1: Some(m.l1),
                l2: Some(m.l2),
                lc1: Some(m.lc1),
                lc2: Some(m.lc2),
                i1: Some(m.i1),
                i2: Some(m.i2),
                g0: Some(m.g0),
            }),
            inner: Some(InnerConfig {
                kd: Some(Joint::from_vec(kd)),
                kp: Some(Joint::from_vec(kp)),
                ki: Some(Joint::from_vec(ki)),
                mode: Some(*mode),
            }),
            q0: Some(Joint::from_vec(&r.q0)),
            qd0: Some(Joint::from_vec(&r.qd0)),
            command_readable: Some(r.command_readable),
            gravity_precompensated: Some(r.gravity_precompensated),
            command_offset: Some(Joint::from_vec(&r.command_offset)),
            kinematic: Some(KinematicConfig {
                lambda: Some(lambda),
                lambda_p: Some(lambda_p),
                lambda_m: Some(lambda_m),
            }),
            adaptive: Some(AdaptiveConfig {
                alpha: Some(*alpha),
                lambda: Some(*aux_lambda),
                lambda_d: Some(Joint::from_vec(lambda_d)),
                lambda_p: Some(Joint::from_vec(aux_lambda_p)),
                lambda_i: Some(Joint::from_vec(lambda_i)),
                gamma: Some(*gamma),
                gamma_star: Some(*gamma_star),
                gamma_theta: Some(Matrix::from_matrix(gamma_theta)),
                gamma_w: Some(Joint::from_vec(gamma_w)),
                gamma_wp: Some(Joint::from_vec(gamma_wp)),
                gamma_wi: Some(Joint::from_vec(gamma_wi)),
            }),
            adaptive_init: Some(InitConfig {
                theta_hat: Some(theta_hat.iter().copied().collect()),
                w_hat: Some(Joint::from_vec(w_hat)),
                wp_hat: Some(Joint::from_vec(wp_hat)),
                wi_hat: Some(Joint::from_vec(wi_hat)),
            }),
            open_master: Some(OpenMasterConfig {
                alpha: Some(*om_alpha),
                lambda_m: Some(*om_lambda_m),
                lambda: Some(*om_lambda),
                k1: Some(Joint::from_vec(k1)),
                gamma1: Some(Matrix::from_matrix(gamma1)),
            }),
        }
    }
}

impl DelayConfig {
    fn to_profile(&self) -> DelayProfile {
        match *self {
            DelayConfig::Constant { delay } => DelayProfile::Constant { delay },
            DelayConfig::Sinusoid {
                mean,
                amplitude,
                period,
            } => DelayProfile::Sinusoid {
                mean,
                amplitude,
                period,
            },
            // Seeded by Scenario::reseed.
            DelayConfig::PiecewiseUniform {
                lo,
                hi,
                update_period,
            } => DelayProfile::piecewise_uniform(lo, hi, update_period, 0),
        }
    }

    fn from_profile(p: &DelayProfile) -> Self {
        match *p {
            DelayProfile::Constant { delay } => DelayConfig::Constant { delay },
            DelayProfile::Sinusoid {
                mean,
                amplitude,
                period,
            } => DelayConfig::Sinusoid {
                mean,
                amplitude,
                period,
            },
            DelayProfile::PiecewiseUniform {
                lo,
                hi,
                update_period,
                ..
            } => DelayConfig::PiecewiseUniform {
                lo,
                hi,
                update_period,
            },
        }
    }
}

impl OperatorConfig {
    fn to_model(&self, dof: usize) -> Result<OperatorModel> {
        let k = |name: &str| format!("operator.{name}");
        Ok(match self {
            OperatorConfig::None => OperatorModel::None,
            OperatorConfig::Interactive => OperatorModel::Interactive,
            OperatorConfig::Constant { tau } => OperatorModel::Constant {
                tau: tau.resolve(&k("tau"), dof)?,
            },
            OperatorConfig::Pulse { tau, t_on, t_off } => OperatorModel::Pulse {
                tau: tau.resolve(&k("tau"), dof)?,
                t_on: *t_on,
                t_off: *t_off,
            },
            OperatorConfig::SpringPull { k_h, d_h, q_target } => OperatorModel::SpringPull {
                k_h: k_h.resolve(&k("k_h"), dof)?,
                d_h: d_h.resolve(&k("d_h"), dof)?,
                q_target: q_target.resolve(&k("q_target"), dof)?,
            },
        })
    }

    fn from_model(m: &OperatorModel) -> Self {
        match m {
            OperatorModel::None => OperatorConfig::None,
            OperatorModel::Interactive => OperatorConfig::Interactive,
            OperatorModel::Constant { tau } => OperatorConfig::Constant {
                tau: Joint::from_vec(tau),
            },
            OperatorModel::Pulse { tau, t_on, t_off } => OperatorConfig::Pulse {
                tau: Joint::from_vec(tau),
                t_on: *t_on,
                t_off: *t_off,
            },
            OperatorModel::SpringPull { k_h, d_h, q_target } => OperatorConfig::SpringPull {
                k_h: Joint::from_vec(k_h),
                d_h: Joint::from_vec(d_h),
                q_target: Joint::from_vec(q_target),
            },
        }
    }
}

impl EnvironmentConfig {
    fn to_model(&self, dof: usize) -> Result<EnvironmentModel> {
        Ok(match self {
            EnvironmentConfig::None => EnvironmentModel::None,
            EnvironmentConfig::JointWall { q_wall, k_e, d_e } => EnvironmentModel::JointWall {
                q_wall: q_wall.resolve("environment.q_wall", dof)?,
                k_e: k_e.resolve("environment.k_e", dof)?,
                d_e: d_e.resolve("environment.d_e", dof)?,
            },
        })
    }

    fn from_model(m: &EnvironmentModel) -> Self {
        match m {
            EnvironmentModel::None => EnvironmentConfig::None,
            EnvironmentModel::JointWall { q_wall, k_e, d_e } => EnvironmentConfig::JointWall {
                q_wall: Joint::from_vec(q_wall),
                k_e: Joint::from_vec(k_e),
                d_e: Joint::from_vec(d_e),
            },
        }
    }
}

impl ConfigDocument {
    /// Builds and validates the scenario this document describes.
    pub fn into_config(self) -> Result<Config> {
        let mode: ControllerMode = self.controller_mode.into();
        let mut sc = self.preset.unwrap_or_default().build(mode);
        if let Some(x) = self.duration {
            sc.duration = positive("duration", x)?;
        }
        if let Some(x) = self.plant_dt {
            sc.plant_dt = positive("plant_dt", x)?;
        }
        if let Some(x) = self.master_cmd_dt {
            sc.master_cmd_dt = positive("master_cmd_dt", x)?;
        }
        if let Some(x) = self.slave_cmd_dt {
            sc.slave_cmd_dt = positive("slave_cmd_dt", x)?;
        }
        if let Some(d) = self.decimation {
            if d == 0 {
                return Err(Error::config("decimation must be >= 1"));
            }
            sc.decimation = d;
        }
        if let Some(r) = &self.master {
            r.apply("master", &mut sc.master)?;
        }
        if let Some(r) = &self.slave {
            r.apply("slave", &mut sc.slave)?;
        }
        if let Some(c) = &self.channel_fwd {
            sc.channel_fwd = c.to_profile();
        }
        if let Some(c) = &self.channel_bwd {
            sc.channel_bwd = c.to_profile();
        }
        let dof = sc.dof();
        if let Some(o) = &self.operator {
            sc.operator = o.to_model(dof)?;
        }
        if let Some(e) = &self.environment {
            sc.environment = e.to_model(dof)?;
        }
        let seed = self.seed.unwrap_or(sc.seed);
        sc.reseed(seed);
        let warnings = sc.validate()?;
        Ok(Config {
            scenario: sc,
            output: self.output.unwrap_or_default(),
            warnings,
        })
    }

    /// Fully explicit document for `sc`. Channel seeds are not written; they
    /// are derived from `seed` on parsing.
    pub fn from_scenario(sc: &Scenario) -> Self {
        Self {
            controller_mode: sc.mode.into(),
            preset: None,
            duration: Some(sc.duration),
            plant_dt: Some(sc.plant_dt),
            master_cmd_dt: Some(sc.master_cmd_dt),
            slave_cmd_dt: Some(sc.slave_cmd_dt),
            decimation: Some(sc.decimation),
            seed: Some(sc.seed),
            master: Some(RobotConfig::from_spec(&sc.master)),
            slave: Some(RobotConfig::from_spec(&sc.slave)),
            channel_fwd: Some(DelayConfig::from_profile(&sc.channel_fwd)),
            channel_bwd: Some(DelayConfig::from_profile(&sc.channel_bwd)),
            operator: Some(OperatorConfig::from_model(&sc.operator)),
            environment: Some(EnvironmentConfig::from_model(&sc.environment)),
            output: None,
        }
    }
}

/// Pretty JSON for `sc`.
pub fn emit_config(sc: &Scenario) -> String {
    serde_json::to_string_pretty(&ConfigDocument::from_scenario(sc))
        .expect("config documents always serialize")
}
