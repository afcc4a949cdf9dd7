use crate::dynamics::JointVec;
use crate::error::{Error, Result};
use crate::sim::{run_scenario, EnvironmentModel, OperatorModel, Scenario, Trace};

/// Default synchronization threshold (rad).
pub const SYNC_THRESHOLD: f64 = 0.01;
/// Torque magnitude below which a sample is not counted as contact (N·m).
pub const TORQUE_FLOOR: f64 = 1e-3;
pub const SLOPE_FLOOR: f64 = 1e-3;
pub const SATURATION_EPS: f64 = 1e-3;
/// Largest linear-fit residual relative to the ramp amplitude.
pub const RAMP_FIT_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct SyncMetrics {
    /// ‖q1 − q2‖∞ at the last row.
    pub final_error: f64,
    /// First time after which the error stays below the threshold.
    pub settle_time: Option<f64>,
    pub error_series: Vec<f64>,
    /// Largest error at or after `settle_time`, or over the whole trace.
    pub max_error_after_settle: f64,
}

pub fn sync_metrics(trace: &Trace, threshold: f64) -> Result<SyncMetrics> {
    let t = trace.column("t")?;
    let q1 = trace.signal_columns("q", 1)?;
    let q2 = trace.signal_columns("q", 2)?;
    if q1.len() != q2.len() {
        return Err(Error::Dimension {
            expected: q1.len(),
            got: q2.len(),
        });
    }
    let error_series: Vec<f64> = (0..trace.len())
        .map(|k| {
            q1.iter()
                .zip(&q2)
                .map(|(a, b)| (a[k] - b[k]).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let final_error = error_series.last().copied().unwrap_or(0.0);
    let first_settled = error_series
        .iter()
        .rposition(|e| *e >= threshold)
        .map_or(0, |k| k + 1);
    let settle_time = t.get(first_settled).copied();
    let tail = &error_series[first_settled.min(error_series.len())..];
    let max_error_after_settle = if tail.is_empty() {
        error_series.iter().copied().fold(0.0, f64::max)
    } else {
        tail.iter().copied().fold(0.0, f64::max)
    };
    Ok(SyncMetrics {
        final_error,
        settle_time,
        error_series,
        max_error_after_settle,
    })
}

impl SyncMetrics {
    /// Largest error at or after time `t0`.
    pub fn max_error_since(&self, trace: &Trace, t0: f64) -> Result<f64> {
        let t = trace.column("t")?;
        Ok(t.iter()
            .zip(&self.error_series)
            .filter(|(tk, _)| **tk >= t0 - 1e-12)
            .map(|(_, e)| *e)
            .fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionEstimate {
    /// Mean of τ1*/τ2* per joint over the window; NaN for joints without contact.
    pub ratio: JointVec,
    pub window: (f64, f64),
    pub theoretical: Option<JointVec>,
    /// Samples used per joint.
    pub samples: Vec<usize>,
}

impl ReflectionEstimate {
    /// Largest relative deviation from the theoretical ratio over joints in contact.
    pub fn relative_error(&self) -> Option<f64> {
        let th = self.theoretical.as_ref()?;
        Some(
            self.ratio
                .iter()
                .zip(th.iter())
                .filter(|(r, _)| r.is_finite())
                .map(|(r, t)| ((r - t) / t).abs())
                .fold(0.0, f64::max),
        )
    }
}

/// Elementwise mean of τ1*/τ2* over the final `window_fraction` of the trace.
pub fn reflection_ratio(
    trace: &Trace,
    window_fraction: f64,
    theoretical: Option<JointVec>,
) -> Result<ReflectionEstimate> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::contract("window_fraction must lie in (0, 1]"));
    }
    let t = trace.column("t")?;
    let tau1 = named_vector(trace, "tau1_star")?;
    let tau2 = named_vector(trace, "tau2_star")?;
    let n = trace.len();
    if n == 0 {
        return Err(Error::NoContact { floor: TORQUE_FLOOR });
    }
    let (t0, t1) = (t[0], t[n - 1]);
    let start_t = t1 - window_fraction * (t1 - t0);
    let start = t.partition_point(|x| *x < start_t - 1e-12);
    let mut ratio = JointVec::from_element(tau1.len(), f64::NAN);
    let mut samples = vec![0; tau1.len()];
    for j in 0..tau1.len() {
        let (mut sum, mut count) = (0.0, 0usize);
        for k in start..n {
            if tau2[j][k].abs() >= TORQUE_FLOOR {
                sum += tau1[j][k] / tau2[j][k];
                count += 1;
            }
        }
        if count > 0 {
            ratio[j] = sum / count as f64;
        }
        samples[j] = count;
    }
    if samples.iter().all(|c| *c == 0) {
        return Err(Error::NoContact { floor: TORQUE_FLOOR });
    }
    Ok(ReflectionEstimate {
        ratio,
        window: (t[start], t1),
        theoretical,
        samples,
    })
}

/// Columns `<name>.<j>` of a signal whose name already carries the robot index.
fn named_vector<'a>(trace: &'a Trace, name: &str) -> Result<Vec<&'a [f64]>> {
    let cols: Vec<&[f64]> = (0..)
        .map(|j| format!("{name}.{j}"))
        .take_while(|c| trace.has(c))
        .map(|c| trace.column(&c).expect("column present"))
        .collect();
    if cols.is_empty() {
        Err(Error::MissingColumn(format!("{name}.0")))
    } else {
        Ok(cols)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Manipulability {
    InfiniteDegreeOne,
    Finite,
    Inconclusive,
}

impl Manipulability {
    pub fn name(self) -> &'static str {
        match self {
            Manipulability::InfiniteDegreeOne => "infinite_degree_one",
            Manipulability::Finite => "finite",
            Manipulability::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManipulabilityVerdict {
    /// Fitted slope of q_ave over the last half of the horizon, largest joint (rad/s).
    pub drift_slope: f64,
    /// ‖q_ave(T) − q_ave(T/2)‖∞ (rad).
    pub saturation_delta: f64,
    /// Largest linear-fit residual relative to the ramp amplitude.
    pub fit_residual: f64,
    pub classification: Manipulability,
}

/// Classifies the drift of q_ave = ½(q1 + q2) in a trace.
pub fn classify_drift(trace: &Trace) -> Result<ManipulabilityVerdict> {
    let t = trace.column("t")?;
    let q1 = trace.signal_columns("q", 1)?;
    let q2 = trace.signal_columns("q", 2)?;
    let n = trace.len();
    if n < 4 {
        return Err(Error::contract("trace too short for a drift fit"));
    }
    let t_end = t[n - 1];
    let t_half = t[0] + 0.5 * (t_end - t[0]);
    let start = t.partition_point(|x| *x < t_half - 1e-12);
    let ts = &t[start..];
    let mut best = (0.0f64, 0.0f64, 0.0f64);
    let mut saturation_delta = 0.0f64;
    for j in 0..q1.len() {
        let ave: Vec<f64> = (start..n).map(|k| 0.5 * (q1[j][k] + q2[j][k])).collect();
        saturation_delta = saturation_delta.max((ave[ave.len() - 1] - ave[0]).abs());
        let (slope, intercept) = linear_fit(ts, &ave);
        if slope.abs() >= best.0.abs() {
            let max_dev = ts
                .iter()
                .zip(&ave)
                .map(|(x, y)| (y - (slope * x + intercept)).abs())
                .fold(0.0, f64::max);
            let amplitude = slope.abs() * (ts[ts.len() - 1] - ts[0]);
            let rel = if amplitude > 0.0 {
                max_dev / amplitude
            } else {
                f64::INFINITY
            };
            best = (slope, rel, amplitude);
        }
    }
    let (drift_slope, fit_residual, _) = best;
    let classification = if drift_slope.abs() >= SLOPE_FLOOR && fit_residual < RAMP_FIT_TOLERANCE {
        Manipulability::InfiniteDegreeOne
    } else if saturation_delta < SATURATION_EPS {
        Manipulability::Finite
    } else {
        Manipulability::Inconclusive
    };
    Ok(ManipulabilityVerdict {
        drift_slope,
        saturation_delta,
        fit_residual,
        classification,
    })
}

/// Runs `base` in free motion under the constant operator torque `probe`
/// for `horizon` seconds and classifies the drift of the average position.
pub fn manipulability_probe(
    base: &Scenario,
    probe: &JointVec,
    horizon: f64,
) -> Result<ManipulabilityVerdict> {
    let mut sc = base.clone();
    sc.operator = OperatorModel::Constant { tau: probe.clone() };
    sc.environment = EnvironmentModel::None;
    sc.duration = horizon;
    let trace = run_scenario(&sc).map_err(|a| a.error)?;
    classify_drift(&trace)
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Supremum of one estimate family over a trace, against its scale
/// max(‖initial‖∞, ‖true‖∞).
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateBound {
    pub name: String,
    pub robot: usize,
    pub sup: f64,
    pub scale: f64,
}

impl EstimateBound {
    pub fn ratio(&self) -> f64 {
        self.sup / self.scale
    }
}

/// Estimate bounds of every adaptive robot in `sc` along `trace`. The true
/// ϑ keeps only the regressor columns the controller uses; the true w, w_P,
/// w_I are the diagonals of K_D⁻¹, K_D⁻¹K_P and K_D⁻¹K_I.
pub fn estimate_bounds(trace: &Trace, sc: &Scenario) -> Result<Vec<EstimateBound>> {
    let sup = |name: &str, robot: usize| -> Result<f64> {
        Ok(trace
            .signal(name, robot)?
            .iter()
            .map(|v| v.amax())
            .fold(0.0, f64::max))
    };
    let mut out = Vec::new();
    for i in 0..2 {
        let r = sc.robot(i);
        let robot = i + 1;
        let mut theta = r.model.params().theta;
        if !r.needs_gravity_columns() {
            theta.rows_mut(3, 2).fill(0.0);
        }
        let mut families: Vec<(&str, f64, f64)> = Vec::new();
        if sc.mode.is_adaptive(i) {
            let init = &r.adaptive_init;
            let g = &r.inner;
            families.push(("theta_hat", init.theta_hat.amax(), theta.amax()));
            families.push(("w_hat", init.w_hat.amax(), g.kd.map(|d| 1.0 / d).amax()));
            families.push(("wp_hat", init.wp_hat.amax(), g.kp.component_div(&g.kd).amax()));
            families.push((
                "wi_hat",
                init.wi_hat.amax(),
                g.effective_ki().component_div(&g.kd).amax(),
            ));
        } else if sc.mode.architecture(i) == crate::closed_robot::Architecture::OpenTorque {
            families.push(("theta_hat", 0.0, theta.amax()));
        }
        for (name, init, truth) in families {
            out.push(EstimateBound {
                name: name.to_string(),
                robot,
                sup: sup(name, robot)?,
                scale: init.max(truth),
            });
        }
    }
    Ok(out)
}
