use nalgebra::Complex;

use crate::dynamics::JointVec;

#[derive(Debug, Clone, PartialEq)]
pub struct JointMargin {
    pub joint: usize,
    pub margin: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub passed: bool,
    pub per_joint: Vec<JointMargin>,
}

impl StabilityReport {
    /// Smallest margin over all entries.
    pub fn min_margin(&self) -> f64 {
        self.per_joint
            .iter()
            .map(|j| j.margin)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Roots of s³ + a·s² + b·s + c in closed form.
///
/// The depressed cubic x³ + px + q (s = x − a/3) is solved trigonometrically
/// when it has three real roots and by Cardano's formula otherwise, so
/// repeated roots are exact whenever p and q vanish exactly.
pub fn cubic_roots(a: f64, b: f64, c: f64) -> [Complex<f64>; 3] {
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let real = |x: f64| Complex::new(x - shift, 0.0);
    if p == 0.0 && q == 0.0 {
        return [real(0.0), real(0.0), real(0.0)];
    }
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if disc < 0.0 {
        // p < 0 here.
        let r = 2.0 * (-p / 3.0).sqrt();
        let phi = ((3.0 * q) / (p * r)).clamp(-1.0, 1.0).acos() / 3.0;
        let tau = std::f64::consts::TAU;
        [
            real(r * phi.cos()),
            real(r * (phi - tau / 3.0).cos()),
            real(r * (phi - 2.0 * tau / 3.0).cos()),
        ]
    } else {
        let sq = disc.sqrt();
        let u = (-q / 2.0 + sq).cbrt();
        let v = (-q / 2.0 - sq).cbrt();
        let re = -(u + v) / 2.0 - shift;
        let im = 3f64.sqrt() / 2.0 * (u - v);
        [real(u + v), Complex::new(re, im), Complex::new(re, -im)]
    }
}

/// Routh–Hurwitz test of s³ + Λ_D s² + Λ_P s + Λ_I per joint; margin Λ_D Λ_P − Λ_I.
pub fn check_cubic_stability(
    lambda_d: &JointVec,
    lambda_p: &JointVec,
    lambda_i: &JointVec,
) -> StabilityReport {
    let per_joint: Vec<JointMargin> = (0..lambda_d.len())
        .map(|k| {
            let (d, p, i) = (lambda_d[k], lambda_p[k], lambda_i[k]);
            let margin = d * p - i;
            let stable = d > 0.0 && p > 0.0 && i > 0.0 && margin > 0.0;
            let detail = if i <= 0.0 {
                "zero or negative constant term: not exponentially stable".to_string()
            } else if stable {
                "stable".to_string()
            } else {
                format!("unstable: d·p = {} ≤ i = {}", d * p, i)
            };
            JointMargin {
                joint: k,
                margin: if stable { margin } else { margin.min(0.0) },
                detail,
            }
        })
        .collect();
    let passed = per_joint.iter().all(|j| j.margin > 0.0);
    StabilityReport { passed, per_joint }
}

/// Conditions on (γ, γ*) given the inner gains. Per joint two entries: the
/// first is γ* − K_I/K_D, the second γ − ε − (γ* − K_I/K_D)·K_D/K_P. Both
/// must be ≥ 0. An ε above min K_P/K_D fails the report.
pub fn check_gain_condition(
    kd: &JointVec,
    kp: &JointVec,
    ki: &JointVec,
    gamma: f64,
    gamma_star: f64,
    epsilon: f64,
) -> StabilityReport {
    let mut per_joint = Vec::with_capacity(2 * kd.len());
    let mut passed = epsilon > 0.0;
    for k in 0..kd.len() {
        let (d, p, i) = (kd[k], kp[k], ki[k]);
        if epsilon > p / d {
            passed = false;
            per_joint.push(JointMargin {
                joint: k,
                margin: p / d - epsilon,
                detail: format!("invalid epsilon: {epsilon} > K_P/K_D = {}", p / d),
            });
            continue;
        }
        let first = gamma_star - i / d;
        let second = gamma - epsilon - first * d / p;
        passed &= first >= 0.0 && second >= 0.0;
        per_joint.push(JointMargin {
            joint: k,
            margin: first,
            detail: "gamma_star - K_I/K_D".into(),
        });
        per_joint.push(JointMargin {
            joint: k,
            margin: second,
            detail: "gamma - epsilon - (gamma_star - K_I/K_D) K_D/K_P".into(),
        });
    }
    StabilityReport { passed, per_joint }
}

/// Routh–Hurwitz test of m s³ + k_D s² + k_P s + k_I; margin k_D k_P − m k_I.
pub fn check_point_mass_pid(m_star: f64, kd: f64, kp: f64, ki: f64) -> StabilityReport {
    let margin = kd * kp - m_star * ki;
    let positive = m_star > 0.0 && kd > 0.0 && kp > 0.0 && ki >= 0.0;
    let passed = positive && margin > 0.0;
    StabilityReport {
        passed,
        per_joint: vec![JointMargin {
            joint: 0,
            margin,
            detail: if passed { "stable" } else { "unstable" }.into(),
        }],
    }
}
