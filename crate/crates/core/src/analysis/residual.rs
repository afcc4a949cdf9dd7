//! Residuals of the closed-loop equations along logged trajectories.
//!
//! Derivatives are central differences. A trace row holds the command that
//! is applied over the following plant step, so a central difference sees the
//! average of two held commands; the command-dependent part of each
//! right-hand side is averaged over the same two samples. Rows whose stencil
//! straddles a change of the peer delay are skipped.

use nalgebra::DVector;

use crate::channel::DelayLine;
use crate::closed_robot::InnerGains;
use crate::control::{AdaptiveGains, KinematicGains};
use crate::dynamics::{regressor, regressor_without_gravity, ArmModel, JointVec};
use crate::error::{Error, Result};
use crate::sim::{ControllerMode, Scenario, Trace};

/// What is known about one robot to evaluate its closed-loop residual.
#[derive(Debug, Clone, PartialEq)]
pub enum RobotResidual {
    /// q̇ = −λ(q − q_peer(t − T)) + ψ̇ + λ_P ψ + λ_M ∫ψ with ψ = q − q_c.
    Kinematic { robot: usize, gains: KinematicGains },
    /// The s-subsystem of the adaptive closed loop, with the true plant.
    Adaptive {
        robot: usize,
        model: ArmModel,
        inner: InnerGains,
        gravity_columns: bool,
        gains: AdaptiveGains,
    },
}

/// How commands in a trace evolve between rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandHold {
    /// Held from each row to the next, as the simulator applies them.
    ZeroOrderHold,
    /// Sampled from continuous-time signals.
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualContext {
    pub plant_dt: f64,
    pub hold: CommandHold,
    pub robots: Vec<RobotResidual>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualMode {
    Kinematic,
    Adaptive,
}

impl ResidualContext {
    /// Context for every robot of `sc` that the mode applies to. Requires
    /// every-step logging and, for compared robots, a command at every plant step.
    pub fn from_scenario(sc: &Scenario, mode: ResidualMode) -> Result<Self> {
        if sc.decimation != 1 {
            return Err(Error::config("residuals need a trace logged at every plant step"));
        }
        let mut robots = Vec::new();
        for i in 0..2 {
            let r = sc.robot(i);
            let applies = match mode {
                ResidualMode::Kinematic => sc.mode == ControllerMode::Kinematic,
                ResidualMode::Adaptive => sc.mode.is_adaptive(i),
            };
            if !applies {
                continue;
            }
            if sc.cmd_every(i) != 1 {
                return Err(Error::config(
                    "residuals need the command updated at every plant step",
                ));
            }
            robots.push(match mode {
                ResidualMode::Kinematic => RobotResidual::Kinematic {
                    robot: i + 1,
                    gains: r.kinematic,
                },
                ResidualMode::Adaptive => RobotResidual::Adaptive {
                    robot: i + 1,
                    model: r.model.clone(),
                    inner: r.inner.clone(),
                    gravity_columns: r.needs_gravity_columns(),
                    gains: r.adaptive.clone(),
                },
            });
        }
        if robots.is_empty() {
            return Err(Error::config(format!(
                "no robot of a {} scenario has a {mode:?} residual",
                sc.mode.name()
            )));
        }
        Ok(Self {
            plant_dt: sc.plant_dt,
            hold: CommandHold::ZeroOrderHold,
            robots,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// Largest residual divided by `scale`.
    pub max_residual: f64,
    pub max_abs: f64,
    pub scale: f64,
    pub worst_time: f64,
    pub rows_checked: usize,
}

pub fn closed_loop_residual(trace: &Trace, ctx: &ResidualContext) -> Result<ResidualReport> {
    let mut total = ResidualReport {
        max_residual: 0.0,
        max_abs: 0.0,
        scale: 0.0,
        worst_time: f64::NAN,
        rows_checked: 0,
    };
    for r in &ctx.robots {
        let rep = match r {
            RobotResidual::Kinematic { robot, gains } => kinematic(trace, *robot, gains, ctx)?,
            RobotResidual::Adaptive {
                robot,
                model,
                inner,
                gravity_columns,
                gains,
            } => adaptive(trace, *robot, model, inner, *gravity_columns, gains, ctx)?,
        };
        if rep.max_residual >= total.max_residual || total.worst_time.is_nan() {
            total.max_residual = rep.max_residual;
            total.max_abs = rep.max_abs;
            total.scale = rep.scale;
            total.worst_time = rep.worst_time;
        }
        total.rows_checked += rep.rows_checked;
    }
    Ok(total)
}

/// Rows k whose stencil k−1..k+1 and the previous command are free of delay changes.
fn usable_rows(delay: &[f64]) -> impl Iterator<Item = usize> + '_ {
    let n = delay.len();
    (1..n.saturating_sub(1)).filter(move |&k| {
        let lo = k.saturating_sub(2);
        delay[lo..=k + 1].iter().all(|d| *d == delay[k])
    })
}

fn peer_delay_column(robot: usize) -> &'static str {
    // The master hears the slave through T2, the slave the master through T1.
    if robot == 1 {
        "T2"
    } else {
        "T1"
    }
}

fn kinematic(
    trace: &Trace,
    robot: usize,
    g: &KinematicGains,
    ctx: &ResidualContext,
) -> Result<ResidualReport> {
    let dt = ctx.plant_dt;
    let held = ctx.hold == CommandHold::ZeroOrderHold;
    let peer = 3 - robot;
    let t = trace.column("t")?;
    let delay = trace.column(peer_delay_column(robot))?;
    let q = trace.signal("q", robot)?;
    let qd = trace.signal("qd", robot)?;
    let qc = trace.signal("qc", robot)?;
    let q_peer = trace.signal("q", peer)?;
    let n = trace.len();

    let mut line = DelayLine::new(f64::INFINITY);
    let mut integral = JointVec::zeros(q[0].len());
    let mut rhs = Vec::with_capacity(n);
    for k in 0..n {
        line.push(t[k], q_peer[k].clone())?;
        let delayed = line.sample_delayed(t[k], delay[k])?;
        let psi = &q[k] - &qc[k];
        if k > 0 {
            integral += (&q[k - 1] - &qc[k - 1] + &psi) * (dt / 2.0);
        }
        rhs.push(-(&q[k] - delayed) * g.lambda + &psi * g.lambda_p + &integral * g.lambda_m);
    }
    let scale = qd
        .iter()
        .map(|v| v.amax())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut rep = ResidualReport {
        max_residual: 0.0,
        max_abs: 0.0,
        scale,
        worst_time: f64::NAN,
        rows_checked: 0,
    };
    for k in usable_rows(delay) {
        let qdot = (&q[k + 1] - &q[k - 1]) / (2.0 * dt);
        let psi_next = &q[k + 1] - &qc[k + 1];
        let psi_prev = &q[k - 1] - &qc[k - 1];
        let psi_dot = (psi_next - psi_prev) / (2.0 * dt);
        let command = if held {
            (&rhs[k - 1] + &rhs[k]) * 0.5
        } else {
            rhs[k].clone()
        };
        let res = (qdot - psi_dot - command).amax();
        rep.rows_checked += 1;
        if res > rep.max_abs {
            rep.max_abs = res;
            rep.worst_time = t[k];
        }
    }
    rep.max_residual = rep.max_abs / scale;
    Ok(rep)
}

/// Rows of `tau<robot>_star`.
fn star_torque(trace: &Trace, robot: usize, dim: usize) -> Result<Vec<JointVec>> {
    let cols = (0..dim)
        .map(|j| trace.column(&format!("tau{robot}_star.{j}")))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..trace.len())
        .map(|k| JointVec::from_iterator(dim, cols.iter().map(|c| c[k])))
        .collect())
}

/// M ṡ + C s against the s-subsystem right-hand side. The central difference
/// of s averages the one-sided derivatives at a sample instant; the right
/// limit is what the logged row describes, and the left limit differs by the
/// jumps of the held command and of ζ̇*, both recovered from row k − 1.
fn adaptive(
    trace: &Trace,
    robot: usize,
    model: &ArmModel,
    inner: &InnerGains,
    gravity_columns: bool,
    gains: &AdaptiveGains,
    ctx: &ResidualContext,
) -> Result<ResidualReport> {
    let dt = ctx.plant_dt;
    let held = ctx.hold == CommandHold::ZeroOrderHold;
    let (gamma, gamma_star) = (gains.gamma, gains.gamma_star);
    let aux = &gains.aux;
    let t = trace.column("t")?;
    let delay = trace.column(peer_delay_column(robot))?;
    let get = |name: &str| trace.signal(name, robot);
    let (q, qd, qc, cmd) = (get("q")?, get("qd")?, get("qc")?, get("qdot_c")?);
    let tau = star_torque(trace, robot, q[0].len())?;
    if held && !trace.has(&format!("zdd{robot}.0")) {
        return Err(Error::MissingColumn(format!("zdd{robot}.0")));
    }
    let (z, zd, zdd, int_psi) = (get("z")?, get("zd")?, get("zdd")?, get("int_psi_star")?);
    let (j_int, theta, w, wp, wi) = (
        get("int_qc_minus_z")?,
        get("theta_hat")?,
        get("w_hat")?,
        get("wp_hat")?,
        get("wi_hat")?,
    );
    let n = trace.len();
    let truth: DVector<f64> = model.params().theta;
    let kd = &inner.kd;
    let w_true = kd.map(|d| 1.0 / d);
    let wp_true = inner.kp.component_div(kd);
    let wi_true = inner.effective_ki().component_div(kd);
    // τ_ext enters the master's dynamics with + and the slave's with −.
    let ext_sign = if robot == 1 { 1.0 } else { -1.0 };

    // References rebuilt from the logged auxiliary state.
    let psi: Vec<JointVec> = (0..n).map(|k| &q[k] - &z[k]).collect();
    let s: Vec<JointVec> = (0..n)
        .map(|k| &qd[k] - &zd[k] + &psi[k] * gamma + &int_psi[k] * gamma_star)
        .collect();

    let mut rep = ResidualReport {
        max_residual: 0.0,
        max_abs: 0.0,
        scale: 0.0,
        worst_time: f64::NAN,
        rows_checked: 0,
    };
    for k in usable_rows(delay) {
        let zeta = &zd[k] - &psi[k] * gamma - &int_psi[k] * gamma_star;
        let psi_dot = &qd[k] - &zd[k];
        let zeta_dot = &zdd[k] - &psi_dot * gamma - &psi[k] * gamma_star;
        let y = if gravity_columns {
            regressor(&q[k], &qd[k], &zeta, &zeta_dot)?
        } else {
            regressor_without_gravity(&q[k], &qd[k], &zeta, &zeta_dot)?
        };
        let y_theta = &y * &theta[k];
        let m = model.mass_matrix(&q[k])?;
        let c = model.coriolis_matrix(&q[k], &qd[k])?;
        let s_dot = (&s[k + 1] - &s[k - 1]) / (2.0 * dt);
        let lhs = m * s_dot + c * &s[k];

        let z_minus_qc = &z[k] - &qc[k];
        let rhs = -kd
            .component_mul(&(&psi_dot + wp_true.component_mul(&psi[k]) + wi_true.component_mul(&int_psi[k])))
            + kd.component_mul(&z_minus_qc.component_mul(&(&wp[k] - &wp_true)))
            + kd.component_mul(&(-&j_int[k]).component_mul(&(&wi[k] - &wi_true)))
            + &y * (&theta[k] - &truth)
            + kd.component_mul(&y_theta.component_mul(&(&w[k] - &w_true)))
            + &tau[k] * ext_sign;
        let rhs = if held {
            // z̈ is affine in (z, ż, ∫ψ*), so its left limit at t_k follows from row k − 1.
            let zdd_left = &zdd[k - 1]
                - aux.lambda_d.component_mul(&(&zd[k] - &zd[k - 1]))
                - aux.lambda_p.component_mul(&(&z[k] - &z[k - 1]))
                + aux.lambda_i.component_mul(&(&int_psi[k] - &int_psi[k - 1]));
            // ∫ψ* integrates the held q, so its rate jumps by q_k − q_{k−1}.
            let zeta_dot_jump = (zdd_left - &zdd[k]) - (&q[k - 1] - &q[k]) * gamma_star;
            rhs + kd.component_mul(&(&cmd[k - 1] - &cmd[k])) * 0.5
                - model.mass_matrix(&q[k])? * zeta_dot_jump * 0.5
        } else {
            rhs
        };
        let res = (&lhs - &rhs).amax();
        rep.scale = rep.scale.max(lhs.amax()).max(rhs.amax());
        rep.rows_checked += 1;
        if res > rep.max_abs {
            rep.max_abs = res;
            rep.worst_time = t[k];
        }
    }
    rep.scale = rep.scale.max(f64::MIN_POSITIVE);
    rep.max_residual = rep.max_abs / rep.scale;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::rk4_step;

    const LAMBDA: f64 = 2.0;
    const Q_PEER: f64 = 0.1;

    fn psi(t: f64) -> (f64, f64, f64) {
        // ψ, ψ̇, ∫ψ
        (
            0.05 * (2.0 * t).sin(),
            0.1 * (2.0 * t).cos(),
            0.025 * (1.0 - (2.0 * t).cos()),
        )
    }

    /// Samples one robot obeying the kinematic closed loop against a still peer.
    fn synthetic(dt: f64, g: &KinematicGains) -> Trace {
        let names = ["t", "T1", "T2", "q1.0", "qd1.0", "qc1.0", "q2.0"];
        let mut tr = Trace::new(names.iter().map(|s| s.to_string()).collect()).unwrap();
        let rate = |t: f64, q: f64| {
            let (p, pd, ip) = psi(t);
            -g.lambda * (q - Q_PEER) + pd + g.lambda_p * p + g.lambda_m * ip
        };
        let sub = 50;
        let h = dt / sub as f64;
        let mut q = 0.4;
        for k in 0..=400 {
            let t = k as f64 * dt;
            tr.push_row(&[t, 0.0, 0.0, q, rate(t, q), q - psi(t).0, Q_PEER])
                .unwrap();
            for j in 0..sub {
                // Time enters as a second state so the sampled law stays autonomous.
                let x = DVector::from_vec(vec![q, t + j as f64 * h]);
                let next = rk4_step(&x, h, |x| Ok(DVector::from_vec(vec![rate(x[1], x[0]), 1.0]))).unwrap();
                q = next[0];
            }
        }
        tr
    }

    fn context(dt: f64, g: KinematicGains) -> ResidualContext {
        ResidualContext {
            plant_dt: dt,
            hold: CommandHold::Continuous,
            robots: vec![RobotResidual::Kinematic { robot: 1, gains: g }],
        }
    }

    #[test]
    fn continuous_kinematic_trace_has_second_order_residual() {
        let g = KinematicGains {
            lambda: LAMBDA,
            lambda_p: 1.0,
            lambda_m: 1.0,
        };
        let coarse = closed_loop_residual(&synthetic(1e-2, &g), &context(1e-2, g)).unwrap();
        let fine = closed_loop_residual(&synthetic(5e-3, &g), &context(5e-3, g)).unwrap();
        assert!(coarse.max_abs < 1e-4, "{coarse:?}");
        let order = (coarse.max_abs / fine.max_abs).log2();
        assert!(order > 1.8, "observed order {order}");

        let mut wrong = g;
        wrong.lambda_p = -g.lambda_p;
        let bad = closed_loop_residual(&synthetic(1e-2, &g), &context(1e-2, wrong)).unwrap();
        assert!(bad.max_residual > 0.1, "{bad:?}");
    }

    #[test]
    fn missing_signals_are_schema_errors() {
        let tr = Trace::new(vec!["t".into(), "T1".into(), "T2".into()]).unwrap();
        let g = KinematicGains::default();
        assert!(matches!(
            closed_loop_residual(&tr, &context(1e-3, g)),
            Err(Error::MissingColumn(_))
        ));
    }
}
