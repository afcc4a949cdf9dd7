//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines are always printed; exits non-zero if any
//! criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use nalgebra::{Complex, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use telesim::analysis::{
    check_cubic_stability, check_gain_condition, closed_loop_residual, cubic_roots, estimate_bounds,
    manipulability_probe, reflection_ratio, sync_metrics, Manipulability, ResidualContext, ResidualMode,
};
use telesim::cli::parse_config;
use telesim::closed_robot::{step_closed_robot, step_open_robot, InnerGains, RobotState};
use telesim::control::Controller;
use telesim::dynamics::{regressor, ArmModel, JointVec};
use telesim::integrate::observed_order;
use telesim::sim::{build_controllers, probe_torque, run_scenario, Scenario, Simulation, Trace};

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn config(name: &str) -> Scenario {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "configs", name].iter().collect();
    parse_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn run_timed(sc: &Scenario) -> (Trace, f64) {
    let t0 = Instant::now();
    let trace = run_scenario(sc).unwrap_or_else(|a| panic!("run aborted: {a}"));
    (trace, t0.elapsed().as_secs_f64())
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rand_vec(rng: &mut ChaCha8Rng, scale: f64) -> JointVec {
    JointVec::from_fn(2, |_, _| rng.gen_range(-scale..scale))
}

fn random_model(rng: &mut ChaCha8Rng) -> ArmModel {
    let (l1, l2) = (rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0));
    ArmModel {
        m1: rng.gen_range(0.1..5.0),
        m2: rng.gen_range(0.1..5.0),
        l1,
        l2,
        lc1: rng.gen_range(0.05..1.0) * l1,
        lc2: rng.gen_range(0.05..1.0) * l2,
        i1: rng.gen_range(0.001..0.2),
        i2: rng.gen_range(0.001..0.2),
        g0: 9.81,
    }
}

/// Ṁ along q̇ by a fourth-order central difference.
fn mass_matrix_rate(model: &ArmModel, q: &JointVec, qd: &JointVec) -> nalgebra::DMatrix<f64> {
    let h = 1e-3;
    let m = |s: f64| model.mass_matrix(&(q + qd * s)).unwrap();
    (m(-2.0 * h) - m(-h) * 8.0 + m(h) * 8.0 - m(2.0 * h)) / (12.0 * h)
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_skew, mut worst_reg) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let model = random_model(&mut rng);
        let q = rand_vec(&mut rng, 3.2);
        let qd = rand_vec(&mut rng, 2.0);
        let x = rand_vec(&mut rng, 1.0);
        let n = mass_matrix_rate(&model, &q, &qd) - model.coriolis_matrix(&q, &qd).unwrap() * 2.0;
        worst_skew = worst_skew.max(x.dot(&(&n * &x)).abs());

        let zeta = rand_vec(&mut rng, 2.0);
        let zeta_dot = rand_vec(&mut rng, 5.0);
        let y = regressor(&q, &qd, &zeta, &zeta_dot).unwrap();
        let lhs = y * model.params().theta;
        let rhs = model.mass_matrix(&q).unwrap() * &zeta_dot
            + model.coriolis_matrix(&q, &qd).unwrap() * &zeta
            + model.gravity_vector(&q).unwrap();
        worst_reg = worst_reg.max((lhs - rhs).amax());
    }
    verdict(
        worst_skew < 1e-9 && worst_reg < 1e-9,
        format!("max |xᵀ(Ṁ−2C)x| = {worst_skew:.1e}, max ‖Yϑ − (Mζ̇+Cζ+g)‖∞ = {worst_reg:.1e} over 1000 states (< 1e-9)"),
    )
}

fn criterion_2() -> Outcome {
    let d = |x: f64| JointVec::from_element(2, x);
    let triple = check_cubic_stability(&d(15.0), &d(75.0), &d(125.0));
    let root_err = cubic_roots(15.0, 75.0, 125.0)
        .iter()
        .map(|r| (r - Complex::new(-5.0, 0.0)).norm())
        .fold(0.0, f64::max);
    let unstable = check_cubic_stability(&d(1.0), &d(1.0), &d(10.0));
    let (kd, kp, ki) = (d(2.0), d(20.0), d(1.0));
    let pass = check_gain_condition(&kd, &kp, &ki, 1.0, 1.0, 0.1);
    let fail = check_gain_condition(&kd, &kp, &ki, 1.0, 0.4, 0.1);
    // Hand-derived: γ* − K_I/K_D and γ − ε − (γ* − K_I/K_D)·K_D/K_P.
    let expected_pass = [0.5, 1.0 - 0.1 - 0.5 * 0.1];
    let expected_fail = [0.4 - 0.5, 1.0 - 0.1 + 0.1 * 0.1];
    let margin_err = |r: &telesim::analysis::StabilityReport, e: [f64; 2]| {
        r.per_joint
            .chunks(2)
            .flat_map(|c| [(c[0].margin - e[0]).abs(), (c[1].margin - e[1]).abs()])
            .fold(0.0, f64::max)
    };
    let err = margin_err(&pass, expected_pass).max(margin_err(&fail, expected_fail));
    verdict(
        triple.passed && root_err < 1e-6 && !unstable.passed && pass.passed && !fail.passed && err < 1e-12,
        format!(
            "(15,75,125) stable with roots within {root_err:.1e} of −5; (1,1,10) unstable; \
             gain example passes, γ*=0.4 fails; margin error {err:.1e}"
        ),
    )
}

fn criterion_3() -> Outcome {
    let sc = config("kinematic_sync.json");
    let (trace, secs) = run_timed(&sc);
    let err = sync_metrics(&trace, 0.01).map_err(|e| e.to_string())?.final_error;
    verdict(
        err < 0.01 && secs < 10.0,
        format!("‖q1 − q2‖∞ at t = 30 s: {err:.2e} rad (< 0.01), runtime {secs:.2} s (< 10)"),
    )
}

/// Largest change of the logged ż between consecutive rows, both robots.
fn max_zd_jump(trace: &Trace) -> f64 {
    (1..=2)
        .map(|r| {
            let zd = trace.signal("zd", r).unwrap();
            zd.windows(2).map(|w| (&w[1] - &w[0]).amax()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

fn criterion_4() -> Outcome {
    let sc = config("dynsep_sync.json");
    let (trace, secs) = run_timed(&sc);
    let err = sync_metrics(&trace, 0.01).map_err(|e| e.to_string())?.final_error;
    // The delay jumps by up to 0.6 s at every redraw; a continuous ż moves by
    // O(dt) per update regardless.
    let dts = [0.016, 0.008, 0.004, 0.002];
    let jumps: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            let mut s = sc.clone();
            s.master_cmd_dt = dt;
            s.slave_cmd_dt = dt;
            max_zd_jump(&run_scenario(&s).unwrap())
        })
        .collect();
    let order = observed_order(&dts, &jumps);
    let ratios: Vec<f64> = jumps.windows(2).map(|w| w[0] / w[1]).collect();
    let scales = ratios.iter().all(|r| (1.6..=2.4).contains(r));
    verdict(
        err < 0.01 && scales && (order - 1.0).abs() < 0.15,
        format!(
            "‖q1 − q2‖∞ at t = 30 s: {err:.2e} rad (< 0.01), runtime {secs:.2} s; \
             max ż step {:?} at dt {:?} s, slope {order:.3} (≈ 1)",
            jumps.iter().map(|j| format!("{j:.3e}")).collect::<Vec<_>>(),
            dts
        ),
    )
}

fn criterion_5() -> Outcome {
    let sc = config("hybrid_sync.json");
    let (trace, secs) = run_timed(&sc);
    let err = sync_metrics(&trace, 0.01).map_err(|e| e.to_string())?.final_error;
    let bounds = estimate_bounds(&trace, &sc).map_err(|e| e.to_string())?;
    let worst = bounds
        .iter()
        .max_by(|a, b| a.ratio().total_cmp(&b.ratio()))
        .ok_or("no estimates logged")?;
    verdict(
        err < 0.01 && worst.ratio() < 10.0 && secs < 30.0,
        format!(
            "‖q1 − q2‖∞ at t = 60 s: {err:.2e} rad (< 0.01); largest estimate {}{} at {:.2}× its scale (< 10); runtime {secs:.2} s (< 30)",
            worst.name,
            worst.robot,
            worst.ratio()
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for name in ["contact_kinematic.json", "contact_adaptive.json"] {
        let sc = config(name);
        let (trace, _) = run_timed(&sc);
        let est = reflection_ratio(&trace, 0.2, sc.theoretical_reflection()).map_err(|e| e.to_string())?;
        let rel = est.relative_error().ok_or("no theoretical ratio")?;
        ok &= rel < 0.05 && est.ratio.iter().all(|r| r.is_finite());
        parts.push(format!(
            "{}: τ1*/τ2* = ({:.4}, {:.4}), {:.2}% from 0.5",
            sc.mode.name(),
            est.ratio[0],
            est.ratio[1],
            100.0 * rel
        ));
    }
    verdict(ok, format!("{} (< 5%)", parts.join("; ")))
}

fn criterion_7() -> Outcome {
    let sc = config("manipulability.json");
    let probe = probe_torque();
    let on = manipulability_probe(&sc, &probe, sc.duration).map_err(|e| e.to_string())?;
    let mut off_sc = sc.clone();
    for i in 0..2 {
        off_sc.robot_mut(i).kinematic.lambda_m = 0.0;
    }
    let off = manipulability_probe(&off_sc, &probe, sc.duration).map_err(|e| e.to_string())?;
    verdict(
        on.classification == Manipulability::InfiniteDegreeOne
            && on.fit_residual < 0.05
            && off.classification == Manipulability::Finite
            && off.saturation_delta < 1e-3,
        format!(
            "λ_M = 1: {} (slope {:.4} rad/s, fit residual {:.2}%); λ_M = 0: {} (|Δq_ave| = {:.2e} rad)",
            on.classification.name(),
            on.drift_slope,
            100.0 * on.fit_residual,
            off.classification.name(),
            off.saturation_delta
        ),
    )
}

fn residual_of(sc: &Scenario, trace: &Trace, mode: ResidualMode) -> Result<f64, String> {
    let ctx = ResidualContext::from_scenario(sc, mode).map_err(|e| e.to_string())?;
    closed_loop_residual(trace, &ctx)
        .map(|r| r.max_residual)
        .map_err(|e| e.to_string())
}

fn criterion_8() -> Outcome {
    let kin = config("residual_kinematic.json");
    let ada = config("residual_adaptive.json");
    let hyb = config("residual_hybrid.json");
    let r_kin = residual_of(&kin, &run_scenario(&kin).unwrap(), ResidualMode::Kinematic)?;
    let r_ada = residual_of(&ada, &run_scenario(&ada).unwrap(), ResidualMode::Adaptive)?;
    let r_hyb = residual_of(&hyb, &run_scenario(&hyb).unwrap(), ResidualMode::Adaptive)?;

    // The slave runs with λ_P negated; the check keeps the nominal gains.
    let mut ctrls = build_controllers(&kin);
    if let Controller::Kinematic(c) = &mut ctrls[1] {
        c.gains.lambda_p = -c.gains.lambda_p;
    }
    let mutated = Simulation::with_controllers(kin.clone(), ctrls)
        .and_then(|s| s.run().map_err(|a| a.error))
        .map_err(|e| e.to_string())?;
    let r_mut = residual_of(&kin, &mutated, ResidualMode::Kinematic)?;

    verdict(
        r_kin < 1e-3 && r_ada < 1e-3 && r_hyb < 1e-3 && r_mut > 0.1,
        format!(
            "kinematic {r_kin:.1e}, adaptive {r_ada:.1e}, hybrid {r_hyb:.1e} (< 1e-3); \
             λ_P-flipped kinematic slave {r_mut:.2} (> 0.1)"
        ),
    )
}

fn closed_smooth_run(dt: f64) -> DVector<f64> {
    let model = ArmModel::canonical().with_gravity(9.81);
    let gains = InnerGains::uniform(2, 2.0, 20.0, 1.0);
    let mut st = RobotState::closed(
        JointVec::from_vec(vec![0.2, -0.3]),
        JointVec::from_vec(vec![0.5, -1.0]),
    );
    let cmd = JointVec::from_vec(vec![0.2, 0.1]);
    let tau = JointVec::from_vec(vec![0.05, -0.02]);
    for _ in 0..(0.5 / dt).round() as usize {
        st = step_closed_robot(&st, &gains, &model, &tau, &cmd, dt).unwrap();
    }
    DVector::from_iterator(4, st.q.iter().chain(st.qd.iter()).copied())
}

fn open_smooth_run(dt: f64) -> DVector<f64> {
    let model = ArmModel::canonical().with_gravity(9.81);
    let mut st = RobotState::open(
        JointVec::from_vec(vec![0.2, -0.3]),
        JointVec::from_vec(vec![0.5, -1.0]),
    );
    let tau = JointVec::from_vec(vec![0.3, -0.1]);
    let zero = JointVec::zeros(2);
    for _ in 0..(0.5 / dt).round() as usize {
        st = step_open_robot(&st, &model, &tau, &zero, dt).unwrap();
    }
    DVector::from_iterator(4, st.q.iter().chain(st.qd.iter()).copied())
}

fn criterion_9() -> Outcome {
    let sc = config("hybrid_sync.json");
    let mut short = sc.clone();
    short.duration = 10.0;
    let a = run_scenario(&short).unwrap();
    let b = run_scenario(&short).unwrap();
    let bits = |t: &Trace| -> Vec<u64> {
        t.names()
            .iter()
            .flat_map(|n| {
                t.column(n)
                    .unwrap()
                    .iter()
                    .map(|x| x.to_bits())
                    .collect::<Vec<_>>()
            })
            .collect()
    };
    let identical = a.names() == b.names() && bits(&a) == bits(&b);
    let mut reseeded = short.clone();
    reseeded.reseed(short.seed + 1);
    let differs = bits(&run_scenario(&reseeded).unwrap()) != bits(&a);

    let steps = [4e-3, 2e-3, 1e-3];
    let order = |run: fn(f64) -> DVector<f64>| {
        let reference = run(1e-4);
        let errors: Vec<f64> = steps.iter().map(|&h| (run(h) - &reference).amax()).collect();
        observed_order(&steps, &errors)
    };
    let (closed, open) = (order(closed_smooth_run), order(open_smooth_run));
    verdict(
        identical && differs && closed >= 3.8 && open >= 3.8,
        format!(
            "identical seeds bit-identical: {identical}, new seed differs: {differs}; \
             RK4 order {closed:.2} (closed robot), {open:.2} (open robot) (≥ 3.8)"
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "dynamics properties", criterion_1),
        (2, "gain checkers", criterion_2),
        (3, "kinematic synchronization", criterion_3),
        (4, "dynamic-separation synchronization", criterion_4),
        (5, "adaptive synchronization", criterion_5),
        (6, "static torque quasi-reflection", criterion_6),
        (7, "manipulability dichotomy", criterion_7),
        (8, "closed-loop residuals", criterion_8),
        (9, "determinism and numerics", criterion_9),
    ];
    let mut failed = 0;
    for (n, name, f) in criteria {
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n} [{name}]: PASS ({secs:.1} s) {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} [{name}]: FAIL ({secs:.1} s) {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
