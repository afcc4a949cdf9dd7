//! Command-line front end: `run`, `check-gains`, `analyze`,
//! `probe-manipulability` and `serve`. Each command writes a `key=value`
//! summary to stdout (and to `--summary` if given) and a short report to
//! stderr. Exit codes: 0 success, 1 a checked threshold failed, 2 bad input,
//! 3 numeric abort.

mod config;
mod trace_io;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{
    emit_config, load_config, parse_config, parse_config_str, Config, ConfigDocument, OutputConfig, Preset,
};
pub use trace_io::{read_trace, write_trace};

use crate::analysis::{
    check_cubic_stability, check_gain_condition, check_point_mass_pid, closed_loop_residual, cubic_roots,
    estimate_bounds, manipulability_probe, reflection_ratio, sync_metrics, Manipulability, ResidualContext,
    ResidualMode, StabilityReport, Summary, SYNC_THRESHOLD,
};
use crate::closed_robot::{Architecture, InnerMode};
use crate::dynamics::JointVec;
use crate::error::{Error, Result};
use crate::sim::{
    probe_torque, run_scenario, ControllerMode, EnvironmentModel, OperatorModel, Scenario, Trace,
};

/// Environment variable overriding the config seed.
pub const SEED_ENV: &str = "TELESIM_SEED";
/// Relative tolerance of the measured reflection ratio.
pub const REFLECTION_TOLERANCE: f64 = 0.05;
/// Largest accepted closed-loop residual (relative).
pub const RESIDUAL_TOLERANCE: f64 = 1e-3;
/// Largest accepted estimate sup-norm, in multiples of its scale.
pub const ESTIMATE_BOUND: f64 = 10.0;
/// Fraction of the trace, at its end, used for the reflection ratio.
pub const REFLECTION_WINDOW: f64 = 0.2;

pub const EXIT_OK: u8 = 0;
pub const EXIT_THRESHOLD: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "telesim",
    version,
    about = "Delayed bilateral teleoperation of closed-architecture robots"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario and write its trace.
    Run {
        config: PathBuf,
        /// Trace CSV; defaults to `output.trace` of the config.
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Report the gain conditions of a configured scenario.
    CheckGains {
        config: PathBuf,
        /// ε of the (γ, γ*) condition; 1e-3·min K_P/K_D by default.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Measure synchronization, reflection, residuals and estimate bounds of a trace.
    Analyze {
        trace: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: ControllerMode,
        /// Scenario the trace came from; needed for reflection, residual and estimate checks.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = SYNC_THRESHOLD)]
        threshold: f64,
        /// Checks that decide the exit code (sync, reflection, residual,
        /// estimates); every applicable one by default.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Drive the master with a constant torque and classify the drift, with
    /// the configured λ_M and with λ_M = 0.
    ProbeManipulability {
        config: PathBuf,
        /// Probe horizon (s); the config duration by default.
        #[arg(long)]
        horizon: Option<f64>,
        /// Probe torque, comma separated; (0.5, 0) N·m by default.
        #[arg(long, value_delimiter = ',')]
        probe: Option<Vec<f64>>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Stream an interactive session over WebSocket at /ws.
    Serve {
        config: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

fn parse_mode(s: &str) -> std::result::Result<ControllerMode, String> {
    ControllerMode::parse(s).ok_or_else(|| {
        let names: Vec<&str> = ControllerMode::ALL.iter().map(|m| m.name()).collect();
        format!("unknown mode `{s}`, expected one of {}", names.join(", "))
    })
}

/// Exit code for a failed command.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NumericAbort { .. } | Error::NonFinite(_) => EXIT_NUMERIC,
        _ => EXIT_INPUT,
    }
}

/// Loads a config and applies the seed override.
pub fn load(path: &Path) -> Result<Config> {
    let mut cfg = load_config(path)?;
    if let Ok(v) = std::env::var(SEED_ENV) {
        let seed: u64 = v
            .trim()
            .parse()
            .map_err(|_| Error::config(format!("{SEED_ENV} must be an unsigned integer, got `{v}`")))?;
        cfg.scenario.reseed(seed);
    }
    Ok(cfg)
}

/// Runs a parsed command line and returns the process exit code.
pub fn execute(cli: Cli, out: &mut dyn Write, report: &mut dyn Write) -> u8 {
    let mut summary = Summary::new();
    let (result, summary_path) = match cli.command {
        Command::Run {
            config,
            output,
            summary: path,
        } => (cmd_run(&config, output, &mut summary, report), path),
        Command::CheckGains {
            config,
            epsilon,
            summary: path,
        } => (cmd_check_gains(&config, epsilon, &mut summary, report), path),
        Command::Analyze {
            trace,
            mode,
            config,
            threshold,
            checks,
            summary: path,
        } => (
            cmd_analyze(
                &trace,
                mode,
                config.as_deref(),
                threshold,
                checks,
                &mut summary,
                report,
            ),
            path,
        ),
        Command::ProbeManipulability {
            config,
            horizon,
            probe,
            summary: path,
        } => (cmd_probe(&config, horizon, probe, &mut summary, report), path),
        Command::Serve { config, port } => (cmd_serve(&config, port, report), None),
    };
    let code = match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(report, "error: {e}");
            summary.push("status", "error");
            summary.push("error", e.to_string().replace('\n', " "));
            exit_code(&e)
        }
    };
    let text = summary.to_string();
    let _ = out.write_all(text.as_bytes());
    if let Some(p) = summary_path {
        if let Err(e) = std::fs::write(&p, &text) {
            let _ = writeln!(report, "error: writing {}: {e}", p.display());
            return code.max(EXIT_INPUT);
        }
    }
    code
}

fn fmt_vec(v: &JointVec) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
}

fn who(i: usize) -> &'static str {
    if i == 0 {
        "master"
    } else {
        "slave"
    }
}

/// Outcome of one threshold check.
struct Check {
    name: String,
    passed: bool,
}

fn finish(checks: &[Check], summary: &mut Summary, report: &mut dyn Write) -> u8 {
    finish_selected(checks, None, summary, report)
}

/// Only the `selected` checks, if given, decide the status; a selected
/// check that did not apply fails.
fn finish_selected(
    checks: &[Check],
    selected: Option<&[String]>,
    summary: &mut Summary,
    report: &mut dyn Write,
) -> u8 {
    let counts = |name: &str| selected.is_none_or(|s| s.iter().any(|x| x == name));
    for c in checks {
        summary.push(format!("{}.pass", c.name), c.passed);
        let tag = if counts(&c.name) { "" } else { " (not selected)" };
        let _ = writeln!(
            report,
            "{:<12} {}{tag}",
            c.name,
            if c.passed { "pass" } else { "FAIL" }
        );
    }
    let mut passed = checks.iter().filter(|c| counts(&c.name)).all(|c| c.passed);
    for name in selected.unwrap_or_default() {
        if !checks.iter().any(|c| &c.name == name) {
            summary.push(format!("{name}.pass"), "not_applicable");
            let _ = writeln!(report, "{name:<12} FAIL (does not apply to this trace)");
            passed = false;
        }
    }
    summary.push("status", if passed { "pass" } else { "fail" });
    if passed {
        EXIT_OK
    } else {
        EXIT_THRESHOLD
    }
}

fn cmd_run(
    config: &Path,
    output: Option<PathBuf>,
    summary: &mut Summary,
    report: &mut dyn Write,
) -> Result<u8> {
    let cfg = load(config)?;
    let sc = &cfg.scenario;
    summary.push("command", "run");
    summary.push("mode", sc.mode.name());
    summary.push("seed", sc.seed);
    for (k, w) in cfg.warnings.iter().enumerate() {
        summary.push(format!("warning.{k}"), w);
        let _ = writeln!(report, "warning: {w}");
    }
    let started = std::time::Instant::now();
    let (trace, abort) = match run_scenario(sc) {
        Ok(t) => (t, None),
        Err(a) => (a.trace, Some(a.error)),
    };
    summary.push("runtime_s", format!("{:.3}", started.elapsed().as_secs_f64()));
    summary.push("rows", trace.len());
    if let Some(path) = output.or(cfg.output.trace.clone()) {
        write_trace(&trace, &path)?;
        summary.push("trace", path.display());
    }
    if let Some(e) = abort {
        let _ = writeln!(report, "numeric abort: {e}");
        summary.push("status", "numeric_abort");
        summary.push("error", e.to_string());
        return Ok(EXIT_NUMERIC);
    }
    let _ = measure(&trace, sc.mode, Some(sc), SYNC_THRESHOLD, summary, report)?;
    summary.push("status", "ok");
    Ok(EXIT_OK)
}

/// Records every applicable measurement of a trace and returns the checks
/// that apply to it.
fn measure(
    trace: &Trace,
    mode: ControllerMode,
    sc: Option<&Scenario>,
    threshold: f64,
    summary: &mut Summary,
    report: &mut dyn Write,
) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let sync = sync_metrics(trace, threshold)?;
    summary.push("sync.final_error", sync.final_error);
    summary.push("sync.max_error_after_settle", sync.max_error_after_settle);
    summary.push(
        "sync.settle_time",
        sync.settle_time.map_or("none".to_string(), |t| t.to_string()),
    );
    let _ = writeln!(report, "final ‖q1 − q2‖∞ = {:.3e} rad", sync.final_error);

    let theoretical = sc.and_then(Scenario::theoretical_reflection);
    let contact = match reflection_ratio(trace, REFLECTION_WINDOW, theoretical) {
        Ok(est) => {
            summary.push("reflection.ratio", fmt_vec(&est.ratio));
            summary.push("reflection.window_start", est.window.0);
            if let Some(th) = &est.theoretical {
                summary.push("reflection.theoretical", fmt_vec(th));
            }
            if let Some(rel) = est.relative_error() {
                summary.push("reflection.relative_error", rel);
                let _ = writeln!(
                    report,
                    "τ1*/τ2* = [{}], {:.2}% from theory",
                    fmt_vec(&est.ratio),
                    100.0 * rel
                );
                checks.push(Check {
                    name: "reflection".into(),
                    passed: rel < REFLECTION_TOLERANCE,
                });
            }
            true
        }
        Err(Error::NoContact { .. }) | Err(Error::MissingColumn(_)) => {
            summary.push("reflection", "no_contact");
            false
        }
        Err(e) => return Err(e),
    };
    // In contact the robots rest apart by design; synchronization is judged in free motion.
    if !contact {
        checks.push(Check {
            name: "sync".into(),
            passed: sync.final_error < threshold,
        });
    }

    if mode == ControllerMode::DynSep {
        for robot in 1..=2 {
            let zd = trace.signal("zd", robot)?;
            let jump = zd.windows(2).map(|w| (&w[1] - &w[0]).amax()).fold(0.0, f64::max);
            summary.push(format!("zd{robot}.max_step_jump"), jump);
        }
    }

    let Some(sc) = sc else {
        summary.push("residual", "skipped_no_config");
        return Ok(checks);
    };
    if sc.mode != mode {
        return Err(Error::config(format!(
            "--mode {} does not match controller_mode {} of the config",
            mode.name(),
            sc.mode.name()
        )));
    }
    let residual_mode = match mode {
        ControllerMode::Kinematic => Some(ResidualMode::Kinematic),
        ControllerMode::Adaptive | ControllerMode::HybridOpenMaster => Some(ResidualMode::Adaptive),
        _ => None,
    };
    match residual_mode.map(|m| ResidualContext::from_scenario(sc, m)) {
        None => summary.push("residual", "not_applicable"),
        Some(Err(Error::Config(why))) => {
            summary.push("residual", "skipped");
            summary.push("residual.reason", why);
        }
        Some(Err(e)) => return Err(e),
        Some(Ok(ctx)) => {
            let r = closed_loop_residual(trace, &ctx)?;
            summary.push("residual.max", r.max_residual);
            summary.push("residual.worst_time", r.worst_time);
            summary.push("residual.rows", r.rows_checked);
            let _ = writeln!(
                report,
                "closed-loop residual {:.3e} (worst at t = {})",
                r.max_residual, r.worst_time
            );
            checks.push(Check {
                name: "residual".into(),
                passed: r.max_residual < RESIDUAL_TOLERANCE,
            });
        }
    }
    let bounds = estimate_bounds(trace, sc)?;
    if !bounds.is_empty() {
        let mut worst = 0.0f64;
        for b in &bounds {
            summary.push(format!("estimates.{}{}.sup", b.name, b.robot), b.sup);
            summary.push(format!("estimates.{}{}.scale", b.name, b.robot), b.scale);
            worst = worst.max(b.ratio());
        }
        summary.push("estimates.max_ratio", worst);
        checks.push(Check {
            name: "estimates".into(),
            passed: worst < ESTIMATE_BOUND,
        });
    }
    Ok(checks)
}

fn cmd_analyze(
    trace_path: &Path,
    mode: ControllerMode,
    config: Option<&Path>,
    threshold: f64,
    selected: Option<Vec<String>>,
    summary: &mut Summary,
    report: &mut dyn Write,
) -> Result<u8> {
    summary.push("command", "analyze");
    summary.push("mode", mode.name());
    let cfg = config.map(load).transpose()?;
    let trace = read_trace(trace_path)?;
    summary.push("rows", trace.len());
    let checks = measure(
        &trace,
        mode,
        cfg.as_ref().map(|c| &c.scenario),
        threshold,
        summary,
        report,
    )?;
    Ok(finish_selected(&checks, selected.as_deref(), summary, report))
}

fn push_report(summary: &mut Summary, key: &str, r: &StabilityReport) {
    summary.push(format!("{key}.passed"), r.passed);
    summary.push(format!("{key}.min_margin"), r.min_margin());
}

fn cmd_check_gains(
    config: &Path,
    epsilon: Option<f64>,
    summary: &mut Summary,
    report: &mut dyn Write,
) -> Result<u8> {
    let cfg = load(config)?;
    let sc = &cfg.scenario;
    summary.push("command", "check-gains");
    summary.push("mode", sc.mode.name());
    let mut checks = Vec::new();
    for i in 0..2 {
        let r = sc.robot(i);
        let name = who(i);
        if sc.mode.architecture(i) == Architecture::OpenTorque {
            summary.push(format!("{name}.architecture"), "open_torque");
            continue;
        }
        let g = &r.inner;
        if matches!(
            sc.mode,
            ControllerMode::DynSep | ControllerMode::Adaptive | ControllerMode::HybridOpenMaster
        ) {
            let aux = &r.adaptive.aux;
            let cubic = check_cubic_stability(&aux.lambda_d, &aux.lambda_p, &aux.lambda_i);
            push_report(summary, &format!("{name}.aux_cubic"), &cubic);
            for j in 0..aux.lambda_d.len() {
                let roots = cubic_roots(aux.lambda_d[j], aux.lambda_p[j], aux.lambda_i[j]);
                let text: Vec<String> = roots
                    .iter()
                    .map(|z| format!("{:.6}{:+.6}i", z.re, z.im))
                    .collect();
                summary.push(format!("{name}.aux_cubic.roots.{j}"), text.join(" "));
            }
            let _ = writeln!(
                report,
                "{name}: s³ + Λ_D s² + Λ_P s + Λ_I {}",
                verdict(cubic.passed)
            );
            checks.push(Check {
                name: format!("{name}.aux_cubic"),
                passed: cubic.passed,
            });
        }
        if sc.mode.is_adaptive(i) {
            let eps = epsilon.unwrap_or_else(|| {
                g.kp.iter()
                    .zip(g.kd.iter())
                    .map(|(p, d)| p / d)
                    .fold(f64::INFINITY, f64::min)
                    * 1e-3
            });
            let cond = check_gain_condition(
                &g.kd,
                &g.kp,
                &g.effective_ki(),
                r.adaptive.gamma,
                r.adaptive.gamma_star,
                eps,
            );
            summary.push(format!("{name}.gain_condition.epsilon"), eps);
            push_report(summary, &format!("{name}.gain_condition"), &cond);
            for m in &cond.per_joint {
                let _ = writeln!(report, "{name} joint {}: {} = {:.6}", m.joint, m.detail, m.margin);
            }
            checks.push(Check {
                name: format!("{name}.gain_condition"),
                passed: cond.passed,
            });
        }
        if g.mode == InnerMode::Pid {
            // The conservative point mass is the largest inertia eigenvalue at q0.
            let m_star = r.model.mass_matrix(&r.q0)?.symmetric_eigenvalues().max();
            let mut all = true;
            for j in 0..g.kd.len() {
                let pm = check_point_mass_pid(m_star, g.kd[j], g.kp[j], g.ki[j]);
                summary.push(format!("{name}.point_mass.{j}.margin"), pm.min_margin());
                all &= pm.passed;
            }
            summary.push(format!("{name}.point_mass.m_star"), m_star);
            summary.push(format!("{name}.point_mass.passed"), all);
            let ki_over_kd = g.ki.component_div(&g.kd).amax();
            let kd_over_kp = g.kd.component_div(&g.kp).amax();
            summary.push(format!("{name}.max_ki_over_kd"), ki_over_kd);
            summary.push(format!("{name}.max_kd_over_kp"), kd_over_kp);
            let _ = writeln!(
                report,
                "{name}: point-mass PID with m* = {m_star:.4} {}; max K_I/K_D = {ki_over_kd}, max K_D/K_P = {kd_over_kp}",
                verdict(all)
            );
            checks.push(Check {
                name: format!("{name}.point_mass"),
                passed: all,
            });
        }
    }
    Ok(finish(&checks, summary, report))
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "stable"
    } else {
        "NOT stable"
    }
}

fn cmd_probe(
    config: &Path,
    horizon: Option<f64>,
    probe: Option<Vec<f64>>,
    summary: &mut Summary,
    report: &mut dyn Write,
) -> Result<u8> {
    let cfg = load(config)?;
    let sc = cfg.scenario;
    let m = sc.dof();
    let probe = match probe {
        Some(v) if v.len() == m => JointVec::from_vec(v),
        Some(v) => {
            return Err(Error::config(format!(
                "--probe: expected {m} entries, got {}",
                v.len()
            )))
        }
        None => probe_torque(),
    };
    let horizon = horizon.unwrap_or(sc.duration);
    summary.push("command", "probe-manipulability");
    summary.push("mode", sc.mode.name());
    summary.push("probe", fmt_vec(&probe));
    summary.push("horizon", horizon);
    let mut variants = vec![("configured", sc.clone(), Manipulability::InfiniteDegreeOne)];
    if matches!(
        sc.mode,
        ControllerMode::Kinematic | ControllerMode::KinematicFallback
    ) {
        let mut contrast = sc.clone();
        for i in 0..2 {
            contrast.robot_mut(i).kinematic.lambda_m = 0.0;
        }
        variants.push(("lambda_m_zero", contrast, Manipulability::Finite));
    }
    let mut checks = Vec::new();
    for (key, variant, expected) in variants {
        let v = manipulability_probe(&variant, &probe, horizon)?;
        summary.push(format!("{key}.classification"), v.classification.name());
        summary.push(format!("{key}.drift_slope"), v.drift_slope);
        summary.push(format!("{key}.fit_residual"), v.fit_residual);
        summary.push(format!("{key}.saturation_delta"), v.saturation_delta);
        let _ = writeln!(
            report,
            "{key}: {} (slope {:.3e} rad/s, fit residual {:.2}%, Δq_ave {:.3e} rad)",
            v.classification.name(),
            v.drift_slope,
            100.0 * v.fit_residual,
            v.saturation_delta
        );
        checks.push(Check {
            name: key.to_string(),
            passed: v.classification == expected,
        });
    }
    Ok(finish(&checks, summary, report))
}

fn cmd_serve(config: &Path, port: u16, report: &mut dyn Write) -> Result<u8> {
    let mut sc = load(config)?.scenario;
    if sc.operator != OperatorModel::Interactive {
        let _ = writeln!(
            report,
            "note: operator model replaced by the interactive operator"
        );
        sc.operator = OperatorModel::Interactive;
    }
    if sc.environment != EnvironmentModel::None {
        let _ = writeln!(report, "note: environment model kept: {:?}", sc.environment);
    }
    let _ = writeln!(report, "serving ws://127.0.0.1:{port}/ws");
    crate::bridge::serve_blocking(sc, port)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("telesim").chain(args.iter().copied())).unwrap()
    }

    fn exec(args: &[&str]) -> (u8, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = execute(cli(args), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap())
    }

    fn write(dir: &Path, name: &str, text: &str) -> String {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p.display().to_string()
    }

    #[test]
    fn subcommands_parse() {
        for args in [
            &["run", "c.json", "-o", "t.csv"][..],
            &["check-gains", "c.json"],
            &["analyze", "t.csv", "--mode", "dynsep"],
            &["probe-manipulability", "c.json", "--probe", "0.5,0"],
            &["serve", "c.json", "--port", "9001"],
        ] {
            cli(args);
        }
        assert!(Cli::try_parse_from(["telesim", "analyze", "t.csv", "--mode", "fast"]).is_err());
    }

    #[test]
    fn bad_config_exits_2() {
        let dir = tempfile::tempdir().unwrap();
        let c = write(
            dir.path(),
            "c.json",
            r#"{"controller_mode": "kinematic", "master": {"kinematic": {"lambda_M": -1}}}"#,
        );
        let (code, out) = exec(&["run", &c]);
        assert_eq!(code, EXIT_INPUT);
        assert!(out.contains("lambda_M must be > 0"), "{out}");
    }

    #[test]
    fn numeric_abort_exits_3_and_keeps_the_partial_trace() {
        let dir = tempfile::tempdir().unwrap();
        let c = write(
            dir.path(),
            "c.json",
            r#"{"controller_mode": "kinematic", "duration": 2, "slave": {"kinematic": {"lambda_P": 1e9}}}"#,
        );
        let t = dir.path().join("t.csv").display().to_string();
        let (code, out) = exec(&["run", &c, "-o", &t]);
        assert_eq!(code, EXIT_NUMERIC, "{out}");
        assert!(out.contains("status=numeric_abort"));
        let tr = read_trace(&t).unwrap();
        assert!(!tr.is_empty());
    }

    #[test]
    fn run_then_analyze() {
        let dir = tempfile::tempdir().unwrap();
        let c = write(
            dir.path(),
            "c.json",
            r#"{"controller_mode": "kinematic", "duration": 1}"#,
        );
        let t = dir.path().join("t.csv").display().to_string();
        let (code, out) = exec(&["run", &c, "-o", &t]);
        assert_eq!(code, EXIT_OK, "{out}");
        assert!(out.contains("rows=1001"));
        // One second is far too short to synchronize.
        let (code, out) = exec(&["analyze", &t, "--mode", "kinematic"]);
        assert_eq!(code, EXIT_THRESHOLD, "{out}");
        assert!(out.contains("sync.pass=false"));
        let (code, out) = exec(&["analyze", &t, "--mode", "kinematic", "--threshold", "1"]);
        assert_eq!(code, EXIT_OK, "{out}");
        let (code, _) = exec(&["analyze", &t, "--mode", "adaptive", "--config", &c]);
        assert_eq!(code, EXIT_INPUT);
        let (code, out) = exec(&["analyze", &t, "--mode", "kinematic", "--checks", "reflection"]);
        assert_eq!(code, EXIT_THRESHOLD, "{out}");
        assert!(out.contains("reflection.pass=not_applicable"));
    }

    #[test]
    fn check_gains_reports_and_fails() {
        let dir = tempfile::tempdir().unwrap();
        let ok = write(
            dir.path(),
            "ok.json",
            r#"{"controller_mode": "hybrid_open_master"}"#,
        );
        let (code, out) = exec(&["check-gains", &ok]);
        assert_eq!(code, EXIT_OK, "{out}");
        assert!(out.contains("slave.aux_cubic.passed=true"));
        assert!(out.contains("slave.gain_condition.passed=true"));
        assert!(out.contains("master.architecture=open_torque"));
        let bad = write(
            dir.path(),
            "bad.json",
            r#"{"controller_mode": "adaptive", "slave": {"adaptive": {"Lambda_D": 1, "Lambda_P": 1, "Lambda_I": 10}}}"#,
        );
        let (code, out) = exec(&["check-gains", &bad]);
        assert_eq!(code, EXIT_THRESHOLD, "{out}");
        assert!(out.contains("slave.aux_cubic.passed=false"));
    }
}
