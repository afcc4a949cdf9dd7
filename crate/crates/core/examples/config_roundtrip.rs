//! A scenario written out as a fully explicit JSON config parses back to
//! the same scenario, and a run's trace survives the CSV format bit for bit.

use telesim::cli::{emit_config, parse_config_str, read_trace, write_trace};
use telesim::sim::{run_scenario, ControllerMode, Scenario};

fn main() -> telesim::Result<()> {
    let mut sc = Scenario::contact(ControllerMode::Adaptive);
    sc.reseed(2024);
    sc.duration = 1.0;
    let text = emit_config(&sc);
    println!("{}", text.lines().take(12).collect::<Vec<_>>().join("\n"));
    println!("... {} lines", text.lines().count());
    let back = parse_config_str(&text)?;
    println!("parsed back identically: {}", back.scenario == sc);

    let dir = tempfile::tempdir().expect("a temp dir");
    let path = dir.path().join("run.csv");
    let trace = run_scenario(&sc).map_err(|a| a.error)?;
    write_trace(&trace, &path)?;
    let again = read_trace(&path)?;
    println!(
        "{} rows × {} columns, CSV round trip identical: {}",
        trace.len(),
        trace.names().len(),
        again == trace
    );

    // A short config: everything not named takes its default.
    let minimal = parse_config_str(r#"{"controller_mode": "dynsep", "duration": 5}"#)?;
    println!(
        "minimal config: mode {}, {} steps",
        minimal.scenario.mode.name(),
        minimal.scenario.steps()
    );
    Ok(())
}
