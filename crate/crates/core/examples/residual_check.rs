//! Checks a logged trajectory against the closed-loop equation it should
//! satisfy. The nominal kinematic run fits to round-off; a run whose slave
//! used a flipped λ_P does not.

use telesim::analysis::{closed_loop_residual, ResidualContext, ResidualMode};
use telesim::control::Controller;
use telesim::sim::{build_controllers, run_scenario, ControllerMode, Scenario, Simulation};

fn main() -> telesim::Result<()> {
    let mut sc = Scenario::standard(ControllerMode::Kinematic);
    sc.slave_cmd_dt = sc.plant_dt;
    sc.duration = 10.0;
    let ctx = ResidualContext::from_scenario(&sc, ResidualMode::Kinematic)?;

    let nominal = run_scenario(&sc).map_err(|a| a.error)?;
    let r = closed_loop_residual(&nominal, &ctx)?;
    println!(
        "nominal:   max relative residual {:.2e} at t = {:.3} s over {} rows",
        r.max_residual, r.worst_time, r.rows_checked
    );

    let mut ctrls = build_controllers(&sc);
    if let Controller::Kinematic(c) = &mut ctrls[1] {
        c.gains.lambda_p = -c.gains.lambda_p;
    }
    let mutated = Simulation::with_controllers(sc.clone(), ctrls)?
        .run()
        .unwrap_or_else(|a| a.trace);
    let r = closed_loop_residual(&mutated, &ctx)?;
    println!(
        "λ_P flip:  max relative residual {:.2e} at t = {:.3} s",
        r.max_residual, r.worst_time
    );
    Ok(())
}
