//! A constant operator torque on the master makes the consensus position
//! ramp when the controller integrates the inner-loop error (λ_M > 0), and
//! merely offsets it when it does not (λ_M = 0).

use telesim::analysis::manipulability_probe;
use telesim::sim::{probe_torque, Scenario};

fn main() -> telesim::Result<()> {
    let probe = probe_torque();
    for lambda_m in [1.0, 0.0] {
        let sc = Scenario::manipulability_base(lambda_m);
        let v = manipulability_probe(&sc, &probe, sc.duration)?;
        println!(
            "λ_M = {lambda_m}: {} (drift {:.4} rad/s, linear-fit residual {:.2}%, |Δq_ave| over the second half {:.2e} rad)",
            v.classification.name(),
            v.drift_slope,
            100.0 * v.fit_residual,
            v.saturation_delta
        );
    }
    Ok(())
}
