//! The slave pushes into a joint-space wall while the operator pulls the
//! master. At rest the operator feels the contact torque scaled by the
//! ratio of the inner integral gains, here 1/2 on each joint.

use telesim::analysis::reflection_ratio;
use telesim::sim::{run_scenario, ControllerMode, Scenario};

fn main() {
    for mode in [
        ControllerMode::Kinematic,
        ControllerMode::Adaptive,
        ControllerMode::DynSep,
    ] {
        let sc = Scenario::contact(mode);
        let trace = run_scenario(&sc).expect("stable");
        let est = reflection_ratio(&trace, 0.2, sc.theoretical_reflection()).unwrap();
        println!(
            "{:<10} τ1*/τ2* over the last 20%: ({:.4}, {:.4}), expected {:?}, relative error {:.2}%",
            mode.name(),
            est.ratio[0],
            est.ratio[1],
            est.theoretical
                .as_ref()
                .map(|v| v.iter().copied().collect::<Vec<_>>()),
            100.0 * est.relative_error().unwrap_or(f64::NAN),
        );
    }
}
