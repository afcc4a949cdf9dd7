//! A torque-controlled master and an adaptive closed-architecture slave.
//! The slave estimates its dynamics and its inner-loop gains online; the
//! estimates stay bounded while the positions synchronize.

use telesim::analysis::{estimate_bounds, sync_metrics};
use telesim::sim::{run_scenario, ControllerMode, Scenario};

fn main() {
    let mut sc = Scenario::standard(ControllerMode::HybridOpenMaster);
    sc.duration = 60.0;
    let trace = run_scenario(&sc).expect("stable");
    let t = trace.column("t").unwrap();
    let theta = trace.signal("theta_hat", 2).unwrap();
    let w = trace.signal("w_hat", 2).unwrap();
    for k in (0..trace.len()).step_by(10_000) {
        println!(
            "t = {:4.0} s  ϑ̂2 = [{}]  ŵ2 = ({:.4}, {:.4})",
            t[k],
            theta[k]
                .iter()
                .map(|x| format!("{x:+.3}"))
                .collect::<Vec<_>>()
                .join(", "),
            w[k][0],
            w[k][1]
        );
    }
    let m = sync_metrics(&trace, 0.01).unwrap();
    println!("final ‖q1 − q2‖∞ = {:.2e} rad", m.final_error);
    for b in estimate_bounds(&trace, &sc).unwrap() {
        println!(
            "sup ‖{}{}‖∞ = {:.3} = {:.2}× its scale {:.3}",
            b.name,
            b.robot,
            b.sup,
            b.ratio(),
            b.scale
        );
    }
}
