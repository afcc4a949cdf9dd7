//! In dynamic-separation mode the command is the state ż of a second-order
//! filter, so it stays continuous when the delay jumps. The largest
//! step-to-step change of ż shrinks with the command period.

use telesim::sim::{run_scenario, ControllerMode, Scenario};

fn main() {
    let base = Scenario::standard(ControllerMode::DynSep);
    for dt in [0.016, 0.008, 0.004, 0.002, 0.001] {
        let mut sc = base.clone();
        sc.master_cmd_dt = dt;
        sc.slave_cmd_dt = dt;
        let trace = run_scenario(&sc).expect("stable");
        let jump = [1, 2]
            .iter()
            .flat_map(|&r| {
                let zd = trace.signal("zd", r).unwrap();
                zd.windows(2).map(|w| (&w[1] - &w[0]).amax()).collect::<Vec<_>>()
            })
            .fold(0.0, f64::max);
        let q1 = trace.signal("q", 1).unwrap();
        let q2 = trace.signal("q", 2).unwrap();
        let n = trace.len() - 1;
        println!(
            "cmd dt = {:5.1} ms  max |Δż| = {jump:.4} rad/s  jump/dt = {:.2} rad/s²  final ‖q1 − q2‖∞ = {:.2e}",
            dt * 1e3,
            jump / dt,
            (&q1[n] - &q2[n]).amax()
        );
    }
}
