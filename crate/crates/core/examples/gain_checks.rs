//! The algebraic gain conditions: the auxiliary cubic, the (γ, γ*)
//! inequalities against the inner loop, and the point-mass PID bound.

use telesim::analysis::{check_cubic_stability, check_gain_condition, check_point_mass_pid, cubic_roots};
use telesim::dynamics::joint_vec;

fn main() {
    let d = |x: f64| joint_vec(&[x, x]);
    for (ld, lp, li) in [(15.0, 75.0, 125.0), (1.0, 1.0, 10.0)] {
        let r = check_cubic_stability(&d(ld), &d(lp), &d(li));
        let roots: Vec<String> = cubic_roots(ld, lp, li)
            .iter()
            .map(|z| format!("{:.4}{:+.4}i", z.re, z.im))
            .collect();
        println!(
            "s³ + {ld}s² + {lp}s + {li}: {} (margin {}), roots {}",
            if r.passed { "stable" } else { "unstable" },
            r.min_margin(),
            roots.join(", ")
        );
    }

    let (kd, kp, ki) = (d(2.0), d(20.0), d(1.0));
    for gamma_star in [1.0, 0.4] {
        let r = check_gain_condition(&kd, &kp, &ki, 1.0, gamma_star, 0.1);
        println!(
            "γ = 1, γ* = {gamma_star}, ε = 0.1: {}",
            if r.passed { "pass" } else { "fail" }
        );
        for m in r.per_joint.iter().filter(|m| m.joint == 0) {
            println!("    {:<50} {:+.3}", m.detail, m.margin);
        }
    }

    for ki in [1.0, 100.0] {
        let r = check_point_mass_pid(0.5, 2.0, 20.0, ki);
        println!(
            "0.5 s³ + 2 s² + 20 s + {ki}: {} (margin {})",
            if r.passed { "stable" } else { "unstable" },
            r.min_margin()
        );
    }
}
