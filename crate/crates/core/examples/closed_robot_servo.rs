//! A closed-architecture arm only accepts a velocity command; its hidden
//! PID loop turns the command into torque. Under a constant command the
//! joints move at the commanded rate. Holding still against a push deflects
//! the arm by about τ/K_P, which the integral action then slowly erodes.

use telesim::closed_robot::{step_closed_robot, InnerGains, RobotState};
use telesim::dynamics::{joint_vec, ArmModel};

fn main() -> telesim::Result<()> {
    let model = ArmModel::canonical();
    let gains = InnerGains::uniform(2, 2.0, 20.0, 1.0);
    let zero = joint_vec(&[0.0, 0.0]);
    let cmd = joint_vec(&[0.1, -0.05]);
    let push = joint_vec(&[0.05, 0.0]);
    let dt = 1e-3;
    let mut st = RobotState::closed(zero.clone(), zero.clone());
    for k in 1..=8000 {
        // Commanded motion for 4 s, then hold still against a push.
        let (tau, c) = if k <= 4000 { (&zero, &cmd) } else { (&push, &zero) };
        st = step_closed_robot(&st, &gains, &model, tau, c, dt)?;
        if k % 1000 == 0 {
            println!(
                "t = {:.1} s  q = ({:+.4}, {:+.4})  q̇ = ({:+.4}, {:+.4})  q − q_c = ({:+.2e}, {:+.2e})",
                k as f64 * dt,
                st.q[0],
                st.q[1],
                st.qd[0],
                st.qd[1],
                st.q[0] - st.qc[0],
                st.q[1] - st.qc[1],
            );
        }
    }
    Ok(())
}
