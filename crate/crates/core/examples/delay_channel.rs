//! Piecewise-constant random delays and the delay line that replays a
//! signal as it looked T seconds ago.

use telesim::channel::{DelayLine, DelayProfile};
use telesim::dynamics::joint_vec;

fn main() -> telesim::Result<()> {
    let profile = DelayProfile::piecewise_uniform(0.3, 0.9, 0.096, 42);
    let dt = 1e-3;
    let mut line = DelayLine::for_delay(profile.max_delay());
    let mut last = f64::NAN;
    for k in 0..=3000 {
        let t = k as f64 * dt;
        line.push(t, joint_vec(&[t.sin(), t.cos()]))?;
        let delay = profile.delay_at(t);
        if delay != last {
            let seen = line.sample_delayed(t, delay)?;
            if k < 1000 {
                println!(
                    "t = {t:.3} s  T = {delay:.3} s  delayed sin = {:+.4} (sin(t − T) = {:+.4})",
                    seen[0],
                    (t - delay).max(0.0).sin()
                );
            }
            last = delay;
        }
    }
    println!(
        "line holds {} samples over a {:.2} s horizon",
        line.len(),
        line.horizon()
    );
    Ok(())
}
