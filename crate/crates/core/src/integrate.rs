//! Classical fixed-step fourth-order Runge–Kutta.

use nalgebra::DVector;

use crate::error::Result;

/// One RK4 step of ẋ = f(x) with all exogenous inputs held over the step.
pub fn rk4_step<F>(x: &DVector<f64>, dt: f64, mut f: F) -> Result<DVector<f64>>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    let k1 = f(x)?;
    let k2 = f(&(x + &k1 * (dt / 2.0)))?;
    let k3 = f(&(x + &k2 * (dt / 2.0)))?;
    let k4 = f(&(x + &k3 * dt))?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// Least-squares slope of log(err) against log(h).
pub fn observed_order(steps: &[f64], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
