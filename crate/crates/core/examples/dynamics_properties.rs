//! Inertia, Coriolis and gravity of the canonical arm at one pose, and the
//! two structural identities the controllers rely on.

use telesim::dynamics::{joint_vec, regressor, ArmModel};

fn main() -> telesim::Result<()> {
    let model = ArmModel::canonical().with_gravity(9.81);
    let q = joint_vec(&[0.4, -0.7]);
    let qd = joint_vec(&[0.8, 0.3]);
    let m = model.mass_matrix(&q)?;
    let c = model.coriolis_matrix(&q, &qd)?;
    println!("M(q) = {m}C(q, q̇) = {c}g(q) = {}", model.gravity_vector(&q)?);
    println!("λ_min(M(q)) = {:.6}", model.min_inertia_eigenvalue(&q)?);

    // Ṁ by a central difference along q̇; Ṁ − 2C must be skew.
    let h = 1e-6;
    let m_dot = (model.mass_matrix(&(&q + &qd * h))? - model.mass_matrix(&(&q - &qd * h))?) / (2.0 * h);
    let n = m_dot - &c * 2.0;
    println!("Ṁ − 2C = {n}(N + Nᵀ)∞ = {:.2e}", (&n + n.transpose()).amax());

    let zeta = joint_vec(&[0.2, -0.1]);
    let zeta_dot = joint_vec(&[1.5, 0.5]);
    let lhs = regressor(&q, &qd, &zeta, &zeta_dot)? * model.params().theta;
    let rhs = m * &zeta_dot + c * &zeta + model.gravity_vector(&q)?;
    println!("‖Yϑ − (Mζ̇ + Cζ + g)‖∞ = {:.2e}", (lhs - rhs).amax());
    Ok(())
}
