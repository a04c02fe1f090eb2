//! Curvature-driven shrinking of a 2-d droplet for both processes.
//!
//! Seeds a circular droplet on the unit torus and evolves the deterministic
//! hydrodynamic equations. The enclosed area must follow the curvature law:
//! R^2 = R0^2 - 2 theta t for the spin model and R^2 = R0^2 - t (theta = 1/2,
//! mobility absorbed in the parabolic scaling) for the reaction-diffusion
//! model.

use sharpflow::coefficients::compute_kac_bundle;
use sharpflow::dynamics::{evolve_nonlocal_torus, evolve_rd_torus, radius_from_area};
use sharpflow::grid::Field2;
use sharpflow::instanton::{solve_decay_rate, solve_instanton_gk, solve_instanton_kac};
use sharpflow::kernels::{make_kernel, KernelFamily};
use sharpflow::models::{make_reaction_pair, KacModel, RateFamily, ReactionSpec};

fn main() -> sharpflow::Result<()> {
    let eps = 0.05f64;
    let r0: f64 = 0.3;
    let n = ((8.0 / eps).ceil() as usize).max(96);

    let kernel = make_kernel(KernelFamily::AnnularBump { scale: 1.0 }, 2, true, true)?;
    let model = KacModel::new(2.0, kernel, RateFamily::StandardCosh)?;
    let inst = solve_instanton_kac(&model, 30.0, 1.0 / 64.0)?;
    let alpha = solve_decay_rate(&model)?;
    let theta = compute_kac_bundle(&model, &inst, alpha.alpha)?.coeffs.theta;
    let f0 = Field2::from_fn(n, |x, y| {
        let d = r0 - ((x - 0.5f64).powi(2) + (y - 0.5f64).powi(2)).sqrt();
        inst.profile.eval(d / eps)
    });
    let t_half = 0.5 * r0 * r0 / (2.0 * theta);
    let traj = evolve_nonlocal_torus(&model, &f0, eps, t_half, 6)?;
    println!("spin droplet (eps = {eps}, theta = {theta:.6}):");
    for (t, f) in traj.times.iter().zip(&traj.fields) {
        let r = radius_from_area(f, 0.0);
        let pred = (r0 * r0 - 2.0 * theta * t).max(0.0).sqrt();
        println!("  t = {t:.4}: radius {r:.4} vs {pred:.4} (rel {:+.2}%)", 100.0 * (r - pred) / r0);
    }

    let pair = make_reaction_pair(&ReactionSpec::SymmetricCubic { r: 0.25 })?;
    let gk = solve_instanton_gk(&pair, 60.0, 1.0 / 128.0)?;
    let f0 = Field2::from_fn(n, |x, y| {
        let d = r0 - ((x - 0.5f64).powi(2) + (y - 0.5f64).powi(2)).sqrt();
        gk.profile.eval(d / eps)
    });
    let traj = evolve_rd_torus(&pair, &f0, eps, 0.5 * r0 * r0, 6)?;
    println!("\nreaction-diffusion droplet (eps = {eps}):");
    for (t, f) in traj.times.iter().zip(&traj.fields) {
        let r = radius_from_area(f, pair.rho_mid);
        let pred = (r0 * r0 - t).max(0.0).sqrt();
        println!("  t = {t:.4}: radius {r:.4} vs {pred:.4} (rel {:+.2}%)", 100.0 * (r - pred) / r0);
    }
    Ok(())
}
