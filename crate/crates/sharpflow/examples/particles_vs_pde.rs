//! Microscopic particle systems against their hydrodynamic limits.
//!
//! Runs kinetic Monte Carlo for the spin chain with long-range coupling and
//! for the reaction lattice gas with diffusively accelerated exchanges, then
//! compares block-averaged profiles with the corresponding deterministic
//! equations on a ring. The block L1 distance shrinks as the lattice grows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sharpflow::dynamics::{
    bistable_local_rate, coarse_grain, derive_bd, evolve_nonlocal_ring, evolve_rd_ring, l1_error,
    simulate_glauber_kac, simulate_gk,
};
use sharpflow::kernels::{make_kernel, KernelFamily};
use sharpflow::models::{make_reaction_pair, KacModel, RateFamily, ReactionSpec};

fn main() -> sharpflow::Result<()> {
    let (t_end, blocks, seed) = (0.5, 32, 1u64);

    let kernel = make_kernel(KernelFamily::AnnularBump { scale: 1.0 }, 1, true, true)?;
    let model = KacModel::new(2.0, kernel, RateFamily::StandardCosh)?;
    let mb = model.magnetization();
    let m0 = |x: f64| 0.9 * mb * (std::f64::consts::TAU * x).cos();
    let pde0: Vec<f64> = (0..512).map(|i| m0((i as f64 + 0.5) / 512.0)).collect();
    let pde = evolve_nonlocal_ring(&model, &pde0, t_end, 2)?;
    println!("spin chain vs nonlocal flow at t = {t_end}:");
    for n in [256usize, 512] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
        let init: Vec<i8> = (0..n)
            .map(|i| {
                let p = 0.5 * (1.0 + m0((i as f64 + 0.5) / n as f64));
                if rng.gen::<f64>() < p { 1 } else { -1 }
            })
            .collect();
        let traj = simulate_glauber_kac(&model, &init, t_end, 2, seed)?;
        let lat: Vec<f64> = traj.spins.last().unwrap().iter().map(|&s| s as f64).collect();
        let l1 = l1_error(
            &coarse_grain(&lat, blocks),
            &coarse_grain(pde.states.last().unwrap(), blocks),
        );
        println!("  n = {n}: block L1 = {l1:.5} ({} flips)", traj.events);
    }

    let rate = bistable_local_rate();
    let (b, d) = derive_bd(&rate);
    let pair = make_reaction_pair(&ReactionSpec::Explicit { birth: b, death: d })?;
    let u0 = |x: f64| 0.5 + 0.35 * (std::f64::consts::TAU * x).sin();
    let pde0: Vec<f64> = (0..512).map(|i| u0((i as f64 + 0.5) / 512.0)).collect();
    let pde = evolve_rd_ring(&pair, &pde0, t_end, 2)?;
    println!("\nreaction lattice gas vs reaction-diffusion flow at t = {t_end}:");
    for n in [256usize, 512] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51f1);
        let init: Vec<u8> = (0..n)
            .map(|i| u8::from(rng.gen::<f64>() < u0((i as f64 + 0.5) / n as f64)))
            .collect();
        let traj = simulate_gk(&rate, &init, t_end, 2, seed, true)?;
        let lat: Vec<f64> = traj.occupations.last().unwrap().iter().map(|&s| s as f64).collect();
        let l1 = l1_error(
            &coarse_grain(&lat, blocks),
            &coarse_grain(pde.states.last().unwrap(), blocks),
        );
        println!(
            "  n = {n}: block L1 = {l1:.5} ({} flips, {} exchanges)",
            traj.events_glauber, traj.events_kawasaki
        );
    }
    Ok(())
}
