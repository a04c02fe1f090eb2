//! Cost of crossing a length-ell segment by a chain of small nuclei.
//!
//! A string of N lens-shaped seeds is nucleated along a segment and grown
//! until the covered region spans it; as N grows the optimal cost approaches
//! 2 tau ell (the segment is swept twice by interface) while the cost of the
//! initial nucleation event itself vanishes.

use sharpflow::coefficients::compute_kac_bundle;
use sharpflow::geometry::nucleation_path;
use sharpflow::instanton::{solve_decay_rate, solve_instanton_kac};
use sharpflow::kernels::{make_kernel, KernelFamily};
use sharpflow::models::{KacModel, RateFamily};

fn main() -> sharpflow::Result<()> {
    let kernel = make_kernel(KernelFamily::AnnularBump { scale: 1.0 }, 2, true, true)?;
    let model = KacModel::new(2.0, kernel, RateFamily::StandardCosh)?;
    let inst = solve_instanton_kac(&model, 30.0, 1.0 / 64.0)?;
    let alpha = solve_decay_rate(&model)?;
    let co = compute_kac_bundle(&model, &inst, alpha.alpha)?.coeffs;

    let ell = 0.5;
    println!("segment length ell = {ell}, target cost 2 tau ell = {:.6}", 2.0 * co.tau * ell);
    for n_delta in [8usize, 16, 32] {
        let m_delta = ell / (10.0 * n_delta as f64);
        let (_, rep) = nucleation_path(ell, n_delta, m_delta, co.theta, co.mu, co.tau)?;
        println!(
            "  N = {n_delta}: cost {:.6} (ratio {:.4}), nucleation cost {:.3e} <= bound {:.3e}",
            rep.cost, rep.ratio, rep.sigma_delta, rep.sigma_bound
        );
    }
    Ok(())
}
