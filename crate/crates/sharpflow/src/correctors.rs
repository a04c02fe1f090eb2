//! First-order correctors for the sharp-interface expansions: the constrained
//! corrector of the spin model and the optimal test profile, corrector and
//! auxiliary field of the reaction-diffusion model.

use nalgebra::{DMatrix, DVector};

use crate::coefficients::{LinearOperatorDisc, OperatorMatrix};
use crate::error::{Error, Result};
use crate::grid::Profile;
use crate::instanton::{InstantonGk, InstantonKac};
use crate::models::KacModel;

/// Right-hand-side bundle for the spin-model corrector equation.
#[derive(Debug, Clone)]
pub struct HhatBundle {
    /// Second-moment smoothing of the front derivative.
    pub f: Profile,
    /// `H = beta 2 a sqrt(1-m^2) f`.
    pub h: Profile,
    /// Component of `H` orthogonal to the front derivative.
    pub h_hat: Profile,
    /// Exact discrete projection coefficient `<m', H>_nu / <m', m'>_nu`.
    pub theta_star: f64,
}

/// Build `f`, `H` and the orthogonal component `Ĥ = H - theta* m'`.
///
/// The smoothing integral is evaluated by composite Simpson with analytically
/// reduced kernel values, deliberately independent of the trapezoid
/// convolution used for the surface tension.
pub fn build_h_hat(
    model: &KacModel,
    inst: &InstantonKac,
    mprime: &Profile,
) -> Result<HhatBundle> {
    let h = mprime.spacing;
    let n = mprime.len();
    let support = model.kernel.support_radius();
    let half = (support / h).ceil() as isize;
    let m2: Vec<f64> = (-half..=half)
        .map(|dm| model.kernel.second_moment_at(dm as f64 * h))
        .collect::<Result<_>>()?;
    // Composite Simpson over the kernel window (odd sample count by
    // construction); the integrand vanishes at both window ends.
    let mut simpson = vec![0.0; (2 * half + 1) as usize];
    for (k, w) in simpson.iter_mut().enumerate() {
        *w = if k == 0 || k == 2 * half as usize {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        } * h
            / 3.0;
    }
    let mut f = Profile {
        cutoff: mprime.cutoff,
        spacing: h,
        values: vec![0.0; n],
        left_limit: 0.0,
        right_limit: 0.0,
    };
    for i in 0..n {
        let mut s = 0.0;
        for dm in -half..=half {
            s += simpson[(dm + half) as usize]
                * m2[(dm + half) as usize]
                * mprime.at(i as isize - dm);
        }
        f.values[i] = s;
    }
    let abar = crate::coefficients::rate_profile(model, inst)?;
    let beta = model.beta;
    let weight = inst
        .profile
        .zip(&abar, |m, a| 2.0 * a * (1.0 - m * m).sqrt())?;
    let h_prof = weight.zip(&f, |w, fv| beta * w * fv)?;
    // nu-weighted projection onto the derivative direction.
    let nu = weight.map(|w| 1.0 / w);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        num += nu.values[i] * mprime.values[i] * h_prof.values[i];
        den += nu.values[i] * mprime.values[i] * mprime.values[i];
    }
    let theta_star = num / den;
    let h_hat = h_prof.zip(mprime, |hv, mp| hv - theta_star * mp)?;
    Ok(HhatBundle {
        f,
        h: h_prof,
        h_hat,
        theta_star,
    })
}

/// Solved spin-model corrector with its diagnostics.
#[derive(Debug, Clone)]
pub struct KacCorrector {
    /// The corrector itself, pinned to zero at the origin.
    pub q_bar: Profile,
    /// The solved product `m' Q̄` (the actual unknown of the linear system).
    pub psi: Profile,
    /// Weighted residual of `L(m' Q̄) = Ĥ` after pinning.
    pub residual: f64,
    /// Lagrange multiplier of the deflation constraint (consistency gauge).
    pub multiplier: f64,
    /// sup over the half-window of `(|Q̄| + |Q̄'|)/(1 + |xi|)`.
    pub growth: f64,
}

/// Solve `L (m' Q̄) = Ĥ` by a bordered (deflated) dense solve: the singular
/// direction `m'` is pinned by the constraint `<m', psi>_nu = 0`, then the
/// free additive multiple of `m'` is fixed by `Q̄(0) = 0`.
pub fn solve_corrector_kac(
    op: &LinearOperatorDisc,
    mprime: &Profile,
    h_hat: &Profile,
) -> Result<KacCorrector> {
    let a = match &op.matrix {
        OperatorMatrix::Dense(a) => a,
        OperatorMatrix::Tridiag { .. } => {
            return Err(Error::Numerical(
                "spin-model corrector requires the dense operator".into(),
            ))
        }
    };
    let n = op.len();
    if mprime.len() != n || h_hat.len() != n {
        return Err(Error::IncompatibleGrids(
            "operator and profiles differ in size".into(),
        ));
    }
    let mut big = DMatrix::zeros(n + 1, n + 1);
    big.view_mut((0, 0), (n, n)).copy_from(a);
    for i in 0..n {
        big[(i, n)] = mprime.values[i];
        big[(n, i)] = op.spacing * op.nu[i] * mprime.values[i];
    }
    let mut rhs = DVector::zeros(n + 1);
    for i in 0..n {
        rhs[i] = h_hat.values[i];
    }
    let sol = big
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("bordered corrector solve failed".into()))?;
    let mut psi: Vec<f64> = sol.iter().take(n).copied().collect();
    let multiplier = sol[n];

    // Division by the derivative, restricted to where it is resolvable.
    let max_dp = mprime.values.iter().cloned().fold(0.0, f64::max);
    let floor = 1e-10 * max_dp;
    let mid = n / 2;
    let mut q = vec![0.0; n];
    let mut lo = 0;
    let mut hi = n - 1;
    while lo < mid && mprime.values[lo] <= floor {
        lo += 1;
    }
    while hi > mid && mprime.values[hi] <= floor {
        hi -= 1;
    }
    for i in lo..=hi {
        q[i] = psi[i] / mprime.values[i];
    }
    // Pin the corrector at the origin by removing a multiple of the kernel
    // direction (which leaves the residual unchanged).
    let q0 = q[mid];
    for i in lo..=hi {
        q[i] -= q0;
    }
    for (p, dp) in psi.iter_mut().zip(&mprime.values) {
        *p -= q0 * dp;
    }
    // Linear extension outside the resolvable window.
    if lo > 0 {
        let slope = (q[lo + 1] - q[lo]) / mprime.spacing;
        for i in 0..lo {
            q[i] = q[lo] - slope * (lo - i) as f64 * mprime.spacing;
        }
    }
    if hi < n - 1 {
        let slope = (q[hi] - q[hi - 1]) / mprime.spacing;
        for i in hi + 1..n {
            q[i] = q[hi] + slope * (i - hi) as f64 * mprime.spacing;
        }
    }
    let q_bar = Profile {
        cutoff: mprime.cutoff,
        spacing: mprime.spacing,
        values: q,
        left_limit: 0.0,
        right_limit: 0.0,
    };
    let res_vec: Vec<f64> = op
        .apply(&psi)
        .iter()
        .zip(&h_hat.values)
        .map(|(a, b)| a - b)
        .collect();
    let residual = op.norm(&res_vec);
    let growth = growth_bound(&q_bar);
    Ok(KacCorrector {
        psi: Profile {
            cutoff: mprime.cutoff,
            spacing: mprime.spacing,
            values: psi,
            left_limit: 0.0,
            right_limit: 0.0,
        },
        q_bar,
        residual,
        multiplier,
        growth,
    })
}

/// sup of `(|Q| + |Q'|)/(1+|xi|)` over the inner half of the grid.
pub fn growth_bound(q: &Profile) -> f64 {
    let dq = q.derivative();
    let mut sup = 0.0f64;
    for i in 0..q.len() {
        let xi = q.xi(i);
        if xi.abs() > q.cutoff / 2.0 {
            continue;
        }
        sup = sup.max((q.values[i].abs() + dq.values[i].abs()) / (1.0 + xi.abs()));
    }
    sup
}

/// Optimal test profile of the reaction-diffusion variational problem:
/// `psi = u' - (||u'||^2 / <u', (-L)u'>) L u'`, orthogonal to `u'`.
pub fn optimal_psi_gk(inst: &InstantonGk, op: &LinearOperatorDisc) -> Profile {
    let du = &inst.derivative;
    let ldu = op.apply(&du.values);
    let norm_sq = op.inner(&du.values, &du.values);
    let num = -op.inner(&du.values, &ldu);
    let c = norm_sq / num;
    Profile {
        cutoff: du.cutoff,
        spacing: du.spacing,
        values: du
            .values
            .iter()
            .zip(&ldu)
            .map(|(&d, &l)| d + c * l)
            .collect(),
        left_limit: 0.0,
        right_limit: 0.0,
    }
}

/// Quadratic cost of the optimal test profile,
/// `C* = (1/2) <u' - psi, (-L)^{-1} (u' - psi)>`, via an actual solve.
pub fn c_star_gk(inst: &InstantonGk, op: &LinearOperatorDisc, psi: &Profile) -> Result<f64> {
    let diff: Vec<f64> = inst
        .derivative
        .values
        .iter()
        .zip(&psi.values)
        .map(|(&a, &b)| a - b)
        .collect();
    let sol = op.solve(&diff)?; // L x = diff, so (-L)^{-1} diff = -x
    Ok(-0.5 * op.inner(&diff, &sol))
}

/// Reaction-diffusion corrector with the derivative data needed downstream.
#[derive(Debug, Clone)]
pub struct GkCorrector {
    pub q_bar: Profile,
    /// First derivative from the closed-form inner integral (not a stencil).
    pub q_prime: Profile,
    /// Second derivative by one discrete differentiation of `q_prime`.
    pub q_second: Profile,
    /// sup residual of `u'' Q' + (1/2) u' Q'' = psi` over the inner window.
    pub residual: f64,
}

/// Closed-form corrector: `Q(xi) = 2 \int_0^xi (1/u'^2) \int_{-inf}^{xi'} u' psi`.
pub fn solve_corrector_gk(
    inst: &InstantonGk,
    op: &LinearOperatorDisc,
    psi: &Profile,
    ubar_second: &Profile,
) -> Result<GkCorrector> {
    let du = &inst.derivative;
    let n = du.len();
    let h = du.spacing;
    let ortho = op.inner(&du.values, &psi.values);
    let scale = op.norm(&du.values) * op.norm(&psi.values).max(1e-300);
    if ortho.abs() > 1e-6 * scale.max(1e-300) {
        return Err(Error::InvalidParameter(format!(
            "test profile not orthogonal to the front derivative (defect {ortho:e})"
        )));
    }
    // Inner cumulative integral of u' psi. Since the total integral vanishes
    // by orthogonality, accumulate each half from its own end of the grid;
    // this keeps full relative accuracy where the integrand has decayed.
    let mid = n / 2;
    let f: Vec<f64> = du
        .values
        .iter()
        .zip(&psi.values)
        .map(|(&a, &b)| a * b)
        .collect();
    let mut inner = vec![0.0; n];
    for i in 1..=mid {
        inner[i] = inner[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
    }
    inner[n - 1] = -0.5 * h * f[n - 1];
    for i in (mid + 1..n - 1).rev() {
        inner[i] = inner[i + 1] - 0.5 * h * (f[i] + f[i + 1]);
    }
    // Core window: where the front derivative is resolvable relative to its
    // peak. Beyond it the quotient 2*inner/u'^2 amplifies the discretization
    // noise carried by psi's far tail, so Q' is extended as a constant.
    let max_dp = du.values.iter().cloned().fold(0.0, f64::max);
    let floor = 1e-4 * max_dp;
    let mut lo = 0;
    let mut hi = n - 1;
    while lo < mid && du.values[lo] <= floor {
        lo += 1;
    }
    while hi > mid && du.values[hi] <= floor {
        hi -= 1;
    }
    let mut qp = vec![0.0; n];
    for i in lo..=hi {
        qp[i] = 2.0 * inner[i] / (du.values[i] * du.values[i]);
    }
    for i in 0..lo {
        qp[i] = qp[lo];
    }
    for i in hi + 1..n {
        qp[i] = qp[hi];
    }
    // Outer cumulative integral from the origin in both directions.
    let mut q = vec![0.0; n];
    for i in mid + 1..n {
        q[i] = q[i - 1] + 0.5 * h * (qp[i - 1] + qp[i]);
    }
    for i in (0..mid).rev() {
        q[i] = q[i + 1] - 0.5 * h * (qp[i] + qp[i + 1]);
    }
    let q_prime = Profile {
        cutoff: du.cutoff,
        spacing: h,
        values: qp,
        left_limit: 0.0,
        right_limit: 0.0,
    };
    let q_second = q_prime.derivative4();
    let q_bar = Profile {
        cutoff: du.cutoff,
        spacing: h,
        values: q,
        left_limit: 0.0,
        right_limit: 0.0,
    };
    // Substitution check over the core window (away from the constant
    // extension, where the stencil for Q'' needs a margin of valid points).
    let mut residual = 0.0f64;
    for i in lo + 2..=hi.saturating_sub(2).min(n - 1) {
        let lhs = ubar_second.values[i] * q_prime.values[i]
            + 0.5 * du.values[i] * q_second.values[i];
        residual = residual.max((lhs - psi.values[i]).abs());
    }
    Ok(GkCorrector {
        q_bar,
        q_prime,
        q_second,
        residual,
    })
}

/// Auxiliary field of the second-order expansion: solve
/// `L h = -u' + u'' Q' + (1/2) u' Q''`.
pub struct GkAuxField {
    pub h: Profile,
    pub residual: f64,
    /// Relative distance of `h` from the span of `u'`.
    pub alignment_defect: f64,
}

pub fn solve_h_gk(
    inst: &InstantonGk,
    op: &LinearOperatorDisc,
    corr: &GkCorrector,
    ubar_second: &Profile,
) -> Result<GkAuxField> {
    let du = &inst.derivative;
    let n = du.len();
    let rhs: Vec<f64> = (0..n)
        .map(|i| {
            -du.values[i]
                + ubar_second.values[i] * corr.q_prime.values[i]
                + 0.5 * du.values[i] * corr.q_second.values[i]
        })
        .collect();
    let h = op.solve(&rhs)?;
    let res_vec: Vec<f64> = op
        .apply(&h)
        .iter()
        .zip(&rhs)
        .map(|(a, b)| a - b)
        .collect();
    let residual = op.norm(&res_vec);
    let proj = op.inner(&h, &du.values) / op.inner(&du.values, &du.values);
    let orth: Vec<f64> = h
        .iter()
        .zip(&du.values)
        .map(|(&hv, &d)| hv - proj * d)
        .collect();
    let alignment_defect = op.norm(&orth) / op.norm(&h).max(1e-300);
    Ok(GkAuxField {
        h: Profile {
            cutoff: du.cutoff,
            spacing: du.spacing,
            values: h,
            left_limit: 0.0,
            right_limit: 0.0,
        },
        residual,
        alignment_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{assemble_l_gk, assemble_l_kac, compute_kac_bundle, mobility_gk};
    use crate::instanton::{solve_decay_rate, solve_instanton_gk, solve_instanton_kac};
    use crate::kernels::{make_kernel, KernelFamily};
    use crate::models::{make_reaction_pair, KacModel, RateFamily, ReactionSpec};

    fn model() -> KacModel {
        let k = make_kernel(KernelFamily::AnnularBump { scale: 1.0 }, 2, true, true).unwrap();
        KacModel::new(2.0, k, RateFamily::StandardCosh).unwrap()
    }

    #[test]
    fn kac_corrector_pipeline() {
        let m = model();
        let inst = solve_instanton_kac(&m, 4.0, 1.0 / 64.0).unwrap();
        let alpha = solve_decay_rate(&m).unwrap().alpha;
        let bundle = compute_kac_bundle(&m, &inst, alpha).unwrap();
        let hb = build_h_hat(&m, &inst, &bundle.mprime).unwrap();

        // Projection identity against the stored transport coefficient.
        let rel = (hb.theta_star - bundle.coeffs.theta).abs() / bundle.coeffs.theta;
        assert!(rel < 1e-6, "theta* = {}, theta = {}", hb.theta_star, bundle.coeffs.theta);

        // Orthogonality of the right-hand side.
        let mut dot = 0.0;
        for i in 0..bundle.op.len() {
            dot += bundle.op.spacing
                * bundle.op.nu[i]
                * bundle.mprime.values[i]
                * hb.h_hat.values[i];
        }
        assert!(dot.abs() < 1e-8, "<m', H_hat>_nu = {dot:e}");

        // Independent quadrature reproduces the surface tension.
        let tau_f = bundle.mprime.zip(&hb.f, |a, b| a * b).unwrap().integrate();
        assert!((tau_f - bundle.coeffs.tau).abs() < 1e-8);

        let corr = solve_corrector_kac(&bundle.op, &bundle.mprime, &hb.h_hat).unwrap();
        assert!(corr.residual < 1e-7, "residual = {:e}", corr.residual);
        assert_eq!(corr.q_bar.values[corr.q_bar.mid()], 0.0);
        assert!(corr.growth.is_finite());

        // Evenness of f and H_hat, evenness of Q̄.
        let n = hb.f.len();
        for i in 0..n {
            assert!((hb.f.values[i] - hb.f.values[n - 1 - i]).abs() < 1e-9);
            assert!((hb.h_hat.values[i] - hb.h_hat.values[n - 1 - i]).abs() < 1e-7);
        }
    }

    #[test]
    fn kac_corrector_zero_rhs() {
        let m = model();
        let inst = solve_instanton_kac(&m, 4.0, 1.0 / 64.0).unwrap();
        let alpha = solve_decay_rate(&m).unwrap().alpha;
        let bundle = compute_kac_bundle(&m, &inst, alpha).unwrap();
        let zero = bundle.mprime.map(|_| 0.0);
        let corr = solve_corrector_kac(&bundle.op, &bundle.mprime, &zero).unwrap();
        assert!(corr.q_bar.sup_norm() < 1e-10);
    }

    #[test]
    fn gk_corrector_pipeline() {
        let pair = make_reaction_pair(&ReactionSpec::SymmetricCubic { r: 0.25 }).unwrap();
        let inst = solve_instanton_gk(&pair, 60.0, 1.0 / 128.0).unwrap();
        let op = assemble_l_gk(&pair, &inst).unwrap();
        let (mu, _) = mobility_gk(&inst, &op);
        let psi = optimal_psi_gk(&inst, &op);
        let ortho = op.inner(&inst.derivative.values, &psi.values);
        assert!(ortho.abs() < 1e-8, "orthogonality defect {ortho:e}");
        let cstar = c_star_gk(&inst, &op, &psi).unwrap();
        assert!(
            (cstar * 4.0 * mu - 1.0).abs() < 1e-6,
            "C* 4 mu = {}",
            cstar * 4.0 * mu
        );
        // u'' = 2 W'(u) along the front.
        let ubar_second = inst.profile.map(|u| 2.0 * pair.w_prime(u));
        let corr = solve_corrector_gk(&inst, &op, &psi, &ubar_second).unwrap();
        assert!(corr.residual < 1e-6, "corrector residual {:e}", corr.residual);
        assert_eq!(corr.q_bar.values[corr.q_bar.mid()], 0.0);
        let aux = solve_h_gk(&inst, &op, &corr, &ubar_second).unwrap();
        assert!(aux.residual < 1e-7, "aux residual {:e}", aux.residual);
        assert!(
            aux.alignment_defect < 1e-5,
            "alignment defect {:e}",
            aux.alignment_defect
        );
        // Decay of the auxiliary field away from the front.
        let tail = aux.h.eval(30.0).abs();
        assert!(tail < 1e-4 * aux.h.sup_norm());
    }

    #[test]
    fn gk_zero_psi_gives_zero_corrector() {
        let pair = make_reaction_pair(&ReactionSpec::SymmetricCubic { r: 0.25 }).unwrap();
        let inst = solve_instanton_gk(&pair, 40.0, 1.0 / 64.0).unwrap();
        let op = assemble_l_gk(&pair, &inst).unwrap();
        let zero = inst.derivative.map(|_| 0.0);
        let ubar_second = inst.profile.map(|u| 2.0 * pair.w_prime(u));
        let corr = solve_corrector_gk(&inst, &op, &zero, &ubar_second).unwrap();
        assert!(corr.q_bar.sup_norm() < 1e-12);
    }
}
