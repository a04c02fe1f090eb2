//! Standing-front solvers: the nonlocal fixed-point front for the spin model
//! and the bistable ODE front for the reaction-diffusion model, with their
//! exponential decay rates.

use crate::error::{Error, Result};
use crate::grid::{fit_line, integrate_refined, Profile};
use crate::kernels::{convolve_line, reduce_1d, Kernel1D, Kernel1DKind};
use crate::models::{KacModel, ReactionPair};

/// Standing front of the nonlocal spin model: odd monotone solution of
/// `m = tanh(beta J~ * m)` connecting `-m_beta` to `m_beta`.
#[derive(Debug, Clone)]
pub struct InstantonKac {
    pub profile: Profile,
    pub derivative: Profile,
    pub jtilde: Kernel1D,
    pub m_beta: f64,
    /// Sup-norm of `m - tanh(beta J~ * m)` at the returned iterate.
    pub residual: f64,
    pub iterations: usize,
}

/// Solve the nonlocal front equation on `[-cutoff, cutoff]` at grid `spacing`.
pub fn solve_instanton_kac(model: &KacModel, cutoff: f64, spacing: f64) -> Result<InstantonKac> {
    let jtilde = reduce_1d(&model.kernel, spacing, Kernel1DKind::Jtilde);
    if cutoff < 4.0 * model.kernel.support_radius() {
        return Err(Error::InvalidParameter(format!(
            "cutoff {cutoff} too small relative to interaction range"
        )));
    }
    let m_beta = model.magnetization();
    let beta = model.beta;
    let mut m = Profile::from_fn(cutoff, spacing, -m_beta, m_beta, |x| m_beta * x.tanh());
    let mut residual;
    let mut iterations = 0;
    for it in 0..5000 {
        iterations = it + 1;
        let conv = convolve_line(&jtilde, &m)?;
        let next = conv.map(|s| (beta * s).tanh());
        // Antisymmetrize to pin the front at the origin and remove the
        // neutral translation mode from the iteration.
        let n = next.len();
        let mut vals = next.values.clone();
        for i in 0..n {
            let anti = 0.5 * (next.values[i] - next.values[n - 1 - i]);
            vals[i] = anti;
        }
        residual = vals
            .iter()
            .zip(&m.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        m.values = vals;
        if residual < 1e-12 {
            break;
        }
    }
    // Residual of the returned iterate against the exact map.
    let conv = convolve_line(&jtilde, &m)?;
    let final_residual = m
        .values
        .iter()
        .zip(&conv.values)
        .map(|(&mi, &s)| (mi - (beta * s).tanh()).abs())
        .fold(0.0, f64::max);
    if final_residual > 1e-8 {
        return Err(Error::NonConvergence(format!(
            "front iteration stalled with residual {final_residual:.3e} after {iterations} sweeps"
        )));
    }
    let derivative = m.derivative();
    Ok(InstantonKac {
        profile: m,
        derivative,
        jtilde,
        m_beta,
        residual: final_residual,
        iterations,
    })
}

impl InstantonKac {
    /// Sup-norm of the odd-symmetry defect `m(xi) + m(-xi)`.
    pub fn oddness_defect(&self) -> f64 {
        let n = self.profile.len();
        (0..n)
            .map(|i| (self.profile.values[i] + self.profile.values[n - 1 - i]).abs())
            .fold(0.0, f64::max)
    }
}

/// Exponential decay rate of the front tails: the unique positive root of
/// `beta (1 - m_beta^2) \int J~(xi) e^{-alpha xi} d xi = 1`.
pub fn solve_decay_rate(model: &KacModel) -> Result<DecayRate> {
    let m_beta = model.magnetization();
    let p = model.beta * (1.0 - m_beta * m_beta);
    if p >= 1.0 {
        return Err(Error::ModelValidation(format!(
            "linearization constant p = {p} must be below 1"
        )));
    }
    let r = model.kernel.support_radius();
    // The kernel is even, so the Laplace transform reduces to a cosh moment.
    let laplace = |alpha: f64| -> Result<f64> {
        Ok(2.0 * integrate_refined(
            |xi| model.kernel.reduce_at(xi) * (alpha * xi).cosh(),
            0.0,
            r,
            1e-13,
        )?)
    };
    let g = |alpha: f64| -> Result<f64> { Ok(p * laplace(alpha)? - 1.0) };
    let mut hi = 1.0;
    while g(hi)? < 0.0 {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::NonConvergence("decay-rate bracket blew up".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * hi.max(1.0) {
            break;
        }
    }
    let alpha = 0.5 * (lo + hi);
    let residual = g(alpha)?.abs();
    if residual > 1e-10 {
        return Err(Error::NonConvergence(format!(
            "decay-rate residual {residual:.3e}"
        )));
    }
    Ok(DecayRate { alpha, residual })
}

/// Root and residual of the decay-rate characteristic equation.
#[derive(Debug, Clone, Copy)]
pub struct DecayRate {
    pub alpha: f64,
    pub residual: f64,
}

/// Fit the empirical tail decay rate of a front by log-linear regression on
/// the window where the gap to the asymptote is numerically resolvable.
/// Returns the fitted rate (positive for decaying tails).
pub fn fitted_tail_rate(profile: &Profile, limit: f64) -> Result<f64> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..profile.len() {
        let xi = profile.xi(i);
        if xi <= 0.5 {
            continue;
        }
        let gap = limit - profile.values[i];
        if gap > 1e-11 && gap < 1e-4 {
            xs.push(xi);
            ys.push(gap.ln());
        }
    }
    if xs.len() < 8 {
        return Err(Error::Numerical(
            "too few resolvable tail points for a rate fit".into(),
        ));
    }
    let (slope, _) = fit_line(&xs, &ys);
    Ok(-slope)
}

/// Standing front of the reaction-diffusion model with balanced wells:
/// `u'' / 2 + f(u) = 0` written as `u' = 2 sqrt(W(u))`, `u(0)` at the
/// unstable middle zero.
#[derive(Debug, Clone)]
pub struct InstantonGk {
    pub profile: Profile,
    /// Analytic derivative `2 sqrt(W(u))` evaluated on the grid, so the first
    /// integral `(u')^2 = 4 W(u)` holds to rounding on the stored data.
    pub derivative: Profile,
    pub rho_minus: f64,
    pub rho_plus: f64,
}

/// Integrate the front ODE by classical fourth-order Runge-Kutta in both
/// directions from the midpoint.
pub fn solve_instanton_gk(pair: &ReactionPair, cutoff: f64, spacing: f64) -> Result<InstantonGk> {
    if !pair.balanced() {
        return Err(Error::ModelValidation(
            "standing front requires wells of equal potential".into(),
        ));
    }
    let (lo, hi) = (pair.rho_minus, pair.rho_plus);
    let rhs = |u: f64| -> f64 {
        if u <= lo || u >= hi {
            0.0
        } else {
            2.0 * pair.w(u).max(0.0).sqrt()
        }
    };
    let half = (cutoff / spacing).round() as usize;
    let n = 2 * half + 1;
    let mut values = vec![0.0; n];
    values[half] = pair.rho_mid;
    // Forward sweep towards the upper well, backward towards the lower one.
    let mut u = pair.rho_mid;
    for i in half + 1..n {
        u = rk4_step(u, spacing, &rhs).clamp(lo, hi);
        values[i] = u;
    }
    let mut u = pair.rho_mid;
    for i in (0..half).rev() {
        u = rk4_step(u, -spacing, &rhs).clamp(lo, hi);
        values[i] = u;
    }
    let profile = Profile {
        cutoff: half as f64 * spacing,
        spacing,
        values,
        left_limit: lo,
        right_limit: hi,
    };
    let derivative = Profile {
        cutoff: profile.cutoff,
        spacing,
        values: profile.values.iter().map(|&u| rhs(u)).collect(),
        left_limit: 0.0,
        right_limit: 0.0,
    };
    Ok(InstantonGk {
        profile,
        derivative,
        rho_minus: lo,
        rho_plus: hi,
    })
}

fn rk4_step<F: Fn(f64) -> f64>(u: f64, h: f64, f: &F) -> f64 {
    let k1 = f(u);
    let k2 = f(u + 0.5 * h * k1);
    let k3 = f(u + 0.5 * h * k2);
    let k4 = f(u + h * k3);
    u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

impl InstantonGk {
    /// Squared L2 norm of the front derivative.
    pub fn derivative_norm_sq(&self) -> f64 {
        self.derivative.map(|v| v * v).integrate()
    }

    /// Sup-norm of the first-integral defect `(u')^2/4 - W(u)` against a pair.
    pub fn first_integral_defect(&self, pair: &ReactionPair) -> f64 {
        self.profile
            .values
            .iter()
            .zip(&self.derivative.values)
            .map(|(&u, &du)| (du * du / 4.0 - pair.w(u)).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{make_kernel, KernelFamily};
    use crate::models::{make_reaction_pair, RateFamily, ReactionSpec};

    fn model() -> KacModel {
        let k = make_kernel(KernelFamily::AnnularBump { scale: 1.0 }, 2, true, true).unwrap();
        KacModel::new(2.0, k, RateFamily::StandardCosh).unwrap()
    }

    #[test]
    fn kac_front_converges_and_is_odd() {
        let inst = solve_instanton_kac(&model(), 4.0, 1.0 / 32.0).unwrap();
        assert!(inst.residual < 1e-8, "residual = {:e}", inst.residual);
        assert!(inst.oddness_defect() < 1e-8);
        assert!((inst.profile.eval(4.0) - inst.m_beta).abs() < 1e-6);
        // Monotone increasing.
        for w in inst.profile.values.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn kac_decay_rate_matches_tail() {
        let m = model();
        let inst = solve_instanton_kac(&m, 6.0, 1.0 / 64.0).unwrap();
        let rate = solve_decay_rate(&m).unwrap();
        assert!(rate.residual < 1e-10);
        let fitted = fitted_tail_rate(&inst.profile, inst.m_beta).unwrap();
        let rel = (fitted - rate.alpha).abs() / rate.alpha;
        assert!(rel < 0.02, "alpha = {}, fitted = {fitted}", rate.alpha);
    }

    #[test]
    fn gk_front_matches_closed_form() {
        let pair = make_reaction_pair(&ReactionSpec::SymmetricCubic { r: 0.25 }).unwrap();
        let inst = solve_instanton_gk(&pair, 60.0, 1.0 / 128.0).unwrap();
        let r = 0.25;
        let mut sup = 0.0f64;
        for i in 0..inst.profile.len() {
            let xi = inst.profile.xi(i);
            let exact = 0.5 + r * (r * xi).tanh();
            sup = sup.max((inst.profile.values[i] - exact).abs());
        }
        assert!(sup < 1e-6, "sup error = {sup:e}");
        assert!((inst.derivative_norm_sq() - 1.0 / 48.0).abs() < 1e-8);
        assert!(inst.first_integral_defect(&pair) < 1e-8);
    }
}
