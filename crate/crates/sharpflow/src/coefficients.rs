//! Linearized operators around the standing fronts and the scalar transport
//! data derived from them: surface tension (two routes), mobility and the
//! transport coefficient of the curvature flow.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::Profile;
use crate::instanton::{InstantonGk, InstantonKac};
use crate::kernels::{convolve_line, second_moment_kernel, Kernel1D};
use crate::models::{free_energy_density, KacModel, ReactionPair};

/// Discretized linear operator with the weight of its natural inner product.
#[derive(Debug, Clone)]
pub enum OperatorMatrix {
    Dense(DMatrix<f64>),
    Tridiag {
        sub: Vec<f64>,
        diag: Vec<f64>,
        sup: Vec<f64>,
    },
}

/// Operator matrix plus the sampled measure density of the inner product in
/// which it is symmetric (uniform Riemann weights over a symmetric grid).
#[derive(Debug, Clone)]
pub struct LinearOperatorDisc {
    pub matrix: OperatorMatrix,
    /// Density of the weighting measure at each node.
    pub nu: Vec<f64>,
    pub spacing: f64,
    pub cutoff: f64,
}

impl LinearOperatorDisc {
    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    pub fn apply(&self, psi: &[f64]) -> Vec<f64> {
        match &self.matrix {
            OperatorMatrix::Dense(a) => {
                let v = a * DVector::from_column_slice(psi);
                v.iter().copied().collect()
            }
            OperatorMatrix::Tridiag { sub, diag, sup } => {
                let n = diag.len();
                let mut out = vec![0.0; n];
                for i in 0..n {
                    let mut s = diag[i] * psi[i];
                    if i > 0 {
                        s += sub[i - 1] * psi[i - 1];
                    }
                    if i + 1 < n {
                        s += sup[i] * psi[i + 1];
                    }
                    out[i] = s;
                }
                out
            }
        }
    }

    /// Weighted inner product `h * sum nu_i u_i v_i`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.spacing
            * u.iter()
                .zip(v)
                .zip(&self.nu)
                .map(|((&a, &b), &w)| w * a * b)
                .sum::<f64>()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }

    /// Maximal defect `|<u, Lv> - <Lu, v>|` over random unit pairs.
    pub fn symmetry_defect<R: Rng>(&self, rng: &mut R, pairs: usize) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for _ in 0..pairs {
            let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let nu = self.norm(&u).max(1e-300);
            let nv = self.norm(&v).max(1e-300);
            let d = (self.inner(&u, &self.apply(&v)) - self.inner(&self.apply(&u), &v)).abs()
                / (nu * nv);
            worst = worst.max(d);
        }
        worst
    }

    /// Quadratic form `<psi, L psi>` (not normalized).
    pub fn quadratic_form(&self, psi: &[f64]) -> f64 {
        self.inner(psi, &self.apply(psi))
    }

    /// Direct linear solve `L psi = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match &self.matrix {
            OperatorMatrix::Dense(a) => {
                let lu = a.clone().lu();
                lu.solve(&DVector::from_column_slice(rhs))
                    .map(|v| v.iter().copied().collect())
                    .ok_or_else(|| Error::Numerical("singular dense solve".into()))
            }
            OperatorMatrix::Tridiag { sub, diag, sup } => {
                thomas_solve(sub, diag, sup, rhs)
            }
        }
    }

    /// Null vector of a dense operator by inverse iteration (the eigenvalue
    /// closest to zero is the isolated top of the spectrum here).
    pub fn null_vector(&self, start: &[f64]) -> Result<Vec<f64>> {
        let a = match &self.matrix {
            OperatorMatrix::Dense(a) => a,
            OperatorMatrix::Tridiag { .. } => {
                return Err(Error::Numerical(
                    "null vector extraction is only used for the dense operator".into(),
                ))
            }
        };
        let lu = a.clone().lu();
        let mut v = DVector::from_column_slice(start);
        v /= v.norm();
        for _ in 0..4 {
            let w = lu
                .solve(&v)
                .ok_or_else(|| Error::Numerical("inverse iteration solve failed".into()))?;
            v = &w / w.norm();
        }
        if v.iter().sum::<f64>() < 0.0 {
            v = -v;
        }
        Ok(v.iter().copied().collect())
    }

    /// All eigenvalues via the symmetrized form `D^{1/2} A D^{-1/2}`.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let a = match &self.matrix {
            OperatorMatrix::Dense(a) => a.clone(),
            OperatorMatrix::Tridiag { sub, diag, sup } => {
                let n = diag.len();
                let mut m = DMatrix::zeros(n, n);
                for i in 0..n {
                    m[(i, i)] = diag[i];
                    if i > 0 {
                        m[(i, i - 1)] = sub[i - 1];
                    }
                    if i + 1 < n {
                        m[(i, i + 1)] = sup[i];
                    }
                }
                m
            }
        };
        let n = self.len();
        let mut s = a;
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] *= (self.nu[i] / self.nu[j]).sqrt();
            }
        }
        // Enforce exact symmetry against rounding before the eigensolve.
        let sym = (&s + s.transpose()) * 0.5;
        let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(ev)
    }
}

fn thomas_solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom.abs() < 1e-300 {
        return Err(Error::Numerical("tridiagonal pivot breakdown".into()));
    }
    c[0] = sup.first().copied().unwrap_or(0.0) / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - sub[i - 1] * c[i - 1];
        if denom.abs() < 1e-300 {
            return Err(Error::Numerical("tridiagonal pivot breakdown".into()));
        }
        c[i] = if i + 1 < n { sup[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    Ok(x)
}

/// Scalar transport data for both models.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CoefficientSet {
    pub m_beta: f64,
    pub alpha: f64,
    pub tau: f64,
    pub tau_alt: f64,
    /// The kinetic normalization constant entering the mobility.
    pub big_n: f64,
    pub mu: f64,
    pub theta: f64,
    pub mu_gk: Option<f64>,
    pub tau_gk: Option<f64>,
    pub cutoff: f64,
    pub spacing: f64,
}

/// Two independent routes to the spin-model surface tension: the
/// second-moment double integral and the excess free-energy functional.
/// Uses plain central differences for the derivative, so the cross-route
/// defect shrinks at second order in the grid spacing.
pub fn surface_tension_kac(model: &KacModel, inst: &InstantonKac) -> Result<(f64, f64)> {
    if inst.residual > 1e-8 {
        return Err(Error::NonConvergence(format!(
            "front residual {:e} too large for surface-tension evaluation",
            inst.residual
        )));
    }
    let mprime = inst.profile.derivative();
    let m2 = second_moment_kernel(&model.kernel, inst.profile.spacing)?;
    let tau = tau_from_derivative(&m2, &mprime)?;

    // Route two: excess free energy of the front.
    let beta = model.beta;
    let f_min = free_energy_density(beta, inst.m_beta);
    let local = inst
        .profile
        .map(|m| free_energy_density(beta, m) - f_min)
        .integrate();
    let j = &inst.jtilde;
    let h = inst.profile.spacing;
    let half = j.half_count() as isize;
    let n = inst.profile.len() as isize;
    let mut pair_sum = 0.0;
    for i in 0..n {
        let mi = inst.profile.values[i as usize];
        for dm in -half..=half {
            let mj = inst.profile.at(i - dm);
            let d = mi - mj;
            pair_sum += j.at_index(dm) * d * d;
        }
    }
    let tau_alt = local + 0.25 * h * h * pair_sum;
    Ok((tau, tau_alt))
}

fn tau_from_derivative(m2: &Kernel1D, mprime: &Profile) -> Result<f64> {
    let conv = convolve_line(m2, mprime)?;
    Ok(mprime.zip(&conv, |a, b| a * b)?.integrate())
}

/// Rate profile `a(K~ * m)` along the front (the interaction doubles as the
/// rate kernel).
pub fn rate_profile(model: &KacModel, inst: &InstantonKac) -> Result<Profile> {
    let conv = convolve_line(&inst.jtilde, &inst.profile)?;
    Ok(conv.map(|s| model.rate_a(s)))
}

/// Mobility data `(N, mu)` from a given derivative sampling of the front.
pub fn mobility_kac(model: &KacModel, inst: &InstantonKac, mprime: &Profile) -> Result<(f64, f64)> {
    let abar = rate_profile(model, inst)?;
    let mut bad = false;
    let denom = mprime
        .zip(&inst.profile.zip(&abar, |m, a| {
            if a <= 0.0 {
                f64::NAN
            } else {
                2.0 * a * (1.0 - m * m).sqrt()
            }
        })?, |dp, w| {
            if w.is_nan() {
                f64::NAN
            } else {
                dp * dp / w
            }
        })?
        .integrate();
    if denom.is_nan() {
        bad = true;
    }
    if bad || !(denom > 0.0) {
        return Err(Error::Numerical(
            "vanishing rate along the front while computing the mobility".into(),
        ));
    }
    let big_n = 1.0 / denom;
    Ok((big_n, big_n * model.beta))
}

/// Dense discretization of the linearized operator
/// `L psi = (2 a / sqrt(1-m^2)) (-psi + (1-m^2) beta J~ * psi)`
/// in the inner product weighted by `nu = 1/(2 a sqrt(1-m^2))`.
pub fn assemble_l_kac(model: &KacModel, inst: &InstantonKac) -> Result<LinearOperatorDisc> {
    let abar = rate_profile(model, inst)?;
    let n = inst.profile.len();
    let h = inst.profile.spacing;
    let beta = model.beta;
    let j = &inst.jtilde;
    let half = j.half_count() as isize;
    let mut a = DMatrix::zeros(n, n);
    let mut nu = vec![0.0; n];
    for i in 0..n {
        let m = inst.profile.values[i];
        let om = 1.0 - m * m;
        let pre = 2.0 * abar.values[i] / om.sqrt();
        nu[i] = 1.0 / (2.0 * abar.values[i] * om.sqrt());
        a[(i, i)] = -pre;
        for dm in -half..=half {
            let jcol = i as isize - dm;
            if jcol < 0 || jcol >= n as isize {
                continue;
            }
            a[(i, jcol as usize)] += pre * om * beta * h * j.at_index(dm);
        }
    }
    Ok(LinearOperatorDisc {
        matrix: OperatorMatrix::Dense(a),
        nu,
        spacing: h,
        cutoff: inst.profile.cutoff,
    })
}

/// Operator-consistent front derivative: the null vector of the assembled
/// operator, normalized so its integral equals the total front jump `2 m_beta`.
/// This is the derivative sampling used by the corrector pipeline, where the
/// kernel identities must hold to solver precision rather than to the order
/// of a finite-difference stencil.
pub fn operator_derivative(op: &LinearOperatorDisc, inst: &InstantonKac) -> Result<Profile> {
    let start = inst.profile.derivative().values;
    let v = op.null_vector(&start)?;
    if v.iter().any(|&x| x < -1e-10) {
        return Err(Error::Numerical(
            "operator null vector is not positive; grid too coarse".into(),
        ));
    }
    let mut p = Profile {
        cutoff: inst.profile.cutoff,
        spacing: inst.profile.spacing,
        values: v,
        left_limit: 0.0,
        right_limit: 0.0,
    };
    let mass = p.integrate();
    let target = 2.0 * inst.m_beta;
    p = p.map(|x| x * target / mass);
    Ok(p)
}

/// Transport data of the spin model, computed on a consistent discrete basis
/// (same derivative sampling, same quadrature weights throughout).
pub struct KacBundle {
    pub op: LinearOperatorDisc,
    /// Operator-consistent derivative of the front.
    pub mprime: Profile,
    pub coeffs: CoefficientSet,
}

pub fn compute_kac_bundle(
    model: &KacModel,
    inst: &InstantonKac,
    alpha: f64,
) -> Result<KacBundle> {
    let op = assemble_l_kac(model, inst)?;
    let mprime = operator_derivative(&op, inst)?;
    let m2 = second_moment_kernel(&model.kernel, inst.profile.spacing)?;
    let tau = tau_from_derivative(&m2, &mprime)?;
    let (_, tau_alt) = surface_tension_kac(model, inst)?;
    let (big_n, mu) = mobility_kac(model, inst, &mprime)?;
    let coeffs = CoefficientSet {
        m_beta: inst.m_beta,
        alpha,
        tau,
        tau_alt,
        big_n,
        mu,
        theta: mu * tau,
        mu_gk: None,
        tau_gk: None,
        cutoff: inst.profile.cutoff,
        spacing: inst.profile.spacing,
    };
    Ok(KacBundle { op, mprime, coeffs })
}

/// Flux-form tridiagonal discretization of
/// `L_u psi = (u(1-u) psi')' - (B(u) + D(u)) psi`
/// with homogeneous Dirichlet conditions beyond the grid ends.
pub fn assemble_l_gk(pair: &ReactionPair, inst: &InstantonGk) -> Result<LinearOperatorDisc> {
    let u = &inst.profile;
    let n = u.len();
    let h = u.spacing;
    if u.values.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::ModelValidation(
            "front leaves the physical density range".into(),
        ));
    }
    let g: Vec<f64> = u.values.iter().map(|&x| x * (1.0 - x)).collect();
    let mut sub = vec![0.0; n - 1];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n - 1];
    for i in 0..n {
        let gl = if i > 0 { 0.5 * (g[i] + g[i - 1]) } else { g[i] };
        let gr = if i + 1 < n { 0.5 * (g[i] + g[i + 1]) } else { g[i] };
        let absorb = pair.birth.eval(u.values[i]) + pair.death.eval(u.values[i]);
        diag[i] = -(gl + gr) / (h * h) - absorb;
        if i > 0 {
            sub[i - 1] = gl / (h * h);
        }
        if i + 1 < n {
            sup[i] = gr / (h * h);
        }
    }
    Ok(LinearOperatorDisc {
        matrix: OperatorMatrix::Tridiag { sub, diag, sup },
        nu: vec![1.0; n],
        spacing: h,
        cutoff: u.cutoff,
    })
}

/// Mobility and surface tension of the reaction-diffusion model:
/// `mu = <u', (-L)u'> / (2 ||u'||^4)`, `tau = 1/(2 mu)`. The normalization is
/// fixed by the variational identity `C* = 1/(4 mu)` for the optimal test
/// profile, which ties the mobility to the quadratic cost of front shifts.
pub fn mobility_gk(inst: &InstantonGk, op: &LinearOperatorDisc) -> (f64, f64) {
    let du = &inst.derivative.values;
    let norm_sq = op.inner(du, du);
    let dirichlet = op.apply(du);
    let num = -op.inner(du, &dirichlet);
    let mu = num / (2.0 * norm_sq * norm_sq);
    (mu, 1.0 / (2.0 * mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instanton::{solve_decay_rate, solve_instanton_gk, solve_instanton_kac};
    use crate::kernels::{make_kernel, KernelFamily};
    use crate::models::{make_reaction_pair, KacModel, RateFamily, ReactionSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> KacModel {
        let k = make_kernel(KernelFamily::AnnularBump { scale: 1.0 }, 2, true, true).unwrap();
        KacModel::new(2.0, k, RateFamily::StandardCosh).unwrap()
    }

    #[test]
    fn two_route_surface_tension_agrees() {
        let m = model();
        let inst = solve_instanton_kac(&m, 4.0, 1.0 / 64.0).unwrap();
        let (tau, tau_alt) = surface_tension_kac(&m, &inst).unwrap();
        assert!(tau > 0.0 && tau_alt > 0.0);
        assert!(
            ((tau - tau_alt) / tau).abs() < 5e-3,
            "tau = {tau}, tau_alt = {tau_alt}"
        );
    }

    #[test]
    fn rate_identity_standard_choice() {
        // 2 a(K~*m) = sqrt(1 - m^2) for the cosh rate with matching kernels.
        let m = model();
        let inst = solve_instanton_kac(&m, 4.0, 1.0 / 64.0).unwrap();
        let abar = rate_profile(&m, &inst).unwrap();
        let defect = abar
            .zip(&inst.profile, |a, mm| 2.0 * a - (1.0 - mm * mm).sqrt())
            .unwrap()
            .sup_norm();
        assert!(defect < 1e-6, "defect = {defect:e}");
    }

    #[test]
    fn kac_operator_properties() {
        let m = model();
        let inst = solve_instanton_kac(&m, 4.0, 1.0 / 64.0).unwrap();
        let op = assemble_l_kac(&m, &inst).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!(op.symmetry_defect(&mut rng, 20) < 1e-10);
        let n = op.len();
        for _ in 0..100 {
            let psi: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            assert!(op.quadratic_form(&psi) <= 1e-10);
        }
        let mprime = operator_derivative(&op, &inst).unwrap();
        let res = op.norm(&op.apply(&mprime.values));
        assert!(res < 1e-10, "null residual = {res:e}");
    }

    #[test]
    fn kac_bundle_consistency() {
        let m = model();
        let inst = solve_instanton_kac(&m, 4.0, 1.0 / 64.0).unwrap();
        let alpha = solve_decay_rate(&m).unwrap().alpha;
        let b = compute_kac_bundle(&m, &inst, alpha).unwrap();
        assert_eq!(b.coeffs.theta, b.coeffs.mu * b.coeffs.tau);
        assert!(((b.coeffs.tau - b.coeffs.tau_alt) / b.coeffs.tau).abs() < 5e-3);
        assert!(b.coeffs.big_n > 0.0);
    }

    #[test]
    fn mobility_scales_linearly_in_constant_rate() {
        let k = make_kernel(KernelFamily::AnnularBump { scale: 1.0 }, 2, true, true).unwrap();
        let m1 = KacModel::new(2.0, k.clone(), RateFamily::Constant { a0: 0.25 }).unwrap();
        let m2 = KacModel::new(2.0, k, RateFamily::Constant { a0: 0.5 }).unwrap();
        let inst = solve_instanton_kac(&m1, 4.0, 1.0 / 64.0).unwrap();
        let dp = inst.profile.derivative();
        let (n1, _) = mobility_kac(&m1, &inst, &dp).unwrap();
        let (n2, _) = mobility_kac(&m2, &inst, &dp).unwrap();
        assert!(((n2 / n1) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gk_operator_and_mobility() {
        let pair = make_reaction_pair(&ReactionSpec::SymmetricCubic { r: 0.25 }).unwrap();
        let inst = solve_instanton_gk(&pair, 60.0, 1.0 / 128.0).unwrap();
        let op = assemble_l_gk(&pair, &inst).unwrap();
        // Constant test function: the flux term drops, leaving -(B+D).
        let ones = vec![1.0; op.len()];
        let applied = op.apply(&ones);
        for (i, &v) in applied.iter().enumerate().skip(1).take(op.len() - 2) {
            let u = inst.profile.values[i];
            let expect = -(pair.birth.eval(u) + pair.death.eval(u));
            assert!((v - expect).abs() < 1e-10);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(op.symmetry_defect(&mut rng, 20) < 1e-10);
        let (mu, tau) = mobility_gk(&inst, &op);
        assert!(mu > 0.0);
        assert!((tau * mu - 0.5).abs() < 1e-15);
        // Grid stability within 1%.
        let inst2 = solve_instanton_gk(&pair, 60.0, 1.0 / 256.0).unwrap();
        let op2 = assemble_l_gk(&pair, &inst2).unwrap();
        let (mu2, _) = mobility_gk(&inst2, &op2);
        assert!(((mu - mu2) / mu2).abs() < 0.01, "mu = {mu}, mu2 = {mu2}");
    }

    #[test]
    fn tridiagonal_solver_roundtrip() {
        let sub = vec![1.0, 2.0, -1.0];
        let diag = vec![4.0, 5.0, 6.0, 5.0];
        let sup = vec![-1.0, 1.5, 0.5];
        let x = vec![1.0, -2.0, 0.5, 3.0];
        let n = 4;
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            rhs[i] = diag[i] * x[i]
                + if i > 0 { sub[i - 1] * x[i - 1] } else { 0.0 }
                + if i + 1 < n { sup[i] * x[i + 1] } else { 0.0 };
        }
        let sol = thomas_solve(&sub, &diag, &sup, &rhs).unwrap();
        for i in 0..n {
            assert!((sol[i] - x[i]).abs() < 1e-12);
        }
    }
}
