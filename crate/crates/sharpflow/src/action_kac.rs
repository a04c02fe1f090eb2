//! Rescaled action of the nonlocal spin-flip model on the 2-torus: recovery
//! fields built from the 1-d front profile and its corrector, the rescaled
//! excess free energy, the three-term action decomposition through the convex
//! pair `G`/`G*`, the pointwise Lagrangian/Hamiltonian duality, and the
//! variational lower bound driven by a test function.

use crate::error::{Error, Result};
use crate::geometry::{curvature_field, signed_distance, InterfacePath, Shape};
use crate::grid::{Field2, Profile};
use crate::kernels::TorusStencil;
use crate::models::{free_energy_density, KacModel};
use serde::Serialize;

/// Clip amplitude so `arctanh` stays finite on PDE-generated fields.
pub const CLIP: f64 = 1.0 - 1e-12;

/// A time-parametrized field on the torus grid at fixed scale `eps`.
#[derive(Debug, Clone)]
pub struct FieldPath {
    pub eps: f64,
    pub times: Vec<f64>,
    pub fields: Vec<Field2>,
}

impl FieldPath {
    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.fields.len() || self.times.len() < 2 {
            return Err(Error::InvalidParameter(
                "field path needs matching times/fields with at least two frames".into(),
            ));
        }
        let n = self.fields[0].n;
        if 1.0 / n as f64 > self.eps / 8.0 + 1e-14 {
            return Err(Error::UnderResolved {
                spacing: 1.0 / n as f64,
                required: self.eps / 8.0,
            });
        }
        for f in &self.fields {
            if f.n != n {
                return Err(Error::IncompatibleGrids("frames on different grids".into()));
            }
        }
        Ok(())
    }

    /// Centered time derivative (one-sided at the ends).
    pub fn time_derivative(&self, k: usize) -> Field2 {
        let m = self.times.len();
        let (lo, hi) = if k == 0 {
            (0, 1)
        } else if k == m - 1 {
            (m - 2, m - 1)
        } else {
            (k - 1, k + 1)
        };
        let dt = self.times[hi] - self.times[lo];
        let mut out = self.fields[hi].clone();
        for (o, &a) in out.values.iter_mut().zip(&self.fields[lo].values) {
            *o = (*o - a) / dt;
        }
        out
    }
}

/// Convex side `G(q; alpha) = alpha (cosh q - 1)`.
pub fn g_fn(q: f64, alpha: f64) -> Result<f64> {
    if q.abs() > 700.0 {
        return Err(Error::Numerical(format!(
            "cosh argument {q} overflows: interface unresolved"
        )));
    }
    Ok(alpha * (q.cosh() - 1.0))
}

/// Legendre transform `G*(p; alpha) = p asinh(p/alpha) - sqrt(alpha^2+p^2)
/// + alpha`, evaluated in the cancellation-free form.
pub fn g_star(p: f64, alpha: f64) -> f64 {
    let root = (alpha * alpha + p * p).sqrt();
    p * (p / alpha).asinh() - p * p / (root + alpha)
}

/// Fenchel-Young expression `qp + G + G*`, nonnegative with equality at
/// `p = -alpha sinh q`.
pub fn fenchel_gap(q: f64, p: f64, alpha: f64) -> Result<f64> {
    Ok(q * p + g_fn(q, alpha)? + g_star(p, alpha))
}

/// Recovery field `phi(t,x) = mbar(d/eps + eps K(t,x) Qbar(d/eps))` sampled
/// on an n-by-n torus grid at the times stored in `path`. Pass the zero
/// profile as `q_bar` for the uncorrected variant.
pub fn build_recovery_kac(
    mbar: &Profile,
    q_bar: &Profile,
    path: &InterfacePath,
    eps: f64,
    n: usize,
) -> Result<FieldPath> {
    if 1.0 / n as f64 > eps / 8.0 + 1e-14 {
        return Err(Error::UnderResolved {
            spacing: 1.0 / n as f64,
            required: eps / 8.0,
        });
    }
    path.validate()?;
    let mut fields = Vec::with_capacity(path.times.len());
    for (k, &t) in path.times.iter().enumerate() {
        let w = match &path.shapes[k] {
            Shape::Circle { r, .. } => 0.5 * r,
            Shape::Polygon { .. } => 0.1,
        };
        let mut f = Field2::from_fn(n, |_, _| 0.0);
        for j in 0..n {
            for i in 0..n {
                let x = [(i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64];
                let d = signed_distance(path, t, x, w)?;
                let kap = curvature_field(path, t, x, w)?;
                let xi = d / eps;
                let val = mbar.eval(xi + eps * kap * q_bar.eval(xi));
                f.set(i, j, val.clamp(-CLIP, CLIP));
            }
        }
        fields.push(f);
    }
    Ok(FieldPath {
        eps,
        times: path.times.clone(),
        fields,
    })
}

/// Rescaled excess free energy
/// `F = int [f(m) - f(m_beta)]/eps + (eps/4) iint J_eps(x-y) [(m(x)-m(y))/eps]^2`.
pub fn free_energy_eps(field: &Field2, model: &KacModel, eps: f64) -> Result<f64> {
    let n = field.n;
    let a2 = field.spacing() * field.spacing();
    let fref = free_energy_density(model.beta, model.magnetization());
    let mut local = 0.0;
    for &m in &field.values {
        local += free_energy_density(model.beta, m) - fref;
    }
    local *= a2 / eps;
    let stencil = TorusStencil::new(&model.kernel, eps, n)?;
    let r = stencil.radius;
    let wrow = 2 * r + 1;
    let mut pair = 0.0;
    let ni = n as isize;
    for j in 0..ni {
        for i in 0..ni {
            let mx = field.get_wrapped(i, j);
            let mut s = 0.0;
            for dj in -r..=r {
                for di in -r..=r {
                    let w = stencil.weights[((dj + r) * wrow + (di + r)) as usize];
                    if w == 0.0 {
                        continue;
                    }
                    let my = field.get_wrapped(i + di, j + dj);
                    let diff = mx - my;
                    s += w * diff * diff;
                }
            }
            pair += s;
        }
    }
    // The stencil weights carry the cell area of the inner integral; the
    // outer integral contributes another a^2, and the prefactor is
    // eps/4 * (1/eps)^2.
    pair *= a2 / (4.0 * eps);
    Ok(local + pair)
}

/// Three-term decomposition of the rescaled action along a field path.
#[derive(Debug, Clone, Serialize)]
pub struct ActionReport {
    pub eps: f64,
    /// Exact endpoint term `[F(T) - F(0)] / 2`.
    pub s1: f64,
    /// Velocity term `1/2 int int G*(phidot/(beta eps); alpha)`.
    pub s2: f64,
    /// Drift term `1/2 int int G(eps beta dF/dm; alpha)`.
    pub s3: f64,
    pub total: f64,
    /// Sharp-interface reference value, when supplied by the caller.
    pub reference: Option<f64>,
    /// Per-term sup of the space-time integrand, for diagnostics.
    pub integrand_sup: [f64; 2],
}

/// Pointwise ingredients of the action at one time slice.
struct SliceOps {
    jconv: Field2,
    alpha: Field2,
    vanish: Field2,
}

fn slice_ops(
    field: &Field2,
    model: &KacModel,
    eps: f64,
    j_stencil: &TorusStencil,
    k_stencil: &TorusStencil,
) -> SliceOps {
    let jconv = j_stencil.apply(field);
    let kconv = k_stencil.apply(field);
    let n = field.n;
    let mut alpha = Field2::constant(n, 0.0);
    let mut vanish = Field2::constant(n, 0.0);
    for idx in 0..n * n {
        let u = field.values[idx];
        let c = model.rate_a(kconv.values[idx]);
        let root = (1.0 - u * u).max(0.0).sqrt();
        alpha.values[idx] = 2.0 * c * root / (model.beta * eps.powi(3));
        vanish.values[idx] = c * root;
    }
    SliceOps {
        jconv,
        alpha,
        vanish,
    }
}

/// Evaluate the rescaled action of a field path by the three-term
/// decomposition; `reference` is attached to the report unchanged.
pub fn action_eps_kac(
    path: &FieldPath,
    model: &KacModel,
    reference: Option<f64>,
) -> Result<ActionReport> {
    path.validate()?;
    let eps = path.eps;
    let beta = model.beta;
    let n = path.fields[0].n;
    let j_stencil = TorusStencil::new(&model.kernel, eps, n)?;
    let k_kernel = crate::kernels::make_kernel(
        model.kernel.family.clone(),
        model.kernel.dim,
        true,
        model.kernel.vanishes_at_zero,
    )?;
    let k_stencil = TorusStencil::new(&k_kernel, eps, n)?;
    let a2 = 1.0 / (n * n) as f64;
    let m = path.times.len();
    let mut s2_slices = Vec::with_capacity(m);
    let mut s3_slices = Vec::with_capacity(m);
    let mut sup2 = 0.0f64;
    let mut sup3 = 0.0f64;
    for k in 0..m {
        let field = &path.fields[k];
        let ops = slice_ops(field, model, eps, &j_stencil, &k_stencil);
        let dphi = path.time_derivative(k);
        let mut acc2 = 0.0;
        let mut acc3 = 0.0;
        for idx in 0..n * n {
            let u = field.values[idx].clamp(-CLIP, CLIP);
            let alpha = ops.alpha.values[idx];
            let p = dphi.values[idx] / (beta * eps);
            let q = u.atanh() - beta * ops.jconv.values[idx];
            let i2 = 0.5 * g_star(p, alpha);
            let i3 = 0.5 * g_fn(q, alpha)?;
            acc2 += i2;
            acc3 += i3;
            sup2 = sup2.max(i2);
            sup3 = sup3.max(i3);
        }
        s2_slices.push(acc2 * a2);
        s3_slices.push(acc3 * a2);
    }
    let mut s2 = 0.0;
    let mut s3 = 0.0;
    for k in 1..m {
        let dt = path.times[k] - path.times[k - 1];
        s2 += 0.5 * (s2_slices[k - 1] + s2_slices[k]) * dt;
        s3 += 0.5 * (s3_slices[k - 1] + s3_slices[k]) * dt;
    }
    let f_end = free_energy_eps(path.fields.last().unwrap(), model, eps)?;
    let f_start = free_energy_eps(&path.fields[0], model, eps)?;
    let s1 = 0.5 * (f_end - f_start);
    Ok(ActionReport {
        eps,
        s1,
        s2,
        s3,
        total: s1 + s2 + s3,
        reference,
        integrand_sup: [sup2, sup3],
    })
}

/// Pointwise Lagrangian of the rescaled dynamics; `ju = J_eps*u` and `c` are
/// the nonlocal data at the evaluation point.
pub fn lagrangian_eps(u: f64, v: f64, ju: f64, c: f64, beta: f64, eps: f64) -> f64 {
    let root = (1.0 - u * u).max(0.0).sqrt();
    let alpha = 2.0 * c * root / (beta * eps.powi(3));
    let p = v / (beta * eps);
    let q = u.clamp(-CLIP, CLIP).atanh() - beta * ju;
    // eps^{-1} L_eps(u, v) = p q + ... regrouped through the convex pair:
    // the zero-cost velocity is p = -alpha sinh q.
    q * p + alpha * (q.cosh() - 1.0) + g_star(p, alpha)
}

/// Pointwise Hamiltonian (Legendre dual in the velocity slot), scaled so that
/// `lagrangian_eps(u, v, ...) = sup_p { p*v' - hamiltonian } / matching units`.
pub fn hamiltonian_eps(u: f64, eta: f64, ju: f64, c: f64, beta: f64, eps: f64) -> f64 {
    let bju = beta * ju;
    c / (beta * eps * eps)
        * ((bju + 2.0 * beta * eta).cosh() - bju.cosh() - u * (bju + 2.0 * beta * eta).sinh()
            + u * bju.sinh())
}

/// Duality gap `|L_eps(u,v) - sup_g {eps^{-2} v g - eps^{-2} H(u,g)}|`
/// with the sup over the scalar conjugate variable found by golden-section
/// search; both sides are reported in the units of [`lagrangian_eps`].
pub fn duality_gap(u: f64, v: f64, ju: f64, c: f64, beta: f64, eps: f64) -> f64 {
    let direct = lagrangian_eps(u, v, ju, c, beta, eps);
    // The Legendre sup reproduces the Lagrangian in its native units, which
    // are eps/2 times the G/G*-form used by `lagrangian_eps`.
    let objective = |eta: f64| v * eta - hamiltonian_eps(u, eta, ju, c, beta, eps);
    // Golden-section maximization on a bracket that always contains the
    // stationary point for resolved fields.
    let (mut a, mut b) = (-40.0 * eps, 40.0 * eps);
    let phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    for _ in 0..200 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = objective(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = objective(x1);
        }
    }
    let sup = f1.max(f2);
    (direct - 2.0 / eps * sup).abs()
}

/// Lower-bound functional driven by a test function.
#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    pub eps: f64,
    /// Velocity pairing `int eps^{-1} phidot g`.
    pub lam1: f64,
    /// Drift pairing (linear term of the Hamiltonian expansion).
    pub lam2: f64,
    /// Quadratic penalty (second-order term, nonpositive contribution).
    pub lam3: f64,
    /// Exact value `int [eps^{-1} phidot g - eps^{-3} (Hamiltonian bracket)]`.
    pub total: f64,
}

/// Evaluate the variational lower bound `Lambda_eps(phi, g)` with the,
/// front-localized conjugate field `g = eps N p(t,x) w(d/eps)` where
/// `w = mbar' / (2 abar sqrt(1 - mbar^2))` and `p` is the caller's smooth
/// test function.
#[allow(clippy::too_many_arguments)]
pub fn lower_bound_kac(
    field_path: &FieldPath,
    model: &KacModel,
    weight: &Profile,
    big_n: f64,
    geom: &InterfacePath,
    p_test: &dyn Fn(f64, [f64; 2]) -> f64,
    reference_tube: f64,
) -> Result<LowerBoundReport> {
    field_path.validate()?;
    let eps = field_path.eps;
    let beta = model.beta;
    let n = field_path.fields[0].n;
    let j_stencil = TorusStencil::new(&model.kernel, eps, n)?;
    let k_kernel = crate::kernels::make_kernel(
        model.kernel.family.clone(),
        model.kernel.dim,
        true,
        model.kernel.vanishes_at_zero,
    )?;
    let k_stencil = TorusStencil::new(&k_kernel, eps, n)?;
    let a2 = 1.0 / (n * n) as f64;
    let m = field_path.times.len();
    let mut rows = vec![[0.0f64; 4]; m];
    for k in 0..m {
        let t = field_path.times[k];
        let field = &field_path.fields[k];
        let ops = slice_ops(field, model, eps, &j_stencil, &k_stencil);
        let dphi = field_path.time_derivative(k);
        let w_tube = match &geom.shapes[geom.slot(t)] {
            Shape::Circle { r, .. } => (0.5 * r).min(reference_tube),
            Shape::Polygon { .. } => reference_tube,
        };
        let (mut l1, mut l2, mut l3, mut exact) = (0.0, 0.0, 0.0, 0.0);
        for j in 0..n {
            for i in 0..n {
                let idx = j * n + i;
                let x = [(i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64];
                let d = signed_distance(geom, t, x, w_tube)?;
                let g = eps * big_n * p_test(t, x) * weight.eval(d / eps);
                if g == 0.0 {
                    continue;
                }
                let u = field.values[idx];
                let bju = beta * ops.jconv.values[idx];
                let c = ops.vanish.values[idx] / (1.0 - u * u).max(1e-300).sqrt();
                l1 += dphi.values[idx] * g / eps;
                // Linear term: 2 g * cvanish * sinh(q) / eps^3 with
                // q = arctanh u - beta J*u.
                let q = u.clamp(-CLIP, CLIP).atanh() - bju;
                l2 += 2.0 * g * ops.vanish.values[idx] * q.sinh() / eps.powi(3);
                l3 -= 2.0
                    * beta
                    * g
                    * g
                    * (c * (bju.cosh() - u * bju.sinh()))
                    / eps.powi(3);
                let bracket = (bju + 2.0 * beta * g).cosh() - bju.cosh()
                    - u * ((bju + 2.0 * beta * g).sinh() - bju.sinh());
                exact += dphi.values[idx] * g / eps - c / (beta * eps.powi(3)) * bracket;
            }
        }
        rows[k] = [l1 * a2, l2 * a2, l3 * a2, exact * a2];
    }
    let mut out = [0.0f64; 4];
    for k in 1..m {
        let dt = field_path.times[k] - field_path.times[k - 1];
        for c in 0..4 {
            out[c] += 0.5 * (rows[k - 1][c] + rows[k][c]) * dt;
        }
    }
    Ok(LowerBoundReport {
        eps,
        lam1: out[0],
        lam2: out[1],
        lam3: out[2],
        total: out[3],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::evolve_mcf_circle;
    use crate::kernels::{make_kernel, KernelFamily};
    use crate::models::{KacModel, RateFamily};
    use rand::{Rng, SeedableRng};

    fn model() -> KacModel {
        let kernel = make_kernel(KernelFamily::AnnularBump { scale: 1.0 }, 2, true, true).unwrap();
        KacModel::new(2.0, kernel, RateFamily::StandardCosh).unwrap()
    }

    #[test]
    fn fenchel_young_nonnegative_with_equality() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let q: f64 = rng.gen_range(-3.0..3.0);
            let alpha: f64 = rng.gen_range(0.1..50.0);
            let p: f64 = rng.gen_range(-10.0..10.0);
            let gap = fenchel_gap(q, p, alpha).unwrap();
            assert!(gap > -1e-12, "gap = {gap}");
            let eq = fenchel_gap(q, -alpha * q.sinh(), alpha).unwrap();
            assert!(eq.abs() < 1e-9 * (1.0 + alpha), "equality defect {eq}");
        }
    }

    #[test]
    fn g_star_matches_naive_form() {
        for &(p, alpha) in &[(0.3, 2.0), (5.0, 0.7), (-2.0, 10.0)] {
            let naive = p * ((p / alpha) as f64).asinh() - (alpha * alpha + p * p).sqrt() + alpha;
            assert!((g_star(p, alpha) - naive).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_phase_has_zero_action() {
        let model = model();
        let mb = model.magnetization();
        let eps = 0.1;
        let n = 80;
        let fields = vec![Field2::constant(n, mb); 3];
        let path = FieldPath {
            eps,
            times: vec![0.0, 0.01, 0.02],
            fields,
        };
        let rep = action_eps_kac(&path, &model, None).unwrap();
        assert!(rep.s1.abs() < 1e-10, "s1 = {:e}", rep.s1);
        assert!(rep.s2.abs() < 1e-10, "s2 = {:e}", rep.s2);
        assert!(rep.s3.abs() < 1e-8, "s3 = {:e}", rep.s3);
    }

    #[test]
    fn constant_zero_field_free_energy() {
        let model = model();
        let eps = 0.1;
        let f = free_energy_eps(&Field2::constant(80, 0.0), &model, eps).unwrap();
        let mb = model.magnetization();
        let exact =
            (free_energy_density(2.0, 0.0) - free_energy_density(2.0, mb)) / eps;
        assert!((f - exact).abs() < 1e-10 * exact.abs());
    }

    #[test]
    fn duality_gap_small_on_random_states() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let u: f64 = rng.gen_range(-0.9..0.9);
            let ju: f64 = rng.gen_range(-0.5..0.5);
            let c: f64 = rng.gen_range(0.2..0.6);
            let v: f64 = rng.gen_range(-0.5..0.5);
            let eps = 0.2;
            let gap = duality_gap(u, v, ju, c, 2.0, eps);
            let scale = lagrangian_eps(u, v, ju, c, 2.0, eps).abs().max(1.0);
            assert!(gap < 1e-6 * scale, "gap = {gap:e}");
        }
    }

    #[test]
    fn zero_cost_velocity_annihilates_lagrangian() {
        // v = -alpha sinh(q) * beta * eps is the zero-cost velocity.
        for &(u, ju, c) in &[(0.3, 0.2, 0.4), (-0.5, -0.3, 0.25)] {
            let beta = 2.0;
            let eps: f64 = 0.15;
            let root = (1.0f64 - u * u).sqrt();
            let alpha = 2.0 * c * root / (beta * eps.powi(3));
            let q = (u as f64).atanh() - beta * ju;
            let v = -alpha * q.sinh() * beta * eps;
            let l = lagrangian_eps(u, v, ju, c, beta, eps);
            assert!(l.abs() < 1e-10 * (1.0 + alpha), "L = {l:e}");
        }
    }

    #[test]
    fn recovery_field_centered_and_saturated() {
        let model = model();
        let inst =
            crate::instanton::solve_instanton_kac(&model, 30.0, 1.0 / 32.0).unwrap();
        let path = evolve_mcf_circle([0.5, 0.5], 0.3, 0.1, 0.02, 3).unwrap();
        let zero = Profile::constant(30.0, 1.0 / 32.0, 0.0);
        let fp = build_recovery_kac(&inst.profile, &zero, &path, 0.08, 104).unwrap();
        let mb = model.magnetization();
        // Far inside (center): +m_beta; far outside (corner): -m_beta.
        let f = &fp.fields[0];
        let n = f.n;
        assert!((f.get(n / 2, n / 2) - mb).abs() < 1e-8);
        assert!((f.get(0, 0) + mb).abs() < 1e-8);
        // Near the front the field equals the profile of the cell's signed
        // distance (Q = 0 here), and stays well below saturation.
        let i = ((0.5 + 0.3) * n as f64) as usize;
        let x = [(i as f64 + 0.5) / n as f64, (n as f64 / 2.0 + 0.5) / n as f64];
        let d = crate::geometry::signed_distance(&path, 0.0, x, 0.15).unwrap();
        let expect = inst.profile.eval(d / 0.08);
        assert!((f.get(i, n / 2) - expect).abs() < 1e-12);
        assert!(f.get(i, n / 2).abs() < 0.5 * mb);
    }
}
