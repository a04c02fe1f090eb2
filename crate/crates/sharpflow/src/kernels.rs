//! Radial interaction kernels, their one-dimensional reductions and the
//! periodic / line convolutions used by every other module.

use crate::error::{Error, Result};
use crate::grid::{integrate_refined, trapezoid_samples, Field2, Profile};

const REDUCTION_TOL: f64 = 1e-10;

/// Built-in radial shape families, all supported in `[0, scale/2]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum KernelFamily {
    /// Smooth bump `exp(-1/(1-(2s/scale)^2))`.
    Bump { scale: f64 },
    /// Annular bump `(2s/scale)^2 exp(-1/(1-(2s/scale)^2))`, vanishing at the origin.
    AnnularBump { scale: f64 },
    /// Identically zero; only useful to exercise error paths.
    Zero,
}

impl KernelFamily {
    pub fn scale(&self) -> f64 {
        match self {
            KernelFamily::Bump { scale } | KernelFamily::AnnularBump { scale } => *scale,
            KernelFamily::Zero => 1.0,
        }
    }

    fn shape(&self, s: f64) -> f64 {
        let scale = self.scale();
        let u = 2.0 * s / scale;
        if !(0.0..1.0).contains(&u) {
            return 0.0;
        }
        let bump = (-1.0 / (1.0 - u * u)).exp();
        match self {
            KernelFamily::Bump { .. } => bump,
            KernelFamily::AnnularBump { .. } => u * u * bump,
            KernelFamily::Zero => 0.0,
        }
    }

    fn vanishes_at_zero(&self) -> bool {
        matches!(self, KernelFamily::AnnularBump { .. } | KernelFamily::Zero)
    }
}

/// A radial interaction profile `s -> amplitude * shape(s)` in dimension `dim`.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub family: KernelFamily,
    pub dim: usize,
    pub amplitude: f64,
    pub normalized: bool,
    pub vanishes_at_zero: bool,
    /// d-dimensional integral of the (scaled) kernel.
    pub mass: f64,
}

/// Surface area of the unit sphere in `R^d` (number of points, 2, for d=1).
pub fn sphere_surface(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        0 => panic!("sphere surface undefined in dimension 0"),
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (d as f64 - 2.0) * sphere_surface(d - 2),
    }
}

impl Kernel {
    /// Kernel value at radius `s`.
    pub fn eval(&self, s: f64) -> f64 {
        self.amplitude * self.family.shape(s)
    }

    /// Support radius of the kernel.
    pub fn support_radius(&self) -> f64 {
        self.family.scale() / 2.0
    }

    fn radial_integral(family: KernelFamily, dim: usize) -> Result<f64> {
        let r = family.scale() / 2.0;
        let val = integrate_refined(
            |s| s.powi(dim as i32 - 1) * family.shape(s),
            0.0,
            r,
            REDUCTION_TOL,
        )?;
        Ok(sphere_surface(dim) * val)
    }

    /// One-dimensional reduction of the kernel at a single point,
    /// `J~(xi) = \int_{R^{d-1}} j(sqrt(xi^2 + |eta|^2)) d eta`.
    pub fn reduce_at(&self, xi: f64) -> f64 {
        let r = self.support_radius();
        if xi.abs() >= r {
            return 0.0;
        }
        if self.dim == 1 {
            return self.eval(xi.abs());
        }
        let rho_max = (r * r - xi * xi).sqrt();
        let inner = integrate_refined(
            |rho| rho.powi(self.dim as i32 - 2) * self.eval((xi * xi + rho * rho).sqrt()),
            0.0,
            rho_max,
            REDUCTION_TOL,
        )
        .expect("smooth compact integrand");
        sphere_surface(self.dim - 1) * inner
    }

    /// Second-moment reduction at a single point,
    /// `M2(xi) = \int_{R^{d-1}} j(sqrt(xi^2 + |eta|^2)) eta_1^2/2 d eta`.
    pub fn second_moment_at(&self, xi: f64) -> Result<f64> {
        if self.dim < 2 {
            return Err(Error::InvalidParameter(
                "second-moment reduction undefined in d=1".into(),
            ));
        }
        let r = self.support_radius();
        if xi.abs() >= r {
            return Ok(0.0);
        }
        let rho_max = (r * r - xi * xi).sqrt();
        // By symmetry eta_1^2 averages to |eta|^2/(d-1) on spheres of R^{d-1}.
        let inner = integrate_refined(
            |rho| {
                rho.powi(self.dim as i32 - 2)
                    * (rho * rho / 2.0)
                    * self.eval((xi * xi + rho * rho).sqrt())
            },
            0.0,
            rho_max,
            REDUCTION_TOL,
        )?;
        Ok(sphere_surface(self.dim - 1) * inner / (self.dim as f64 - 1.0))
    }
}

/// Kind tag for reduced one-dimensional kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel1DKind {
    Jtilde,
    Ktilde,
    M2,
}

/// Reduced kernel sampled on a uniform symmetric grid.
#[derive(Debug, Clone)]
pub struct Kernel1D {
    pub half_width: f64,
    pub spacing: f64,
    /// Samples at `{-half_width, ..., half_width}`, odd length.
    pub values: Vec<f64>,
    pub kind: Kernel1DKind,
}

impl Kernel1D {
    pub fn half_count(&self) -> usize {
        self.values.len() / 2
    }

    pub fn at_index(&self, m: isize) -> f64 {
        let mid = self.half_count() as isize;
        let i = m + mid;
        if i < 0 || i as usize >= self.values.len() {
            0.0
        } else {
            self.values[i as usize]
        }
    }

    /// Trapezoidal mass of the reduced kernel.
    pub fn mass(&self) -> f64 {
        trapezoid_samples(&self.values, self.spacing)
    }

    /// Whether the reduced kernel is strictly positive at the origin
    /// (a qualitative assumption used by the spectral-gap argument).
    pub fn positive_at_origin(&self) -> bool {
        self.values[self.half_count()] > 0.0
    }
}

/// Construct a kernel from a built-in family.
pub fn make_kernel(
    family: KernelFamily,
    dim: usize,
    normalize: bool,
    force_zero_at_origin: bool,
) -> Result<Kernel> {
    if dim < 1 {
        return Err(Error::InvalidParameter("kernel dimension must be >= 1".into()));
    }
    if force_zero_at_origin && !family.vanishes_at_zero() {
        return Err(Error::InvalidParameter(format!(
            "family {family:?} does not vanish at the origin"
        )));
    }
    let raw_mass = Kernel::radial_integral(family, dim)?;
    if raw_mass < 1e-300 {
        return Err(Error::NonNormalizable(format!("{family:?} in d={dim}")));
    }
    let amplitude = if normalize { 1.0 / raw_mass } else { 1.0 };
    Ok(Kernel {
        family,
        dim,
        amplitude,
        normalized: normalize,
        vanishes_at_zero: family.vanishes_at_zero(),
        mass: if normalize { 1.0 } else { raw_mass },
    })
}

fn sample_reduction<F: Fn(f64) -> f64>(
    support: f64,
    spacing: f64,
    kind: Kernel1DKind,
    f: F,
) -> Kernel1D {
    let half = (support / spacing).ceil() as usize;
    let values = (0..=2 * half)
        .map(|i| f((i as f64 - half as f64) * spacing))
        .collect();
    Kernel1D {
        half_width: half as f64 * spacing,
        spacing,
        values,
        kind,
    }
}

/// Reduce a d-dimensional radial kernel to its 1-d profile at grid spacing
/// `spacing`. The samples are rescaled so their trapezoid mass equals the
/// continuum mass exactly; otherwise the quadrature defect of the kernel mass
/// shifts the asymptotes of every fixed-point computation built on top.
pub fn reduce_1d(kernel: &Kernel, spacing: f64, kind: Kernel1DKind) -> Kernel1D {
    let mut k = sample_reduction(kernel.support_radius(), spacing, kind, |xi| {
        kernel.reduce_at(xi)
    });
    let discrete = k.mass();
    if discrete > 0.0 {
        let factor = kernel.mass / discrete;
        for v in &mut k.values {
            *v *= factor;
        }
    }
    k
}

/// Second-moment reduction `M2` sampled at spacing `spacing`.
pub fn second_moment_kernel(kernel: &Kernel, spacing: f64) -> Result<Kernel1D> {
    if kernel.dim < 2 {
        return Err(Error::InvalidParameter(
            "second-moment reduction undefined in d=1".into(),
        ));
    }
    Ok(sample_reduction(
        kernel.support_radius(),
        spacing,
        Kernel1DKind::M2,
        |xi| kernel.second_moment_at(xi).expect("dim >= 2"),
    ))
}

/// Line convolution `(k * p)(xi)` by the trapezoid rule, with `p` extended by
/// its asymptotic limits beyond the grid. Exact for constant asymptotes.
pub fn convolve_line(k: &Kernel1D, p: &Profile) -> Result<Profile> {
    if (k.spacing - p.spacing).abs() > 1e-12 * p.spacing {
        return Err(Error::IncompatibleGrids(format!(
            "kernel spacing {} vs profile spacing {}",
            k.spacing, p.spacing
        )));
    }
    let m = k.half_count() as isize;
    let h = p.spacing;
    let n = p.len();
    let mut values = vec![0.0; n];
    for i in 0..n {
        let mut s = 0.0;
        for dm in -m..=m {
            let w = if dm.unsigned_abs() as usize == m as usize { 0.5 } else { 1.0 };
            s += w * k.at_index(dm) * p.at(i as isize - dm);
        }
        values[i] = h * s;
    }
    let mass = k.mass();
    Ok(Profile {
        cutoff: p.cutoff,
        spacing: p.spacing,
        values,
        left_limit: p.left_limit * mass,
        right_limit: p.right_limit * mass,
    })
}

/// Discrete stencil of the rescaled kernel `J_eps(z) = eps^{-d} J(z/eps)` on a
/// torus grid of spacing `1/n`, renormalized so its discrete mass equals the
/// continuum mass.
pub struct TorusStencil {
    pub radius: isize,
    /// Row-major weights, `(2*radius+1)^2` entries, including the cell area factor.
    pub weights: Vec<f64>,
    pub eps: f64,
    pub n: usize,
}

impl TorusStencil {
    pub fn new(kernel: &Kernel, eps: f64, n: usize) -> Result<TorusStencil> {
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::InvalidParameter(format!("eps = {eps} not in (0,1)")));
        }
        let a = 1.0 / n as f64;
        if a > eps / 8.0 + 1e-14 {
            return Err(Error::UnderResolved {
                spacing: a,
                required: eps / 8.0,
            });
        }
        let support = eps * kernel.support_radius();
        let radius = (support / a).ceil() as isize;
        let mut weights = Vec::with_capacity(((2 * radius + 1) * (2 * radius + 1)) as usize);
        let mut sum = 0.0;
        for dj in -radius..=radius {
            for di in -radius..=radius {
                let r = ((di as f64 * a).powi(2) + (dj as f64 * a).powi(2)).sqrt();
                let w = a * a / (eps * eps) * kernel.eval(r / eps);
                weights.push(w);
                sum += w;
            }
        }
        if sum > 0.0 {
            let target = kernel.mass;
            for w in &mut weights {
                *w *= target / sum;
            }
        }
        Ok(TorusStencil {
            radius,
            weights,
            eps,
            n,
        })
    }

    pub fn apply(&self, field: &Field2) -> Field2 {
        assert_eq!(field.n, self.n, "stencil built for a different grid");
        let n = self.n as isize;
        let r = self.radius;
        let w = 2 * r + 1;
        let mut out = vec![0.0; field.values.len()];
        for j in 0..n {
            for i in 0..n {
                let mut s = 0.0;
                for dj in -r..=r {
                    let jj = (j + dj).rem_euclid(n) as usize;
                    let row = jj * self.n as usize;
                    let wrow = ((dj + r) * w) as usize;
                    for di in -r..=r {
                        let ii = (i + di).rem_euclid(n) as usize;
                        s += self.weights[wrow + (di + r) as usize] * field.values[row + ii];
                    }
                }
                out[(j * n + i) as usize] = s;
            }
        }
        Field2 {
            n: self.n,
            values: out,
        }
    }
}

/// Periodic convolution with the rescaled kernel `J_eps` on the unit torus.
pub fn convolve_torus(kernel: &Kernel, eps: f64, field: &Field2) -> Result<Field2> {
    let stencil = TorusStencil::new(kernel, eps, field.n)?;
    Ok(stencil.apply(field))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump2() -> Kernel {
        make_kernel(KernelFamily::Bump { scale: 1.0 }, 2, true, false).unwrap()
    }

    #[test]
    fn normalized_radial_integral_is_one() {
        let k = bump2();
        let val = integrate_refined(|s| s * k.eval(s), 0.0, 0.5, 1e-12).unwrap();
        assert!((sphere_surface(2) * val - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_amplitude_is_non_normalizable() {
        let err = make_kernel(KernelFamily::Zero, 2, true, false).unwrap_err();
        assert!(matches!(err, Error::NonNormalizable(_)));
    }

    #[test]
    fn annular_vanishes_at_origin() {
        let k = make_kernel(KernelFamily::AnnularBump { scale: 1.0 }, 2, true, true).unwrap();
        assert_eq!(k.eval(0.0), 0.0);
    }

    #[test]
    fn forced_zero_at_origin_rejected_for_bump() {
        assert!(make_kernel(KernelFamily::Bump { scale: 1.0 }, 2, true, true).is_err());
    }

    #[test]
    fn reduction_mass_is_one() {
        let k = bump2();
        let j = reduce_1d(&k, 1.0 / 256.0, Kernel1DKind::Jtilde);
        assert!((j.mass() - 1.0).abs() < 1e-8, "mass = {}", j.mass());
    }

    #[test]
    fn reduction_is_even() {
        let k = bump2();
        let j = reduce_1d(&k, 1.0 / 64.0, Kernel1DKind::Jtilde);
        let n = j.values.len();
        for i in 0..n {
            assert_eq!(j.values[i], j.values[n - 1 - i]);
        }
    }

    #[test]
    fn d1_reduction_is_identity_up_to_mass_fix() {
        let k = make_kernel(KernelFamily::Bump { scale: 1.0 }, 1, true, false).unwrap();
        let j = reduce_1d(&k, 1.0 / 64.0, Kernel1DKind::Jtilde);
        assert!((j.mass() - 1.0).abs() < 1e-14);
        // Samples are the pointwise kernel values up to one uniform factor.
        let mid = j.half_count();
        let factor = j.values[mid] / k.eval(0.0);
        assert!((factor - 1.0).abs() < 1e-6);
        for (i, &v) in j.values.iter().enumerate() {
            let xi = (i as f64 - mid as f64) * j.spacing;
            assert!((v - factor * k.eval(xi.abs())).abs() < 1e-14);
        }
    }

    #[test]
    fn second_moment_support_and_sign() {
        let k = bump2();
        let m2 = second_moment_kernel(&k, 1.0 / 64.0).unwrap();
        assert!(m2.values.iter().all(|&v| v >= 0.0));
        assert_eq!(k.second_moment_at(0.6).unwrap(), 0.0);
    }

    #[test]
    fn second_moment_rejected_in_d1() {
        let k = make_kernel(KernelFamily::Bump { scale: 1.0 }, 1, true, false).unwrap();
        assert!(second_moment_kernel(&k, 1.0 / 64.0).is_err());
    }

    #[test]
    fn second_moment_fubini() {
        // \int M2 d xi must equal \int_{R^d} j(|z|) z_1^2/2 dz, computed by an
        // independent d-dimensional (radial) quadrature.
        let k = bump2();
        let m2 = second_moment_kernel(&k, 1.0 / 512.0).unwrap();
        let lhs = m2.mass();
        // avg of z1^2 over a circle of radius s is s^2/2 (d=2), so the direct
        // radial form is S_1 \int s * j(s) * (s^2/2)/2 ds.
        let direct = integrate_refined(
            |s| sphere_surface(2) * s * k.eval(s) * (s * s / 2.0) / 2.0,
            0.0,
            0.5,
            1e-12,
        )
        .unwrap();
        assert!(
            ((lhs - direct) / direct).abs() < 1e-6,
            "lhs={lhs} direct={direct}"
        );
    }

    #[test]
    fn convolve_line_constant_fixed_point() {
        let k = bump2();
        let j = reduce_1d(&k, 1.0 / 64.0, Kernel1DKind::Jtilde);
        let p = Profile::constant(4.0, 1.0 / 64.0, 0.3);
        let out = convolve_line(&j, &p).unwrap();
        let target = 0.3 * j.mass();
        for &v in &out.values {
            assert!((v - target).abs() < 1e-13);
        }
    }

    #[test]
    fn convolve_line_parity() {
        let k = bump2();
        let j = reduce_1d(&k, 1.0 / 64.0, Kernel1DKind::Jtilde);
        let p = Profile::from_fn(4.0, 1.0 / 64.0, -1.0, 1.0, |x| x.tanh());
        let out = convolve_line(&j, &p).unwrap();
        let n = out.len();
        for i in 0..n {
            assert!((out.values[i] + out.values[n - 1 - i]).abs() < 1e-13);
        }
    }

    #[test]
    fn convolve_line_linearity() {
        let k = bump2();
        let j = reduce_1d(&k, 1.0 / 64.0, Kernel1DKind::Jtilde);
        let p = Profile::from_fn(4.0, 1.0 / 64.0, -1.0, 1.0, |x| x.tanh());
        let q = Profile::from_fn(4.0, 1.0 / 64.0, 0.2, 0.2, |x| 0.2 * (x * x).exp().recip());
        let combo = p.zip(&q, |a, b| 2.0 * a - 3.0 * b).unwrap();
        let lhs = convolve_line(&j, &combo).unwrap();
        let cp = convolve_line(&j, &p).unwrap();
        let cq = convolve_line(&j, &q).unwrap();
        for i in 0..lhs.len() {
            let rhs = 2.0 * cp.values[i] - 3.0 * cq.values[i];
            assert!((lhs.values[i] - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn convolve_torus_constant() {
        let k = bump2();
        let f = Field2::constant(64, 0.3);
        let out = convolve_torus(&k, 0.25, &f).unwrap();
        for &v in &out.values {
            assert!((v - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn convolve_torus_resolution_error() {
        let k = bump2();
        let f = Field2::constant(16, 0.3);
        assert!(matches!(
            convolve_torus(&k, 0.05, &f),
            Err(Error::UnderResolved { .. })
        ));
    }

    #[test]
    fn convolve_torus_translation_equivariance() {
        let k = bump2();
        let n = 64;
        let f = Field2::from_fn(n, |x, y| {
            (2.0 * std::f64::consts::PI * x).sin() * (2.0 * std::f64::consts::PI * y).cos()
        });
        let out = convolve_torus(&k, 0.25, &f).unwrap();
        let mut shifted = Field2::constant(n, 0.0);
        for j in 0..n {
            for i in 0..n {
                shifted.set(i, j, f.get_wrapped(i as isize - 1, j as isize));
            }
        }
        let out_shifted = convolve_torus(&k, 0.25, &shifted).unwrap();
        for j in 0..n {
            for i in 0..n {
                let a = out.get_wrapped(i as isize - 1, j as isize);
                let b = out_shifted.get(i, j);
                assert!((a - b).abs() < 1e-13);
            }
        }
    }
}
