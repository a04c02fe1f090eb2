//! Model definitions: the nonlocal spin model with its flip-rate family and
//! mean-field thermodynamics, and reaction pairs for the reaction-diffusion
//! system, together with small polynomial utilities.

use crate::error::{Error, Result};
use crate::kernels::Kernel;

/// Flip-rate family `a(s)` applied to the locally averaged field.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum RateFamily {
    /// Constant rate `a0`, independent of the local field.
    Constant { a0: f64 },
    /// `a(s) = 1 / (2 cosh(beta s))`; requires the interaction to vanish at
    /// the origin so that flipping a spin does not change its own field.
    StandardCosh,
}

/// Nonlocal spin model: inverse temperature, interaction kernel and rate family.
#[derive(Debug, Clone)]
pub struct KacModel {
    pub beta: f64,
    pub kernel: Kernel,
    pub rate: RateFamily,
}

impl KacModel {
    pub fn new(beta: f64, kernel: Kernel, rate: RateFamily) -> Result<KacModel> {
        if !(beta > 1.0) {
            return Err(Error::ModelValidation(format!(
                "beta = {beta} must exceed 1 for a phase transition"
            )));
        }
        if !kernel.normalized {
            return Err(Error::ModelValidation(
                "interaction kernel must have unit mass".into(),
            ));
        }
        if matches!(rate, RateFamily::StandardCosh) && !kernel.vanishes_at_zero {
            return Err(Error::ModelValidation(
                "cosh rates require an interaction vanishing at the origin".into(),
            ));
        }
        if let RateFamily::Constant { a0 } = rate {
            if !(a0 > 0.0) {
                return Err(Error::ModelValidation(format!(
                    "constant rate a0 = {a0} must be positive"
                )));
            }
        }
        Ok(KacModel { beta, kernel, rate })
    }

    /// Flip rate as a function of the locally averaged field.
    pub fn rate_a(&self, s: f64) -> f64 {
        match self.rate {
            RateFamily::Constant { a0 } => a0,
            RateFamily::StandardCosh => 0.5 / (self.beta * s).cosh(),
        }
    }

    /// Spontaneous magnetization at this temperature.
    pub fn magnetization(&self) -> f64 {
        curie_weiss_magnetization(self.beta).expect("beta > 1 is validated")
    }

    /// Linearization constant `p = beta (1 - m_beta^2)`, strictly below 1.
    pub fn p_constant(&self) -> f64 {
        let m = self.magnetization();
        self.beta * (1.0 - m * m)
    }
}

/// Positive solution of `m = tanh(beta m)` to machine precision.
pub fn curie_weiss_magnetization(beta: f64) -> Result<f64> {
    if !(beta > 1.0) {
        return Err(Error::NoSpontaneousMagnetization(beta));
    }
    // Fixed-point iteration is contracting near the root for beta > 1; polish
    // with Newton to full precision.
    let mut m: f64 = 1.0 - (-beta).exp();
    for _ in 0..200 {
        m = (beta * m).tanh();
    }
    for _ in 0..50 {
        let t = (beta * m).tanh();
        let g = m - t;
        let dg = 1.0 - beta * (1.0 - t * t);
        if dg.abs() < 1e-300 {
            break;
        }
        let step = g / dg;
        m -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    if (m - (beta * m).tanh()).abs() > 1e-13 || m <= 0.0 {
        return Err(Error::NonConvergence(format!(
            "magnetization solve stalled at m = {m} for beta = {beta}"
        )));
    }
    Ok(m)
}

/// Binary entropy-like term `((1+m)/2) ln((1+m)/2) + ((1-m)/2) ln((1-m)/2)`,
/// continuously extended to the endpoints.
pub fn mixing_entropy(m: f64) -> f64 {
    let xlogx = |x: f64| if x <= 0.0 { 0.0 } else { x * x.ln() };
    xlogx((1.0 + m) / 2.0) + xlogx((1.0 - m) / 2.0)
}

/// Mean-field free-energy density `-m^2/2 + beta^{-1} i(m)`.
pub fn free_energy_density(beta: f64, m: f64) -> f64 {
    -0.5 * m * m + mixing_entropy(m) / beta
}

/// Dense polynomial with real coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn antiderivative(&self) -> Poly {
        let mut out = vec![0.0];
        out.extend(self.0.iter().enumerate().map(|(k, &c)| c / (k + 1) as f64));
        Poly(out)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        Poly(
            (0..n)
                .map(|k| {
                    self.0.get(k).copied().unwrap_or(0.0) - other.0.get(k).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }
}

/// Specification of the birth/death reaction pair for the reaction-diffusion model.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub enum ReactionSpec {
    /// Bistable cubic symmetric about 1/2 with wells at `1/2 ± r`,
    /// death rate `D = delta * rho` with `delta = (1/4 - r^2)/2`.
    SymmetricCubic { r: f64 },
    /// Explicit birth and death polynomials.
    Explicit { birth: Poly, death: Poly },
}

/// Validated bistable reaction pair: birth rate `B`, death rate `D`, net
/// reaction `f = B - D` with stable zeros `rho_minus < rho_plus`, and the
/// equal-well potential `W = -\int f`.
#[derive(Debug, Clone)]
pub struct ReactionPair {
    pub birth: Poly,
    pub death: Poly,
    pub net: Poly,
    pub rho_minus: f64,
    pub rho_mid: f64,
    pub rho_plus: f64,
    potential: Poly,
    potential_offset: f64,
}

impl ReactionPair {
    pub fn f(&self, rho: f64) -> f64 {
        self.net.eval(rho)
    }

    /// Double-well potential with `W(rho_minus) = 0`.
    pub fn w(&self, rho: f64) -> f64 {
        self.potential.eval(rho) - self.potential_offset
    }

    /// Derivative of the potential, `W' = -f`.
    pub fn w_prime(&self, rho: f64) -> f64 {
        -self.net.eval(rho)
    }

    /// Curvature of the wells, `-f'(rho_pm)` (equal by construction for the
    /// symmetric cubic; the larger of the two otherwise).
    pub fn gamma(&self) -> f64 {
        let d = self.net.derivative();
        (-d.eval(self.rho_minus)).max(-d.eval(self.rho_plus))
    }

    /// Whether the two wells have equal potential (balanced, zero-speed case).
    pub fn balanced(&self) -> bool {
        (self.w(self.rho_plus) - self.w(self.rho_minus)).abs() < 1e-10
    }
}

fn poly_roots_in_unit_interval(p: &Poly) -> Vec<f64> {
    let n = 4096;
    let mut roots = Vec::new();
    let mut prev = p.eval(0.0);
    for i in 1..=n {
        let x = i as f64 / n as f64;
        let val = p.eval(x);
        if prev == 0.0 {
            roots.push((i - 1) as f64 / n as f64);
        } else if prev * val < 0.0 {
            let (mut a, mut b) = (((i - 1) as f64) / n as f64, x);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if p.eval(a) * p.eval(m) <= 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev = val;
    }
    if p.eval(1.0) == 0.0 {
        roots.push(1.0);
    }
    roots
}

/// Build and validate a reaction pair from a specification.
pub fn make_reaction_pair(spec: &ReactionSpec) -> Result<ReactionPair> {
    let (birth, death) = match spec {
        ReactionSpec::SymmetricCubic { r } => {
            if !(0.0 < *r && *r < 0.5) {
                return Err(Error::ModelValidation(format!(
                    "well half-width r = {r} must lie in (0, 1/2)"
                )));
            }
            // f(rho) = (rho - 1/2)(r^2 - (rho - 1/2)^2), expanded in rho.
            let c = 0.5f64;
            let f = Poly(vec![
                -c * (r * r - c * c),
                (r * r - 3.0 * c * c),
                3.0 * c,
                -1.0,
            ]);
            let delta = (0.25 - r * r) / 2.0;
            let death = Poly(vec![0.0, delta]);
            let birth = f.sub(&Poly(vec![0.0]).sub(&death));
            (birth, death)
        }
        ReactionSpec::Explicit { birth, death } => (birth.clone(), death.clone()),
    };
    // Rates must be nonnegative on the physical range of densities.
    for i in 0..=400 {
        let rho = i as f64 / 400.0;
        if birth.eval(rho) < -1e-12 || death.eval(rho) < -1e-12 {
            return Err(Error::ModelValidation(format!(
                "negative reaction rate at rho = {rho}"
            )));
        }
    }
    let net = birth.sub(&death);
    let roots = poly_roots_in_unit_interval(&net);
    if roots.len() != 3 {
        return Err(Error::ModelValidation(format!(
            "net reaction must have exactly three zeros in [0,1], found {}",
            roots.len()
        )));
    }
    let (rho_minus, rho_mid, rho_plus) = (roots[0], roots[1], roots[2]);
    let d = net.derivative();
    if !(d.eval(rho_minus) < 0.0 && d.eval(rho_plus) < 0.0 && d.eval(rho_mid) > 0.0) {
        return Err(Error::ModelValidation(
            "outer zeros must be stable and the middle zero unstable".into(),
        ));
    }
    let potential = Poly(vec![0.0]).sub(&net).antiderivative();
    let potential_offset = potential.eval(rho_minus);
    Ok(ReactionPair {
        birth,
        death,
        net,
        rho_minus,
        rho_mid,
        rho_plus,
        potential,
        potential_offset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{make_kernel, KernelFamily};

    #[test]
    fn magnetization_solves_fixed_point() {
        let m = curie_weiss_magnetization(2.0).unwrap();
        assert!((m - (2.0 * m).tanh()).abs() < 1e-14);
        assert!((m - 0.9575).abs() < 5e-4, "m = {m}");
    }

    #[test]
    fn magnetization_rejects_high_temperature() {
        assert!(matches!(
            curie_weiss_magnetization(0.9),
            Err(Error::NoSpontaneousMagnetization(_))
        ));
    }

    #[test]
    fn p_constant_below_one() {
        let k = make_kernel(KernelFamily::AnnularBump { scale: 1.0 }, 2, true, true).unwrap();
        let model = KacModel::new(2.0, k, RateFamily::StandardCosh).unwrap();
        let p = model.p_constant();
        assert!(p > 0.0 && p < 1.0);
        assert!((p - 0.1664).abs() < 5e-4, "p = {p}");
    }

    #[test]
    fn cosh_rate_requires_annular_kernel() {
        let k = make_kernel(KernelFamily::Bump { scale: 1.0 }, 2, true, false).unwrap();
        assert!(KacModel::new(2.0, k, RateFamily::StandardCosh).is_err());
    }

    #[test]
    fn free_energy_minimized_at_magnetization() {
        let beta = 2.0;
        let m = curie_weiss_magnetization(beta).unwrap();
        let f0 = free_energy_density(beta, m);
        for dm in [-1e-3, 1e-3] {
            assert!(free_energy_density(beta, m + dm) > f0);
        }
        // Endpoint extension is finite.
        assert!(free_energy_density(beta, 1.0).is_finite());
    }

    #[test]
    fn poly_calculus() {
        let p = Poly(vec![1.0, -2.0, 3.0]);
        assert_eq!(p.eval(2.0), 1.0 - 4.0 + 12.0);
        assert_eq!(p.derivative().0, vec![-2.0, 6.0]);
        assert_eq!(p.antiderivative().derivative().0, p.0);
    }

    #[test]
    fn symmetric_cubic_structure() {
        let pair = make_reaction_pair(&ReactionSpec::SymmetricCubic { r: 0.25 }).unwrap();
        assert!((pair.rho_minus - 0.25).abs() < 1e-9);
        assert!((pair.rho_mid - 0.5).abs() < 1e-9);
        assert!((pair.rho_plus - 0.75).abs() < 1e-9);
        assert!((pair.gamma() - 0.125).abs() < 1e-10);
        assert!(pair.balanced());
        // W(1/2) = r^4 / 4 = 1/1024 and both wells sit at zero.
        assert!((pair.w(0.5) - 1.0 / 1024.0).abs() < 1e-12);
        assert!(pair.w(0.75).abs() < 1e-12);
        // Death rate is delta * rho with delta = 3/32.
        assert!((pair.death.eval(1.0) - 3.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn monostable_pair_rejected() {
        let spec = ReactionSpec::Explicit {
            birth: Poly(vec![0.5]),
            death: Poly(vec![0.0, 1.0]),
        };
        assert!(make_reaction_pair(&spec).is_err());
    }
}
