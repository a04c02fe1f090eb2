//! Sampled one-dimensional profiles, periodic 2-d fields and quadrature helpers.

use crate::error::{Error, Result};

/// A function of one real variable sampled on a uniform symmetric grid
/// `{-cutoff, ..., cutoff}` with constant asymptotic values beyond the cutoff.
#[derive(Debug, Clone)]
pub struct Profile {
    pub cutoff: f64,
    pub spacing: f64,
    pub values: Vec<f64>,
    pub left_limit: f64,
    pub right_limit: f64,
}

impl Profile {
    pub fn from_fn<F: Fn(f64) -> f64>(
        cutoff: f64,
        spacing: f64,
        left_limit: f64,
        right_limit: f64,
        f: F,
    ) -> Self {
        let half = (cutoff / spacing).round() as usize;
        let values = (0..=2 * half)
            .map(|i| f((i as f64 - half as f64) * spacing))
            .collect();
        Profile {
            cutoff: half as f64 * spacing,
            spacing,
            values,
            left_limit,
            right_limit,
        }
    }

    pub fn constant(cutoff: f64, spacing: f64, c: f64) -> Self {
        Self::from_fn(cutoff, spacing, c, c, |_| c)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the grid point at the origin.
    pub fn mid(&self) -> usize {
        self.values.len() / 2
    }

    pub fn xi(&self, i: usize) -> f64 {
        (i as f64 - self.mid() as f64) * self.spacing
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.xi(i))
    }

    /// Sample value with constant extension by the asymptotic limits.
    pub fn at(&self, i: isize) -> f64 {
        if i < 0 {
            self.left_limit
        } else if i as usize >= self.len() {
            self.right_limit
        } else {
            self.values[i as usize]
        }
    }

    /// Cubic (Catmull-Rom) interpolation with constant tails.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= -self.cutoff {
            return if x < -self.cutoff { self.left_limit } else { self.values[0] };
        }
        if x >= self.cutoff {
            return if x > self.cutoff {
                self.right_limit
            } else {
                self.values[self.len() - 1]
            };
        }
        let s = (x + self.cutoff) / self.spacing;
        let i = s.floor() as isize;
        let t = s - i as f64;
        let p0 = self.at(i - 1);
        let p1 = self.at(i);
        let p2 = self.at(i + 1);
        let p3 = self.at(i + 2);
        0.5 * ((2.0 * p1)
            + (-p0 + p2) * t
            + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t
            + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t * t * t)
    }

    /// Central-difference derivative (one-sided ends use the constant tails,
    /// so the end stencils are exact for profiles that have saturated).
    pub fn derivative(&self) -> Profile {
        let n = self.len();
        let mut values = vec![0.0; n];
        for i in 0..n {
            values[i] = (self.at(i as isize + 1) - self.at(i as isize - 1)) / (2.0 * self.spacing);
        }
        Profile {
            cutoff: self.cutoff,
            spacing: self.spacing,
            values,
            left_limit: 0.0,
            right_limit: 0.0,
        }
    }

    /// Fourth-order central-difference derivative with constant-tail stencils.
    pub fn derivative4(&self) -> Profile {
        let n = self.len();
        let mut values = vec![0.0; n];
        for i in 0..n {
            let i = i as isize;
            values[i as usize] = (-self.at(i + 2) + 8.0 * self.at(i + 1) - 8.0 * self.at(i - 1)
                + self.at(i - 2))
                / (12.0 * self.spacing);
        }
        Profile {
            cutoff: self.cutoff,
            spacing: self.spacing,
            values,
            left_limit: 0.0,
            right_limit: 0.0,
        }
    }

    /// Trapezoidal integral over the grid.
    pub fn integrate(&self) -> f64 {
        trapezoid_samples(&self.values, self.spacing)
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Profile {
        Profile {
            cutoff: self.cutoff,
            spacing: self.spacing,
            values: self.values.iter().map(|&v| f(v)).collect(),
            left_limit: f(self.left_limit),
            right_limit: f(self.right_limit),
        }
    }

    pub fn zip<F: Fn(f64, f64) -> f64>(&self, other: &Profile, f: F) -> Result<Profile> {
        if self.len() != other.len() || (self.spacing - other.spacing).abs() > 1e-14 {
            return Err(Error::IncompatibleGrids(
                "profile grids differ in length or spacing".into(),
            ));
        }
        Ok(Profile {
            cutoff: self.cutoff,
            spacing: self.spacing,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            left_limit: f(self.left_limit, other.left_limit),
            right_limit: f(self.right_limit, other.right_limit),
        })
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Composite trapezoid rule on equally spaced samples.
pub fn trapezoid_samples(values: &[f64], h: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    h * (0.5 * values[0] + inner + 0.5 * values[values.len() - 1])
}

/// Composite trapezoid with Richardson refinement check: the panel count is
/// doubled until two successive levels agree within `tol`.
pub fn integrate_refined<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut n = 64usize;
    let eval = |n: usize| -> f64 {
        let h = (b - a) / n as f64;
        let mut s = 0.5 * (f(a) + f(b));
        for i in 1..n {
            s += f(a + i as f64 * h);
        }
        s * h
    };
    let mut prev = eval(n);
    for _ in 0..16 {
        n *= 2;
        let cur = eval(n);
        if (cur - prev).abs() < tol {
            // Richardson extrapolation of the last two trapezoid levels.
            return Ok(cur + (cur - prev) / 3.0);
        }
        prev = cur;
    }
    Err(Error::Quadrature(format!(
        "no convergence to tol {tol:.1e} after refinement to {n} panels"
    )))
}

/// Ordinary least-squares line fit; returns (slope, intercept).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (slope, (sy - slope * sx) / n)
}

/// Scalar field on the unit 2-torus, sampled at cell centers `((i+1/2)/n, (j+1/2)/n)`.
#[derive(Debug, Clone)]
pub struct Field2 {
    pub n: usize,
    pub values: Vec<f64>,
}

impl Field2 {
    pub fn from_fn<F: Fn(f64, f64) -> f64>(n: usize, f: F) -> Self {
        let mut values = Vec::with_capacity(n * n);
        for j in 0..n {
            let y = (j as f64 + 0.5) / n as f64;
            for i in 0..n {
                let x = (i as f64 + 0.5) / n as f64;
                values.push(f(x, y));
            }
        }
        Field2 { n, values }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Field2 {
            n,
            values: vec![c; n * n],
        }
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.n + i]
    }

    #[inline]
    pub fn get_wrapped(&self, i: isize, j: isize) -> f64 {
        let n = self.n as isize;
        let i = i.rem_euclid(n) as usize;
        let j = j.rem_euclid(n) as usize;
        self.values[j * self.n + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[j * self.n + i] = v;
    }

    /// Midpoint-rule integral over the torus.
    pub fn integrate(&self) -> f64 {
        let a2 = self.spacing() * self.spacing();
        a2 * self.values.iter().sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / (self.n * self.n) as f64
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Field2 {
        Field2 {
            n: self.n,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Minimal-image displacement on the unit torus.
#[inline]
pub fn torus_delta(a: f64, b: f64) -> f64 {
    let mut d = a - b;
    while d > 0.5 {
        d -= 1.0;
    }
    while d < -0.5 {
        d += 1.0;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_exact_on_linear() {
        let p = Profile::from_fn(1.0, 0.25, -1.0, 1.0, |x| x);
        assert!(p.integrate().abs() < 1e-15);
    }

    #[test]
    fn refined_quadrature_smooth() {
        let v = integrate_refined(|x: f64| x.cos(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 1.0f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn cubic_interp_reproduces_quadratic() {
        let p = Profile::from_fn(2.0, 0.5, 0.0, 0.0, |x| x * x - x);
        for &x in &[-1.3, -0.7, 0.2, 1.4] {
            assert!((p.eval(x) - (x * x - x)).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn torus_distance_wraps() {
        assert!((torus_delta(0.9, 0.1) - (-0.2)).abs() < 1e-15);
    }

    #[test]
    fn field_mean_midpoint() {
        let f = Field2::from_fn(32, |x, _| (2.0 * std::f64::consts::PI * x).sin());
        assert!(f.mean().abs() < 1e-14);
    }
}
