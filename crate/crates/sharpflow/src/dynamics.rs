//! Time evolution: nonlocal mean-field flow, reaction-diffusion flow,
//! traveling-front linear response, and exact-in-law kinetic Monte Carlo for
//! the two lattice processes, with hydrodynamic comparison helpers.

use crate::action_gk::RadialPath;
use crate::error::{Error, Result};
use crate::grid::{fit_line, Field2, Profile};
use crate::kernels::{convolve_line, Kernel, TorusStencil};
use crate::models::{KacModel, Poly, ReactionPair};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Nonlocal mean-field flow (line domain)
// ---------------------------------------------------------------------------

/// Trajectory of a 1-d line field (profiles with constant tails).
pub struct LineTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Profile>,
    /// Largest clipping applied to keep values in [-1,1]; must stay tiny.
    pub max_clip: f64,
}

/// Right-hand side of the nonlocal flow at one point, in the sign-safe form
/// `2 a(conv) cosh(beta(conv+h)) [tanh(beta(conv+h)) - m]`.
#[inline]
fn nonlocal_rhs(model: &KacModel, conv: f64, m: f64, h: f64) -> f64 {
    let arg = model.beta * (conv + h);
    2.0 * model.rate_a(conv) * arg.cosh() * (arg.tanh() - m)
}

/// Evolve the nonlocal mean-field equation on the line with an external
/// field `h`, explicit Euler. The constant tails are evolved as 0-d ODEs so
/// that under `h != 0` the far field relaxes to the tilted magnetization.
pub fn evolve_nonlocal_line(
    model: &KacModel,
    m0: &Profile,
    h: f64,
    dt: f64,
    t_end: f64,
    frames: usize,
) -> Result<LineTrajectory> {
    if frames < 2 || t_end <= 0.0 || dt <= 0.0 {
        return Err(Error::InvalidParameter(
            "need t_end > 0, dt > 0 and at least two frames".into(),
        ));
    }
    let jt = crate::kernels::reduce_1d(
        &model.kernel,
        m0.spacing,
        crate::kernels::Kernel1DKind::Jtilde,
    );
    let frame_dt = t_end / (frames - 1) as f64;
    let sub = (frame_dt / dt).ceil().max(1.0) as usize;
    let step = frame_dt / sub as f64;
    let mut state = m0.clone();
    let mut times = Vec::with_capacity(frames);
    let mut states = Vec::with_capacity(frames);
    let mut max_clip = 0.0f64;
    times.push(0.0);
    states.push(state.clone());
    for k in 1..frames {
        for _ in 0..sub {
            let conv = convolve_line(&jt, &state)?;
            for (v, &c) in state.values.iter_mut().zip(&conv.values) {
                *v += step * nonlocal_rhs(model, c, *v, h);
                if v.abs() > 1.0 {
                    max_clip = max_clip.max(v.abs() - 1.0);
                    *v = v.clamp(-1.0, 1.0);
                }
            }
            state.left_limit += step * nonlocal_rhs(model, state.left_limit, state.left_limit, h);
            state.right_limit +=
                step * nonlocal_rhs(model, state.right_limit, state.right_limit, h);
        }
        if max_clip > 1e-12 {
            return Err(Error::Numerical(format!(
                "nonlocal flow left [-1,1] by {max_clip:e}; reduce dt"
            )));
        }
        times.push(k as f64 * frame_dt);
        states.push(state.clone());
    }
    Ok(LineTrajectory {
        times,
        states,
        max_clip,
    })
}

/// Zero crossing of a monotone-through-zero profile by linear interpolation,
/// searching outward from the grid midpoint.
pub fn zero_crossing(p: &Profile) -> Result<f64> {
    let n = p.len();
    for off in 0..n {
        for idx in [p.mid() as isize - off as isize, p.mid() as isize + off as isize] {
            if idx < 0 || (idx + 1) as usize >= n {
                continue;
            }
            let (a, b) = (p.values[idx as usize], p.values[idx as usize + 1]);
            if a == 0.0 {
                return Ok(p.xi(idx as usize));
            }
            if a * b < 0.0 {
                return Ok(p.xi(idx as usize) + p.spacing * a / (a - b));
            }
        }
    }
    Err(Error::Numerical("no zero crossing in profile".into()))
}

/// Traveling-front speed under external field `h`: evolve the instanton and
/// fit the zero-crossing position over the second half of the time window.
/// Positive speed means the front moves toward larger `xi` (the `-` phase
/// invades).
pub fn front_speed(
    model: &KacModel,
    m0: &Profile,
    h: f64,
    t_end: f64,
    dt: f64,
) -> Result<f64> {
    let frames = 41;
    let traj = evolve_nonlocal_line(model, m0, h, dt, t_end, frames)?;
    let mut ts = Vec::new();
    let mut xs = Vec::new();
    for (k, p) in traj.states.iter().enumerate() {
        if k >= frames / 2 {
            let x = zero_crossing(p)?;
            if x.abs() > 0.5 * p.cutoff {
                return Err(Error::Numerical(
                    "front reached the domain boundary; enlarge the grid".into(),
                ));
            }
            ts.push(traj.times[k]);
            xs.push(x);
        }
    }
    let (slope, _) = fit_line(&ts, &xs);
    Ok(slope)
}

/// Linear-response summary of the front speed.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FrontResponse {
    pub h_values: Vec<f64>,
    pub speeds: Vec<f64>,
    /// Least-squares slope of v(h) through the origin.
    pub slope: f64,
    /// max |v(h) + v(-h)| / max |v| over the probed pairs.
    pub odd_defect: f64,
}

/// Measure v(h) at `+-h` for each supplied positive field value and fit the
/// linear response v = slope * h.
pub fn front_response(
    model: &KacModel,
    m0: &Profile,
    hs: &[f64],
    t_end: f64,
    dt: f64,
) -> Result<FrontResponse> {
    let mut h_values = Vec::new();
    let mut speeds = Vec::new();
    for &h in hs {
        for sign in [1.0, -1.0] {
            h_values.push(sign * h);
            speeds.push(front_speed(model, m0, sign * h, t_end, dt)?);
        }
    }
    let num: f64 = h_values.iter().zip(&speeds).map(|(h, v)| h * v).sum();
    let den: f64 = h_values.iter().map(|h| h * h).sum();
    let slope = num / den;
    let vmax = speeds.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut odd = 0.0f64;
    for i in (0..h_values.len()).step_by(2) {
        odd = odd.max((speeds[i] + speeds[i + 1]).abs());
    }
    Ok(FrontResponse {
        h_values,
        speeds,
        slope,
        odd_defect: if vmax > 0.0 { odd / vmax } else { 0.0 },
    })
}

// ---------------------------------------------------------------------------
// Nonlocal mean-field flow (2-d torus, rescaled) and reaction-diffusion
// ---------------------------------------------------------------------------

/// Trajectory of a 2-d torus field.
pub struct TorusTrajectory {
    pub times: Vec<f64>,
    pub fields: Vec<Field2>,
    pub eps: f64,
}

/// Evolve the rescaled nonlocal flow `dm/dt = eps^-2 * 2 a(J_eps*m)
/// cosh(beta J_eps*m) [tanh(beta J_eps*m) - m]` on the unit torus.
pub fn evolve_nonlocal_torus(
    model: &KacModel,
    f0: &Field2,
    eps: f64,
    t_end: f64,
    frames: usize,
) -> Result<TorusTrajectory> {
    if frames < 2 || t_end <= 0.0 {
        return Err(Error::InvalidParameter(
            "need t_end > 0 and at least two frames".into(),
        ));
    }
    let stencil = TorusStencil::new(&model.kernel, eps, f0.n)?;
    let dt_stable = 0.2 * eps * eps;
    let frame_dt = t_end / (frames - 1) as f64;
    let sub = (frame_dt / dt_stable).ceil().max(1.0) as usize;
    let step = frame_dt / sub as f64;
    let inv_eps2 = 1.0 / (eps * eps);
    let mut state = f0.clone();
    let mut times = vec![0.0];
    let mut fields = vec![state.clone()];
    for k in 1..frames {
        for _ in 0..sub {
            let conv = stencil.apply(&state);
            for (v, &c) in state.values.iter_mut().zip(&conv.values) {
                *v += step * inv_eps2 * nonlocal_rhs(model, c, *v, 0.0);
                *v = v.clamp(-1.0, 1.0);
            }
        }
        times.push(k as f64 * frame_dt);
        fields.push(state.clone());
    }
    Ok(TorusTrajectory {
        times,
        fields,
        eps,
    })
}

/// Evolve the rescaled reaction-diffusion equation
/// `du/dt = (1/2) lap u + (B(u) - D(u))/eps^2` on the unit torus
/// (pass eps = 1 for the unrescaled equation).
pub fn evolve_rd_torus(
    pair: &ReactionPair,
    f0: &Field2,
    eps: f64,
    t_end: f64,
    frames: usize,
) -> Result<TorusTrajectory> {
    if frames < 2 || t_end <= 0.0 {
        return Err(Error::InvalidParameter(
            "need t_end > 0 and at least two frames".into(),
        ));
    }
    let n = f0.n;
    let a = 1.0 / n as f64;
    let fp_max = reaction_stiffness(pair);
    let dt_stable = (0.2 * a * a).min(0.1 * eps * eps / fp_max);
    let frame_dt = t_end / (frames - 1) as f64;
    let sub = (frame_dt / dt_stable).ceil().max(1.0) as usize;
    let step = frame_dt / sub as f64;
    let inv = 1.0 / (eps * eps);
    let ni = n as isize;
    let mut state = f0.clone();
    let mut next = f0.clone();
    let mut times = vec![0.0];
    let mut fields = vec![state.clone()];
    for k in 1..frames {
        for _ in 0..sub {
            for j in 0..ni {
                for i in 0..ni {
                    let idx = (j * ni + i) as usize;
                    let u = state.values[idx];
                    let lap = (state.get_wrapped(i + 1, j)
                        + state.get_wrapped(i - 1, j)
                        + state.get_wrapped(i, j + 1)
                        + state.get_wrapped(i, j - 1)
                        - 4.0 * u)
                        / (a * a);
                    next.values[idx] =
                        (u + step * (0.5 * lap + inv * pair.net.eval(u))).clamp(0.0, 1.0);
                }
            }
            std::mem::swap(&mut state, &mut next);
        }
        times.push(k as f64 * frame_dt);
        fields.push(state.clone());
    }
    Ok(TorusTrajectory {
        times,
        fields,
        eps,
    })
}

fn reaction_stiffness(pair: &ReactionPair) -> f64 {
    let d = pair.net.derivative();
    let mut m = 1e-12f64;
    for k in 0..=200 {
        m = m.max(d.eval(k as f64 / 200.0).abs());
    }
    m
}

/// Effective circle radius of the super-level set `{field > level}`,
/// from its area fraction.
pub fn radius_from_area(field: &Field2, level: f64) -> f64 {
    let count = field.values.iter().filter(|&&v| v > level).count();
    let area = count as f64 / (field.n * field.n) as f64;
    (area / std::f64::consts::PI).sqrt()
}

/// Evolve the radial reaction-diffusion equation
/// `du/dt = (1/2)(1/r)(r u')' + (B(u) - D(u))/eps^2`
/// by forward Euler with Neumann ends, using the same flux-form stencil as
/// the action solver so a stored path satisfies the discrete equation to
/// time-sampling accuracy.
pub fn evolve_rd_radial(
    pair: &ReactionPair,
    eps: f64,
    u0: &[f64],
    dr: f64,
    t_end: f64,
    frames: usize,
) -> Result<RadialPath> {
    if frames < 2 || t_end <= 0.0 {
        return Err(Error::InvalidParameter(
            "need t_end > 0 and at least two frames".into(),
        ));
    }
    let nr = u0.len();
    let fp_max = reaction_stiffness(pair);
    let dt_stable = (0.5 * dr * dr).min(0.1 * eps * eps / fp_max);
    let frame_dt = t_end / (frames - 1) as f64;
    let sub = (frame_dt / dt_stable).ceil().max(1.0) as usize;
    let dt = frame_dt / sub as f64;

    let mut u = u0.to_vec();
    let mut values = Vec::with_capacity(frames);
    let mut times = Vec::with_capacity(frames);
    values.push(u.clone());
    times.push(0.0);
    let mut rhs = vec![0.0; nr];
    for k in 1..frames {
        for _ in 0..sub {
            for i in 0..nr {
                let r = (i as f64 + 0.5) * dr;
                let up = if i + 1 < nr { u[i + 1] } else { u[i] };
                let um = if i > 0 { u[i - 1] } else { u[i] };
                let rp = r + 0.5 * dr;
                let rm = r - 0.5 * dr;
                let lap = (rp * (up - u[i]) - rm * (u[i] - um)) / (r * dr * dr);
                rhs[i] = 0.5 * lap + pair.net.eval(u[i]) / (eps * eps);
            }
            for i in 0..nr {
                u[i] += dt * rhs[i];
            }
        }
        values.push(u.clone());
        times.push(k as f64 * frame_dt);
    }
    let radius: Vec<f64> = values
        .iter()
        .map(|row| level_crossing(row, dr, 0.5 * (pair.rho_minus + pair.rho_plus)))
        .collect();
    let a_coef = vec![0.0; frames];
    Ok(RadialPath {
        eps,
        times,
        dr,
        r_max: nr as f64 * dr,
        values,
        radius,
        a_coef,
    })
}

/// Radius where a decreasing-in-r radial profile crosses `level`
/// (linear interpolation; 0 if no crossing).
pub fn level_crossing(row: &[f64], dr: f64, level: f64) -> f64 {
    for i in 1..row.len() {
        let (a, b) = (row[i - 1], row[i]);
        if (a - level) * (b - level) <= 0.0 && a != b {
            let s = (a - level) / (a - b);
            return (i as f64 - 0.5 + s) * dr;
        }
    }
    0.0
}

// ---------------------------------------------------------------------------
// 1-d ring PDEs (for lattice comparisons)
// ---------------------------------------------------------------------------

/// Trajectory of a sampled 1-d periodic field.
pub struct RingTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub spacing: f64,
}

/// Periodic 1-d convolution weights of a d=1 kernel on a ring of `n` cells
/// (unit circumference), renormalized to the kernel mass.
pub struct RingKernel {
    pub radius: usize,
    /// Weights for offsets `-radius ..= radius`, including the cell width.
    pub weights: Vec<f64>,
}

impl RingKernel {
    pub fn new(kernel: &Kernel, n: usize) -> Result<RingKernel> {
        if kernel.dim != 1 {
            return Err(Error::InvalidParameter(
                "ring convolution needs a 1-d kernel".into(),
            ));
        }
        let h = 1.0 / n as f64;
        let radius = (kernel.support_radius() / h).ceil() as usize;
        // radius = n/2 is acceptable: the kernel vanishes at its support
        // edge, so the minimal-image overlap there carries zero weight.
        if radius > n / 2 {
            return Err(Error::UnderResolved {
                spacing: h,
                required: kernel.support_radius() / (n as f64 / 2.0),
            });
        }
        let mut weights: Vec<f64> = (0..=2 * radius)
            .map(|i| h * kernel.eval(((i as isize - radius as isize) as f64 * h).abs()))
            .collect();
        let sum: f64 = weights.iter().sum();
        if sum > 0.0 {
            for w in &mut weights {
                *w *= kernel.mass / sum;
            }
        }
        Ok(RingKernel { radius, weights })
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = v.len() as isize;
        let r = self.radius as isize;
        (0..n)
            .map(|i| {
                let mut s = 0.0;
                for d in -r..=r {
                    s += self.weights[(d + r) as usize] * v[(i + d).rem_euclid(n) as usize];
                }
                s
            })
            .collect()
    }
}

/// Evolve the nonlocal mean-field flow on the unit ring (unrescaled).
pub fn evolve_nonlocal_ring(
    model: &KacModel,
    m0: &[f64],
    t_end: f64,
    frames: usize,
) -> Result<RingTrajectory> {
    if frames < 2 || t_end <= 0.0 {
        return Err(Error::InvalidParameter(
            "need t_end > 0 and at least two frames".into(),
        ));
    }
    let n = m0.len();
    let ring = RingKernel::new(&model.kernel, n)?;
    let dt_stable = 0.05 / (1.0 + model.beta);
    let frame_dt = t_end / (frames - 1) as f64;
    let sub = (frame_dt / dt_stable).ceil().max(1.0) as usize;
    let step = frame_dt / sub as f64;
    let mut state = m0.to_vec();
    let mut times = vec![0.0];
    let mut states = vec![state.clone()];
    for k in 1..frames {
        for _ in 0..sub {
            let conv = ring.apply(&state);
            for (v, &c) in state.iter_mut().zip(&conv) {
                *v = (*v + step * nonlocal_rhs(model, c, *v, 0.0)).clamp(-1.0, 1.0);
            }
        }
        times.push(k as f64 * frame_dt);
        states.push(state.clone());
    }
    Ok(RingTrajectory {
        times,
        states,
        spacing: 1.0 / n as f64,
    })
}

/// Evolve the unrescaled reaction-diffusion equation on the unit ring.
pub fn evolve_rd_ring(
    pair: &ReactionPair,
    u0: &[f64],
    t_end: f64,
    frames: usize,
) -> Result<RingTrajectory> {
    if frames < 2 || t_end <= 0.0 {
        return Err(Error::InvalidParameter(
            "need t_end > 0 and at least two frames".into(),
        ));
    }
    let n = u0.len();
    let h = 1.0 / n as f64;
    let dt_stable = (0.2 * h * h).min(0.1 / reaction_stiffness(pair));
    let frame_dt = t_end / (frames - 1) as f64;
    let sub = (frame_dt / dt_stable).ceil().max(1.0) as usize;
    let step = frame_dt / sub as f64;
    let mut state = u0.to_vec();
    let mut next = u0.to_vec();
    let mut times = vec![0.0];
    let mut states = vec![state.clone()];
    for k in 1..frames {
        for _ in 0..sub {
            for i in 0..n {
                let up = state[(i + 1) % n];
                let um = state[(i + n - 1) % n];
                let lap = (up + um - 2.0 * state[i]) / (h * h);
                next[i] = (state[i] + step * (0.5 * lap + pair.net.eval(state[i])))
                    .clamp(0.0, 1.0);
            }
            std::mem::swap(&mut state, &mut next);
        }
        times.push(k as f64 * frame_dt);
        states.push(state.clone());
    }
    Ok(RingTrajectory {
        times,
        states,
        spacing: h,
    })
}

// ---------------------------------------------------------------------------
// Fenwick tree for rate sampling
// ---------------------------------------------------------------------------

struct Fenwick {
    tree: Vec<f64>,
    rates: Vec<f64>,
}

impl Fenwick {
    fn new(rates: Vec<f64>) -> Fenwick {
        let n = rates.len();
        let mut f = Fenwick {
            tree: vec![0.0; n + 1],
            rates: vec![0.0; n],
        };
        for (i, &r) in rates.iter().enumerate() {
            f.set(i, r);
        }
        f
    }

    fn set(&mut self, i: usize, rate: f64) {
        let delta = rate - self.rates[i];
        self.rates[i] = rate;
        let mut idx = i + 1;
        while idx < self.tree.len() {
            self.tree[idx] += delta;
            idx += idx & idx.wrapping_neg();
        }
    }

    fn fast_total(&self) -> f64 {
        // Prefix sum over the whole array via the tree.
        let mut idx = self.rates.len();
        let mut s = 0.0;
        while idx > 0 {
            s += self.tree[idx];
            idx -= idx & idx.wrapping_neg();
        }
        s
    }

    /// Index with prefix sum just exceeding `target` (target in [0, total)).
    fn sample(&self, mut target: f64) -> usize {
        let n = self.rates.len();
        let mut pos = 0usize;
        let mut bit = n.next_power_of_two();
        while bit > 0 {
            let next = pos + bit;
            if next < self.tree.len() && self.tree[next] < target {
                target -= self.tree[next];
                pos = next;
            }
            bit >>= 1;
        }
        pos.min(n - 1)
    }
}

// ---------------------------------------------------------------------------
// Glauber dynamics for the nonlocal spin model (d = 1)
// ---------------------------------------------------------------------------

/// Snapshot trajectory of a spin lattice.
pub struct SpinTrajectory {
    pub times: Vec<f64>,
    pub spins: Vec<Vec<i8>>,
    pub gamma: f64,
    pub events: usize,
}

/// Continuous-time Glauber simulation of the 1-d spin chain with scaled
/// interaction `gamma J(gamma (i-j))`, rates `a(f_i) exp(-beta f_i s_i)`.
/// Exact in law (Gillespie with a rate tree); deterministic per seed.
pub fn simulate_glauber_kac(
    model: &KacModel,
    init: &[i8],
    t_end: f64,
    frames: usize,
    seed: u64,
) -> Result<SpinTrajectory> {
    if model.kernel.dim != 1 {
        return Err(Error::InvalidParameter(
            "spin-chain simulation needs a 1-d kernel".into(),
        ));
    }
    if frames < 2 || t_end <= 0.0 {
        return Err(Error::InvalidParameter(
            "need t_end > 0 and at least two frames".into(),
        ));
    }
    let n = init.len();
    let gamma = 1.0 / n as f64;
    let range = (model.kernel.support_radius() / gamma).ceil() as isize;
    if range as usize > n / 2 {
        return Err(Error::InvalidParameter(
            "interaction range exceeds half the chain; increase sites".into(),
        ));
    }
    // Tabulated couplings gamma * J(gamma * d) for |d| <= range (J(0) = 0 for
    // the cosh family is inherited from the kernel).
    let coupling: Vec<f64> = (0..=range)
        .map(|d| gamma * model.kernel.eval((d as f64 * gamma).abs()))
        .collect();
    let mut spins = init.to_vec();
    // Local fields f_i = sum_j gamma J(gamma(i-j)) s_j.
    let mut field = vec![0.0f64; n];
    for i in 0..n {
        let mut s = 0.0;
        for d in 1..=range {
            s += coupling[d as usize]
                * (spins[(i as isize + d).rem_euclid(n as isize) as usize] as f64
                    + spins[(i as isize - d).rem_euclid(n as isize) as usize] as f64);
        }
        s += coupling[0] * spins[i] as f64;
        field[i] = s;
    }
    let rate_of = |f: f64, s: i8| -> f64 {
        model.rate_a(f) * (-model.beta * f * s as f64).exp()
    };
    let rates: Vec<f64> = (0..n).map(|i| rate_of(field[i], spins[i])).collect();
    let mut tree = Fenwick::new(rates);

    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let frame_dt = t_end / (frames - 1) as f64;
    let mut t = 0.0f64;
    let mut next_frame = 1usize;
    let mut times = vec![0.0];
    let mut snaps = vec![spins.clone()];
    let mut events = 0usize;
    loop {
        let total = tree.fast_total();
        let wait = if total > 0.0 {
            -(1.0 - rng.gen::<f64>()).ln() / total
        } else {
            f64::INFINITY
        };
        let t_next = t + wait;
        while next_frame < frames && (next_frame as f64) * frame_dt <= t_next {
            times.push(next_frame as f64 * frame_dt);
            snaps.push(spins.clone());
            next_frame += 1;
        }
        if next_frame >= frames {
            break;
        }
        t = t_next;
        let i = tree.sample(rng.gen::<f64>() * total);
        let old = spins[i];
        spins[i] = -old;
        events += 1;
        // A flip at i changes fields within kernel range.
        for d in -range..=range {
            let j = (i as isize + d).rem_euclid(n as isize) as usize;
            field[j] += coupling[d.unsigned_abs().min(range as usize)]
                * (spins[i] as f64 - old as f64);
            tree.set(j, rate_of(field[j], spins[j]));
        }
        if events % (1 << 20) == 0 {
            // Rebuild against float drift on long runs.
            let rates: Vec<f64> = (0..n).map(|k| rate_of(field[k], spins[k])).collect();
            tree = Fenwick::new(rates);
        }
    }
    Ok(SpinTrajectory {
        times,
        spins: snaps,
        gamma,
        events,
    })
}

/// Exact Gibbs check on a tiny chain: long-run time-weighted occupation of
/// all `2^n` states against the exact Gibbs weights; returns the total
/// variation distance.
pub fn gibbs_tv_check(model: &KacModel, n: usize, t_end: f64, seed: u64) -> Result<f64> {
    if n > 16 {
        return Err(Error::InvalidParameter(
            "exhaustive Gibbs check limited to 16 sites".into(),
        ));
    }
    let gamma = 1.0 / n as f64;
    // Exact Gibbs: H(s) = -1/2 sum_{ij} gamma J(gamma(i-j)) s_i s_j.
    let states = 1usize << n;
    let mut weights = vec![0.0f64; states];
    let mut z = 0.0;
    for code in 0..states {
        let s: Vec<f64> = (0..n)
            .map(|i| if code >> i & 1 == 1 { 1.0 } else { -1.0 })
            .collect();
        let mut energy = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let mut d = (i as isize - j as isize).rem_euclid(n as isize);
                    if d > n as isize / 2 {
                        d = n as isize - d;
                    }
                    energy -= 0.5 * gamma * model.kernel.eval((d as f64 * gamma).abs())
                        * s[i]
                        * s[j];
                }
            }
        }
        weights[code] = (-model.beta * energy).exp();
        z += weights[code];
    }
    for w in &mut weights {
        *w /= z;
    }
    // Time-weighted empirical occupation from one long trajectory.
    let init: Vec<i8> = (0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
    // Reuse the event loop with dense frames: instead, run a dedicated pass
    // accumulating holding times exactly.
    let mut occupancy = vec![0.0f64; states];
    let model_rate = |f: f64, s: i8| model.rate_a(f) * (-model.beta * f * s as f64).exp();
    let coupling: Vec<f64> = (0..=(n as isize / 2))
        .map(|d| gamma * model.kernel.eval((d as f64 * gamma).abs()))
        .collect();
    let close = |d: isize| -> f64 {
        let dd = d.rem_euclid(n as isize);
        let dd = dd.min(n as isize - dd) as usize;
        if dd < coupling.len() {
            coupling[dd]
        } else {
            0.0
        }
    };
    let mut spins = init;
    let field_of = |spins: &[i8], i: usize| -> f64 {
        let mut f = 0.0;
        for j in 0..n {
            if j != i {
                f += close(i as isize - j as isize) * spins[j] as f64;
            }
        }
        f
    };
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let mut t = 0.0;
    while t < t_end {
        let rates: Vec<f64> = (0..n)
            .map(|i| model_rate(field_of(&spins, i), spins[i]))
            .collect();
        let total: f64 = rates.iter().sum();
        let wait = -(1.0 - rng.gen::<f64>()).ln() / total;
        let code: usize = spins
            .iter()
            .enumerate()
            .map(|(i, &s)| if s == 1 { 1usize << i } else { 0 })
            .sum();
        occupancy[code] += wait.min(t_end - t);
        t += wait;
        let mut target = rng.gen::<f64>() * total;
        let mut pick = n - 1;
        for (i, &r) in rates.iter().enumerate() {
            if target < r {
                pick = i;
                break;
            }
            target -= r;
        }
        spins[pick] = -spins[pick];
    }
    let mass: f64 = occupancy.iter().sum();
    let tv: f64 = occupancy
        .iter()
        .zip(&weights)
        .map(|(o, w)| (o / mass - w).abs())
        .sum::<f64>()
        / 2.0;
    Ok(tv)
}

/// Block averages of a lattice field (spins or occupations as f64).
pub fn coarse_grain(values: &[f64], blocks: usize) -> Vec<f64> {
    let n = values.len();
    (0..blocks)
        .map(|b| {
            let lo = b * n / blocks;
            let hi = (b + 1) * n / blocks;
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Mean absolute difference of two equally long sample vectors.
pub fn l1_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

// ---------------------------------------------------------------------------
// Glauber + Kawasaki lattice gas (d = 1)
// ---------------------------------------------------------------------------

/// Strictly positive local flip rate on a window of `2*half_width + 1` sites.
/// `table[mask]` with bit `k` of the mask holding the occupation at offset
/// `k - half_width`.
#[derive(Debug, Clone)]
pub struct LocalRate {
    pub half_width: usize,
    pub table: Vec<f64>,
}

impl LocalRate {
    pub fn new(half_width: usize, table: Vec<f64>) -> Result<LocalRate> {
        if table.len() != 1 << (2 * half_width + 1) {
            return Err(Error::InvalidParameter(format!(
                "rate table needs {} entries",
                1 << (2 * half_width + 1)
            )));
        }
        if table.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidParameter("rates must be nonnegative".into()));
        }
        Ok(LocalRate { half_width, table })
    }

    pub fn constant(c: f64) -> LocalRate {
        LocalRate {
            half_width: 0,
            table: vec![c; 2],
        }
    }

    fn window_mask(&self, occ: &[u8], i: usize) -> usize {
        let n = occ.len() as isize;
        let w = self.half_width as isize;
        let mut mask = 0usize;
        for (bit, d) in (-w..=w).enumerate() {
            if occ[(i as isize + d).rem_euclid(n) as usize] == 1 {
                mask |= 1 << bit;
            }
        }
        mask
    }

    pub fn eval(&self, occ: &[u8], i: usize) -> f64 {
        self.table[self.window_mask(occ, i)]
    }
}

/// Nearest-neighbor rate with a bistable hydrodynamic limit: the derived
/// reaction term is `2 (1/2 - rho)((rho - 1/2)^2 - 1/16)`, a symmetric cubic
/// with stable zeros 1/4 and 3/4.
pub fn bistable_local_rate() -> LocalRate {
    // c(x, mid, y) = a + b (x + y) + e x y with separate coefficients for
    // mid = 0 (birth branch) and mid = 1 (death branch).
    let c0 = |x: f64, y: f64| 0.1875 + 0.1 * (x + y) + 2.2 * x * y;
    let c1 = |x: f64, y: f64| 1.3875 - 0.5 * (x + y) - 0.2 * x * y;
    let mut table = vec![0.0; 8];
    for mask in 0..8usize {
        let x = (mask & 1) as f64;
        let mid = mask >> 1 & 1;
        let y = (mask >> 2 & 1) as f64;
        table[mask] = if mid == 0 { c0(x, y) } else { c1(x, y) };
    }
    LocalRate {
        half_width: 1,
        table,
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Exact birth/death polynomials of a local rate by enumeration over window
/// configurations with Bernoulli(rho) weights:
/// `B(rho) = E[(1 - eta_0) c]`, `D(rho) = E[eta_0 c]`.
pub fn derive_bd(rate: &LocalRate) -> (Poly, Poly) {
    let w = rate.half_width;
    let sites = 2 * w + 1;
    let deg = sites + 1;
    let mut b = vec![0.0; deg];
    let mut d = vec![0.0; deg];
    for mask in 0..(1usize << sites) {
        // Probability of the window as a polynomial in rho.
        let mut p = vec![1.0];
        for bit in 0..sites {
            let occupied = mask >> bit & 1 == 1;
            p = poly_mul(&p, if occupied { &[0.0, 1.0] } else { &[1.0, -1.0] });
        }
        let mid_occupied = mask >> w & 1 == 1;
        let target = if mid_occupied { &mut d } else { &mut b };
        for (k, &c) in p.iter().enumerate() {
            target[k] += rate.table[mask] * c;
        }
    }
    (Poly(b), Poly(d))
}

/// Snapshot trajectory of the lattice gas.
pub struct GkTrajectory {
    pub times: Vec<f64>,
    pub occupations: Vec<Vec<u8>>,
    pub events_glauber: usize,
    pub events_kawasaki: usize,
}

/// Continuous-time Glauber + Kawasaki simulation on the 1-d ring with `n`
/// sites: flips at local rate `c`, nearest-neighbor exchanges at rate
/// `n^2 / 2` per bond (diffusive acceleration; only discordant bonds are
/// scheduled since concordant exchanges are no-ops in law). Set
/// `glauber_on = false` for the pure conservative dynamics.
pub fn simulate_gk(
    rate: &LocalRate,
    init: &[u8],
    t_end: f64,
    frames: usize,
    seed: u64,
    glauber_on: bool,
) -> Result<GkTrajectory> {
    if frames < 2 || t_end <= 0.0 {
        return Err(Error::InvalidParameter(
            "need t_end > 0 and at least two frames".into(),
        ));
    }
    let n = init.len();
    let mut occ = init.to_vec();
    let exchange_rate = (n as f64).powi(2) / 2.0;
    // Discordant bond set: bond i is (i, i+1 mod n).
    let mut disc_list: Vec<usize> = Vec::new();
    let mut disc_pos: Vec<usize> = vec![usize::MAX; n];
    let add_bond = |list: &mut Vec<usize>, pos: &mut Vec<usize>, b: usize| {
        if pos[b] == usize::MAX {
            pos[b] = list.len();
            list.push(b);
        }
    };
    let remove_bond = |list: &mut Vec<usize>, pos: &mut Vec<usize>, b: usize| {
        let p = pos[b];
        if p != usize::MAX {
            let last = *list.last().unwrap();
            list[p] = last;
            pos[last] = p;
            list.pop();
            pos[b] = usize::MAX;
        }
    };
    for b in 0..n {
        if occ[b] != occ[(b + 1) % n] {
            add_bond(&mut disc_list, &mut disc_pos, b);
        }
    }
    let glauber_rates: Vec<f64> = (0..n)
        .map(|i| if glauber_on { rate.eval(&occ, i) } else { 0.0 })
        .collect();
    let mut tree = Fenwick::new(glauber_rates);

    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let frame_dt = t_end / (frames - 1) as f64;
    let mut t = 0.0f64;
    let mut next_frame = 1usize;
    let mut times = vec![0.0];
    let mut snaps = vec![occ.clone()];
    let mut ev_g = 0usize;
    let mut ev_k = 0usize;
    let w = rate.half_width as isize;
    loop {
        let wg = if glauber_on { tree.fast_total() } else { 0.0 };
        let wk = exchange_rate * disc_list.len() as f64;
        let total = wg + wk;
        let wait = if total > 0.0 {
            -(1.0 - rng.gen::<f64>()).ln() / total
        } else {
            f64::INFINITY
        };
        let t_next = t + wait;
        while next_frame < frames && (next_frame as f64) * frame_dt <= t_next {
            times.push(next_frame as f64 * frame_dt);
            snaps.push(occ.clone());
            next_frame += 1;
        }
        if next_frame >= frames {
            break;
        }
        t = t_next;
        let touched: [isize; 2];
        if rng.gen::<f64>() * total < wk {
            // Kawasaki exchange at a uniformly chosen discordant bond.
            let b = disc_list[rng.gen_range(0..disc_list.len())];
            let j = (b + 1) % n;
            occ.swap(b, j);
            ev_k += 1;
            touched = [b as isize, j as isize];
        } else {
            let i = tree.sample(rng.gen::<f64>() * wg);
            occ[i] = 1 - occ[i];
            ev_g += 1;
            touched = [i as isize, i as isize];
        }
        // Refresh discordance and Glauber rates near the touched sites.
        let lo = touched[0].min(touched[1]) - 1;
        let hi = touched[0].max(touched[1]) + 1;
        for b in lo..hi + 1 {
            let bu = b.rem_euclid(n as isize) as usize;
            if occ[bu] != occ[(bu + 1) % n] {
                add_bond(&mut disc_list, &mut disc_pos, bu);
            } else {
                remove_bond(&mut disc_list, &mut disc_pos, bu);
            }
        }
        if glauber_on {
            for s in (lo - w)..(hi + w + 1) {
                let su = s.rem_euclid(n as isize) as usize;
                tree.set(su, rate.eval(&occ, su));
            }
        }
        if (ev_g + ev_k) % (1 << 22) == 0 && glauber_on {
            let rates: Vec<f64> = (0..n).map(|i| rate.eval(&occ, i)).collect();
            tree = Fenwick::new(rates);
        }
    }
    Ok(GkTrajectory {
        times,
        occupations: snaps,
        events_glauber: ev_g,
        events_kawasaki: ev_k,
    })
}

// ---------------------------------------------------------------------------
// Hydrodynamic comparison helpers
// ---------------------------------------------------------------------------

/// Mean L1 distance (over seeds) between the coarse-grained spin chain and
/// the nonlocal mean-field flow at time `t_end`, from smooth initial data.
pub fn kac_hydro_error(
    model: &KacModel,
    n_sites: usize,
    blocks: usize,
    t_end: f64,
    seeds: &[u64],
) -> Result<f64> {
    let m0 = |x: f64| 0.9 * model.magnetization() * (std::f64::consts::TAU * x).cos();
    let n_pde = 512;
    let pde0: Vec<f64> = (0..n_pde)
        .map(|i| m0((i as f64 + 0.5) / n_pde as f64))
        .collect();
    let pde = evolve_nonlocal_ring(model, &pde0, t_end, 2)?;
    let pde_blocks = coarse_grain(pde.states.last().unwrap(), blocks);
    let mut err = 0.0;
    for &seed in seeds {
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed ^ 0x9e37);
        let init: Vec<i8> = (0..n_sites)
            .map(|i| {
                let p = 0.5 * (1.0 + m0((i as f64 + 0.5) / n_sites as f64));
                if rng.gen::<f64>() < p {
                    1
                } else {
                    -1
                }
            })
            .collect();
        let traj = simulate_glauber_kac(model, &init, t_end, 2, seed)?;
        let last: Vec<f64> = traj
            .spins
            .last()
            .unwrap()
            .iter()
            .map(|&s| s as f64)
            .collect();
        err += l1_error(&coarse_grain(&last, blocks), &pde_blocks);
    }
    Ok(err / seeds.len() as f64)
}

/// Mean L1 distance (over seeds) between the coarse-grained lattice gas and
/// the reaction-diffusion flow at time `t_end`, from smooth initial data.
pub fn gk_hydro_error(
    rate: &LocalRate,
    pair: &ReactionPair,
    n_sites: usize,
    blocks: usize,
    t_end: f64,
    seeds: &[u64],
) -> Result<f64> {
    let u0 = |x: f64| 0.5 + 0.35 * (std::f64::consts::TAU * x).sin();
    let n_pde = 512;
    let pde0: Vec<f64> = (0..n_pde)
        .map(|i| u0((i as f64 + 0.5) / n_pde as f64))
        .collect();
    let pde = evolve_rd_ring(pair, &pde0, t_end, 2)?;
    let pde_blocks = coarse_grain(pde.states.last().unwrap(), blocks);
    let mut err = 0.0;
    for &seed in seeds {
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed ^ 0x51f1);
        let init: Vec<u8> = (0..n_sites)
            .map(|i| {
                let p = u0((i as f64 + 0.5) / n_sites as f64);
                u8::from(rng.gen::<f64>() < p)
            })
            .collect();
        let traj = simulate_gk(rate, &init, t_end, 2, seed, true)?;
        let last: Vec<f64> = traj
            .occupations
            .last()
            .unwrap()
            .iter()
            .map(|&s| s as f64)
            .collect();
        err += l1_error(&coarse_grain(&last, blocks), &pde_blocks);
    }
    Ok(err / seeds.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{make_kernel, KernelFamily};
    use crate::models::{make_reaction_pair, RateFamily, ReactionSpec};

    fn kac_model_2d() -> KacModel {
        let kernel = make_kernel(KernelFamily::AnnularBump { scale: 1.0 }, 2, true, true).unwrap();
        KacModel::new(2.0, kernel, RateFamily::StandardCosh).unwrap()
    }

    fn kac_model_1d() -> KacModel {
        let kernel = make_kernel(KernelFamily::AnnularBump { scale: 1.0 }, 1, true, true).unwrap();
        KacModel::new(2.0, kernel, RateFamily::StandardCosh).unwrap()
    }

    #[test]
    fn uniform_magnetization_is_stationary() {
        let model = kac_model_2d();
        let mb = model.magnetization();
        let m0 = Profile::constant(10.0, 1.0 / 32.0, mb);
        let traj = evolve_nonlocal_line(&model, &m0, 0.0, 0.01, 1.0, 3).unwrap();
        let drift = traj
            .states
            .last()
            .unwrap()
            .values
            .iter()
            .fold(0.0f64, |m, v| m.max((v - mb).abs()));
        assert!(drift < 1e-12, "drift {drift:e}");
    }

    #[test]
    fn instanton_is_stationary_on_the_line() {
        let model = kac_model_2d();
        let inst = crate::instanton::solve_instanton_kac(&model, 30.0, 1.0 / 64.0).unwrap();
        let traj =
            evolve_nonlocal_line(&model, &inst.profile, 0.0, 0.02, 1.0, 3).unwrap();
        let drift: f64 = traj
            .states
            .last()
            .unwrap()
            .values
            .iter()
            .zip(&inst.profile.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(drift < 1e-6, "drift {drift:e}");
    }

    #[test]
    fn standing_front_has_zero_speed() {
        let model = kac_model_2d();
        let inst = crate::instanton::solve_instanton_kac(&model, 30.0, 1.0 / 64.0).unwrap();
        let v = front_speed(&model, &inst.profile, 0.0, 20.0, 0.02).unwrap();
        assert!(v.abs() < 1e-6, "v = {v:e}");
    }

    #[test]
    fn front_response_is_odd_and_linear() {
        let model = kac_model_2d();
        let inst = crate::instanton::solve_instanton_kac(&model, 30.0, 1.0 / 64.0).unwrap();
        let mprime = inst.profile.derivative();
        let (_, mu) = crate::coefficients::mobility_kac(&model, &inst, &mprime).unwrap();
        let resp = front_response(&model, &inst.profile, &[0.002, 0.004], 20.0, 0.02).unwrap();
        assert!(resp.odd_defect < 0.01, "odd defect {}", resp.odd_defect);
        let expected = -2.0 * model.magnetization() * mu;
        let rel = (resp.slope - expected).abs() / expected.abs();
        assert!(rel < 0.03, "slope {} vs {expected} (rel {rel})", resp.slope);
    }

    #[test]
    fn rd_stable_phase_is_stationary() {
        let pair = make_reaction_pair(&ReactionSpec::SymmetricCubic { r: 0.25 }).unwrap();
        let f0 = Field2::constant(32, pair.rho_plus);
        let traj = evolve_rd_torus(&pair, &f0, 1.0, 0.5, 3).unwrap();
        let drift = traj
            .fields
            .last()
            .unwrap()
            .values
            .iter()
            .fold(0.0f64, |m, v| m.max((v - pair.rho_plus).abs()));
        assert!(drift < 1e-12);
    }

    #[test]
    fn kac_circle_shrinks_by_curvature_flow() {
        // Coarse, fast variant of the curvature-law check (the fine-grid
        // version is exercised by the acceptance suite).
        let model = kac_model_2d();
        let inst = crate::instanton::solve_instanton_kac(&model, 30.0, 1.0 / 64.0).unwrap();
        let alpha = crate::instanton::solve_decay_rate(&model).unwrap().alpha;
        let bundle = crate::coefficients::compute_kac_bundle(&model, &inst, alpha).unwrap();
        let theta = bundle.coeffs.theta;
        let eps = 0.1;
        let n = 96;
        let r0: f64 = 0.3;
        let f0 = Field2::from_fn(n, |x, y| {
            let d = r0 - ((x - 0.5f64).powi(2) + (y - 0.5f64).powi(2)).sqrt();
            inst.profile.eval(d / eps)
        });
        let t_end = 0.5 * r0 * r0 / (2.0 * theta);
        let traj = evolve_nonlocal_torus(&model, &f0, eps, t_end, 6).unwrap();
        for (k, f) in traj.fields.iter().enumerate() {
            let r = radius_from_area(f, 0.0);
            let pred = (r0 * r0 - 2.0 * theta * traj.times[k]).max(0.0).sqrt();
            assert!(
                (r - pred).abs() < 0.1 * r0,
                "t={} r={r} pred={pred}",
                traj.times[k]
            );
        }
    }

    #[test]
    fn gk_circle_shrinks_by_half_curvature_flow() {
        let pair = make_reaction_pair(&ReactionSpec::SymmetricCubic { r: 0.25 }).unwrap();
        let inst = crate::instanton::solve_instanton_gk(&pair, 60.0, 1.0 / 128.0).unwrap();
        let eps = 0.1;
        let n = 96;
        let r0: f64 = 0.3;
        let f0 = Field2::from_fn(n, |x, y| {
            let d = r0 - ((x - 0.5f64).powi(2) + (y - 0.5f64).powi(2)).sqrt();
            inst.profile.eval(d / eps)
        });
        let t_end = 0.5 * r0 * r0;
        let traj = evolve_rd_torus(&pair, &f0, eps, t_end, 6).unwrap();
        for (k, f) in traj.fields.iter().enumerate() {
            let r = radius_from_area(f, pair.rho_mid);
            let pred = (r0 * r0 - traj.times[k]).max(0.0).sqrt();
            assert!(
                (r - pred).abs() < 0.1 * r0,
                "t={} r={r} pred={pred}",
                traj.times[k]
            );
        }
    }

    #[test]
    fn derive_bd_oracles() {
        // c = 1: B = 1 - rho, D = rho.
        let (b, d) = derive_bd(&LocalRate::constant(1.0));
        assert!((b.eval(0.3) - 0.7).abs() < 1e-12);
        assert!((d.eval(0.3) - 0.3).abs() < 1e-12);
        // c = eta at offset +1: B = rho(1-rho), D = rho^2.
        let mut table = vec![0.0; 8];
        for mask in 0..8 {
            table[mask] = (mask >> 2 & 1) as f64;
        }
        let (b, d) = derive_bd(&LocalRate::new(1, table).unwrap());
        for &rho in &[0.2, 0.5, 0.9] {
            assert!((b.eval(rho) - rho * (1.0 - rho)).abs() < 1e-12);
            assert!((d.eval(rho) - rho * rho).abs() < 1e-12);
        }
        // Bistable example: net = 2 (1/2 - rho)((rho-1/2)^2 - 1/16)... i.e.
        // -2(rho-1/4)(rho-1/2)(rho-3/4); check the zeros and validation.
        let (b, d) = derive_bd(&bistable_local_rate());
        let pair = make_reaction_pair(&crate::models::ReactionSpec::Explicit {
            birth: b.clone(),
            death: d.clone(),
        })
        .unwrap();
        assert!((pair.rho_minus - 0.25).abs() < 1e-9);
        assert!((pair.rho_plus - 0.75).abs() < 1e-9);
        for &rho in &[0.25, 0.5, 0.75] {
            assert!((b.eval(rho) - d.eval(rho)).abs() < 1e-12);
        }
    }

    #[test]
    fn gibbs_distribution_matches_enumeration() {
        let model = kac_model_1d();
        let tv = gibbs_tv_check(&model, 8, 400_000.0, 7).unwrap();
        assert!(tv < 0.02, "TV = {tv}");
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let model = kac_model_1d();
        let init: Vec<i8> = (0..256).map(|i| if i < 128 { 1 } else { -1 }).collect();
        let a = simulate_glauber_kac(&model, &init, 1.0, 5, 42).unwrap();
        let b = simulate_glauber_kac(&model, &init, 1.0, 5, 42).unwrap();
        assert_eq!(a.spins, b.spins);
        assert_eq!(a.events, b.events);
        let rate = bistable_local_rate();
        let init: Vec<u8> = (0..64).map(|i| u8::from(i % 3 == 0)).collect();
        let a = simulate_gk(&rate, &init, 0.05, 3, 9, true).unwrap();
        let b = simulate_gk(&rate, &init, 0.05, 3, 9, true).unwrap();
        assert_eq!(a.occupations, b.occupations);
    }

    #[test]
    fn pure_kawasaki_conserves_particles() {
        let rate = bistable_local_rate();
        let init: Vec<u8> = (0..128).map(|i| u8::from(i % 4 == 0)).collect();
        let total: u32 = init.iter().map(|&v| v as u32).sum();
        let traj = simulate_gk(&rate, &init, 0.02, 4, 11, false).unwrap();
        assert!(traj.events_kawasaki > 1000);
        assert_eq!(traj.events_glauber, 0);
        for snap in &traj.occupations {
            let s: u32 = snap.iter().map(|&v| v as u32).sum();
            assert_eq!(s, total);
        }
    }

    #[test]
    fn flip_statistics_match_derived_rates() {
        // Empirical Glauber flip counts at density 1/2 against the derived
        // birth/death rates, within 3 sigma Poisson bands.
        let rate = bistable_local_rate();
        let (b, d) = derive_bd(&rate);
        let n = 512;
        let init: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 0)).collect();
        let t_end = 0.4;
        let traj = simulate_gk(&rate, &init, t_end, 2, 23, true).unwrap();
        // Expected counts: n * integral of B, D along the (nearly constant
        // density-1/2) trajectory.
        let expect_total = n as f64 * t_end * (b.eval(0.5) + d.eval(0.5));
        let got = traj.events_glauber as f64;
        let sigma = expect_total.sqrt();
        assert!(
            (got - expect_total).abs() < 3.0 * sigma + 0.05 * expect_total,
            "flips {got} vs {expect_total} (sigma {sigma})"
        );
    }
}
