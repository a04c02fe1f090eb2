//! Reproducible experiment driver: flat plain-text configuration, pipeline
//! orchestration, and deterministic tabular artifacts.
//!
//! Every run writes three files to the output directory: `manifest.json`
//! (inputs, crate version, config hash, wall-clock stamps), `results.csv`
//! (deterministic body; every row carries the config hash and version), and
//! `summary.txt` (human-readable digest).

use crate::action_gk::{action_eps_gk, controlled_recovery_circle, GkRoute};
use crate::action_kac::{action_eps_kac, build_recovery_kac};
use crate::coefficients::{assemble_l_gk, compute_kac_bundle, mobility_gk};
use crate::correctors::{
    build_h_hat, optimal_psi_gk, solve_corrector_gk, solve_corrector_kac, solve_h_gk,
};
use crate::dynamics::{
    bistable_local_rate, coarse_grain, derive_bd, evolve_nonlocal_ring, evolve_nonlocal_torus,
    evolve_rd_ring, evolve_rd_torus, front_response, gk_hydro_error, kac_hydro_error, l1_error,
    radius_from_area, simulate_glauber_kac, simulate_gk,
};
use crate::error::{Error, Result};
use crate::geometry::{action_sharp, circle_path, nucleation_path};
use crate::grid::Field2;
use crate::instanton::{
    fitted_tail_rate, solve_decay_rate, solve_instanton_gk, solve_instanton_kac,
};
use crate::kernels::{make_kernel, KernelFamily};
use crate::models::{make_reaction_pair, KacModel, RateFamily, ReactionSpec};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::Digest;
use std::fmt::Write as _;
use std::path::Path;

/// Flat experiment configuration; all fields have defaults, so a minimal
/// config file only names the experiment.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// One of: instanton, coefficients, corrector, action-kac, action-gk,
    /// mcf, nucleation, front-speed, lattice-kac, lattice-gk, hydro-compare.
    pub experiment: String,
    /// Model selector for experiments that run one process: "kac" or "gk".
    pub process: String,
    /// Inverse temperature of the spin model (must exceed 1).
    pub beta: f64,
    /// Interaction range of the ring-shaped coupling.
    pub kernel_scale: f64,
    /// Well separation of the symmetric bistable reaction term.
    pub reaction_r: f64,
    /// Half-width of the 1-d front grids (spin model).
    pub cutoff: f64,
    /// Spacing of the 1-d front grids (spin model).
    pub spacing: f64,
    /// Half-width / spacing for the reaction-diffusion front grid.
    pub cutoff_gk: f64,
    pub spacing_gk: f64,
    /// Interface-width ladder for action experiments (descending).
    pub eps: Vec<f64>,
    /// Initial circle radius for interface paths.
    pub r0: f64,
    /// Prescribed shrink rate of the deviating circle `R(t) = r0 - c t`.
    pub shrink_rate: f64,
    /// Time horizon of the experiment.
    pub t_end: f64,
    /// Seed for all randomness in the run.
    pub seed: u64,
    /// Lattice sites (microscopic simulations).
    pub sites: usize,
    /// Coarse-graining blocks for lattice/PDE comparisons.
    pub blocks: usize,
    /// Ensemble size for averaged lattice comparisons.
    pub runs: usize,
    /// Segment length for the nucleation construction.
    pub ell: f64,
    /// Number of seeds in the nucleation chain.
    pub n_delta: usize,
    /// External-field magnitudes probed by the front-speed experiment.
    pub field_values: Vec<f64>,
    /// Output directory for the artifact files.
    pub out_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: String::new(),
            process: "kac".into(),
            beta: 2.0,
            kernel_scale: 1.0,
            reaction_r: 0.25,
            cutoff: 30.0,
            spacing: 1.0 / 64.0,
            cutoff_gk: 60.0,
            spacing_gk: 1.0 / 128.0,
            eps: vec![0.08, 0.06, 0.04],
            r0: 0.3,
            shrink_rate: 0.35,
            t_end: 0.05,
            seed: 1,
            sites: 256,
            blocks: 32,
            runs: 4,
            ell: 0.5,
            n_delta: 32,
            field_values: vec![0.002, 0.004],
            out_dir: "out".into(),
        }
    }
}

pub const EXPERIMENTS: [&str; 11] = [
    "instanton",
    "coefficients",
    "corrector",
    "action-kac",
    "action-gk",
    "mcf",
    "nucleation",
    "front-speed",
    "lattice-kac",
    "lattice-gk",
    "hydro-compare",
];

/// Parse and schema-check a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg: ExperimentConfig =
        toml::from_str(&text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
    validate_config(&cfg)?;
    Ok(cfg)
}

pub fn validate_config(cfg: &ExperimentConfig) -> Result<()> {
    if !EXPERIMENTS.contains(&cfg.experiment.as_str()) {
        return Err(Error::Config(format!(
            "unknown experiment '{}'; expected one of {:?}",
            cfg.experiment, EXPERIMENTS
        )));
    }
    if cfg.process != "kac" && cfg.process != "gk" {
        return Err(Error::Config(format!(
            "unknown process '{}'; expected kac or gk",
            cfg.process
        )));
    }
    if cfg.eps.is_empty() || cfg.eps.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Config("eps ladder must be nonempty and positive".into()));
    }
    if cfg.spacing <= 0.0 || cfg.cutoff <= 0.0 || cfg.spacing_gk <= 0.0 || cfg.cutoff_gk <= 0.0 {
        return Err(Error::Config("grid parameters must be positive".into()));
    }
    Ok(())
}

/// Stable hash of the configuration (hex SHA-256 of its canonical JSON form).
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    let mut hasher = sha2::Sha256::new();
    hasher.update(canonical.as_bytes());
    hex::encode(&hasher.finalize()[..16])
}

/// Tabular result of one experiment run.
#[derive(Debug)]
pub struct RunOutput {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub summary: Vec<String>,
    /// Name and value of the single scalar a sweep tracks for this experiment.
    pub headline: (String, f64),
}

fn fmtf(v: f64) -> String {
    format!("{v:.12e}")
}

fn strs(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn kac_model(cfg: &ExperimentConfig) -> Result<KacModel> {
    let kernel = make_kernel(
        KernelFamily::AnnularBump {
            scale: cfg.kernel_scale,
        },
        2,
        true,
        true,
    )?;
    KacModel::new(cfg.beta, kernel, RateFamily::StandardCosh)
}

fn kac_model_1d(cfg: &ExperimentConfig) -> Result<KacModel> {
    let kernel = make_kernel(
        KernelFamily::AnnularBump {
            scale: cfg.kernel_scale,
        },
        1,
        true,
        true,
    )?;
    KacModel::new(cfg.beta, kernel, RateFamily::StandardCosh)
}

fn gk_pair(cfg: &ExperimentConfig) -> Result<crate::models::ReactionPair> {
    make_reaction_pair(&ReactionSpec::SymmetricCubic { r: cfg.reaction_r })
}

/// Execute an experiment and return its table (no file I/O).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    validate_config(cfg)?;
    match cfg.experiment.as_str() {
        "instanton" => exp_instanton(cfg),
        "coefficients" => exp_coefficients(cfg),
        "corrector" => exp_corrector(cfg),
        "action-kac" => exp_action_kac(cfg),
        "action-gk" => exp_action_gk(cfg),
        "mcf" => exp_mcf(cfg),
        "nucleation" => exp_nucleation(cfg),
        "front-speed" => exp_front_speed(cfg),
        "lattice-kac" => exp_lattice_kac(cfg),
        "lattice-gk" => exp_lattice_gk(cfg),
        "hydro-compare" => exp_hydro_compare(cfg),
        other => Err(Error::Config(format!("unknown experiment '{other}'"))),
    }
}

fn exp_instanton(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let model = kac_model(cfg)?;
    let inst = solve_instanton_kac(&model, cfg.cutoff, cfg.spacing)?;
    let alpha = solve_decay_rate(&model)?;
    let tail = fitted_tail_rate(&inst.profile, model.magnetization())?;
    let pair = gk_pair(cfg)?;
    let gk = solve_instanton_gk(&pair, cfg.cutoff_gk, cfg.spacing_gk)?;
    let columns = strs(&[
        "model",
        "limit_minus",
        "limit_plus",
        "residual",
        "iterations",
        "decay_predicted",
        "decay_fitted",
    ]);
    let rows = vec![
        vec![
            "kac".into(),
            fmtf(inst.profile.left_limit),
            fmtf(inst.profile.right_limit),
            fmtf(inst.residual),
            inst.iterations.to_string(),
            fmtf(alpha.alpha),
            fmtf(tail),
        ],
        vec![
            "gk".into(),
            fmtf(gk.profile.left_limit),
            fmtf(gk.profile.right_limit),
            fmtf(gk.first_integral_defect(&pair)),
            "1".into(),
            fmtf(0.5),
            fmtf(fitted_tail_rate(&gk.profile, gk.rho_plus)?),
        ],
    ];
    let summary = vec![
        format!(
            "spin front: limits -+{:.6}, fixed-point residual {:.3e}, tail rate {:.4} (predicted {:.4})",
            model.magnetization(),
            inst.residual,
            tail,
            alpha.alpha
        ),
        format!(
            "reaction front: limits {:.4}/{:.4}, first-integral defect {:.3e}",
            gk.rho_minus,
            gk.rho_plus,
            gk.first_integral_defect(&pair)
        ),
    ];
    Ok(RunOutput {
        columns,
        rows,
        summary,
        headline: ("residual".into(), inst.residual),
    })
}

fn exp_coefficients(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let model = kac_model(cfg)?;
    let inst = solve_instanton_kac(&model, cfg.cutoff, cfg.spacing)?;
    let alpha = solve_decay_rate(&model)?;
    let bundle = compute_kac_bundle(&model, &inst, alpha.alpha)?;
    let co = &bundle.coeffs;
    let pair = gk_pair(cfg)?;
    let gk = solve_instanton_gk(&pair, cfg.cutoff_gk, cfg.spacing_gk)?;
    let op = assemble_l_gk(&pair, &gk)?;
    let (mu_gk, c_star) = mobility_gk(&gk, &op);
    let columns = strs(&[
        "m_beta", "alpha", "tau", "tau_alt", "big_n", "mu", "theta", "mu_gk", "c_star_gk",
    ]);
    let rows = vec![vec![
        fmtf(co.m_beta),
        fmtf(co.alpha),
        fmtf(co.tau),
        fmtf(co.tau_alt),
        fmtf(co.big_n),
        fmtf(co.mu),
        fmtf(co.theta),
        fmtf(mu_gk),
        fmtf(c_star),
    ]];
    let summary = vec![
        format!(
            "spin model: tau = {:.8} (alt route {:.8}), mu = {:.8}, theta = mu tau = {:.8}",
            co.tau, co.tau_alt, co.mu, co.theta
        ),
        format!(
            "reaction model: mu = {:.8}, transport constant = {:.8}",
            mu_gk, c_star
        ),
    ];
    Ok(RunOutput {
        columns,
        rows,
        summary,
        headline: ("tau".into(), co.tau),
    })
}

fn exp_corrector(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let model = kac_model(cfg)?;
    let inst = solve_instanton_kac(&model, cfg.cutoff, cfg.spacing)?;
    let alpha = solve_decay_rate(&model)?;
    let bundle = compute_kac_bundle(&model, &inst, alpha.alpha)?;
    let hh = build_h_hat(&model, &inst, &bundle.mprime)?;
    let corr = solve_corrector_kac(&bundle.op, &bundle.mprime, &hh.h_hat)?;
    let pair = gk_pair(cfg)?;
    let gkinst = solve_instanton_gk(&pair, cfg.cutoff_gk, cfg.spacing_gk)?;
    let op = assemble_l_gk(&pair, &gkinst)?;
    let psi = optimal_psi_gk(&gkinst, &op);
    let second = gkinst.profile.map(|u| 2.0 * pair.w_prime(u));
    let gkcorr = solve_corrector_gk(&gkinst, &op, &psi, &second)?;
    let aux = solve_h_gk(&gkinst, &op, &gkcorr, &second)?;
    let columns = strs(&["model", "residual", "growth", "extra"]);
    let rows = vec![
        vec![
            "kac".into(),
            fmtf(corr.residual),
            fmtf(corr.growth),
            fmtf(hh.theta_star),
        ],
        vec![
            "gk".into(),
            fmtf(gkcorr.residual),
            fmtf(crate::correctors::growth_bound(&gkcorr.q_bar)),
            fmtf(aux.alignment_defect),
        ],
    ];
    let summary = vec![
        format!(
            "spin corrector: residual {:.3e}, linear-growth bound {:.4}",
            corr.residual, corr.growth
        ),
        format!(
            "reaction corrector: residual {:.3e}, auxiliary-field alignment defect {:.3e}",
            gkcorr.residual, aux.alignment_defect
        ),
    ];
    Ok(RunOutput {
        columns,
        rows,
        summary,
        headline: ("residual".into(), corr.residual),
    })
}

fn exp_action_kac(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let model = kac_model(cfg)?;
    let inst = solve_instanton_kac(&model, cfg.cutoff, cfg.spacing)?;
    let alpha = solve_decay_rate(&model)?;
    let bundle = compute_kac_bundle(&model, &inst, alpha.alpha)?;
    let hh = build_h_hat(&model, &inst, &bundle.mprime)?;
    let corr = solve_corrector_kac(&bundle.op, &bundle.mprime, &hh.h_hat)?;
    let q_zero = corr.q_bar.map(|_| 0.0);
    let co = &bundle.coeffs;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut last_gap = f64::NAN;
    for &eps in &cfg.eps {
        let n = (8.0 / eps).ceil() as usize;
        let frames = (cfg.t_end / (eps * eps / 4.0)).ceil() as usize + 1;
        let path = circle_path(
            [0.5, 0.5],
            |t| cfg.r0 - cfg.shrink_rate * t,
            cfg.t_end,
            frames,
        )?;
        let sac = action_sharp(&path, co.mu, co.theta)?;
        let fp = build_recovery_kac(&inst.profile, &corr.q_bar, &path, eps, n)?;
        let rep = action_eps_kac(&fp, &model, Some(sac))?;
        let fp0 = build_recovery_kac(&inst.profile, &q_zero, &path, eps, n)?;
        let rep0 = action_eps_kac(&fp0, &model, Some(sac))?;
        let gap = (rep.total - sac) / sac;
        let gap0 = (rep0.total - sac) / sac;
        rows.push(vec![
            fmtf(eps),
            fmtf(rep.s1),
            fmtf(rep.s2),
            fmtf(rep.s3),
            fmtf(rep.total),
            fmtf(rep0.total),
            fmtf(sac),
            fmtf(gap),
            fmtf(gap0),
        ]);
        summary.push(format!(
            "eps={eps}: corrected {:.6} vs sharp {:.6} (gap {:+.3}%), uncorrected {:.6} (gap {:+.3}%)",
            rep.total,
            sac,
            100.0 * gap,
            rep0.total,
            100.0 * gap0
        ));
        last_gap = gap.abs();
    }
    Ok(RunOutput {
        columns: strs(&[
            "eps",
            "endpoint",
            "velocity",
            "drift",
            "total",
            "total_uncorrected",
            "reference",
            "rel_gap",
            "rel_gap_uncorrected",
        ]),
        rows,
        summary,
        headline: ("rel_gap".into(), last_gap),
    })
}

fn exp_action_gk(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let pair = gk_pair(cfg)?;
    let inst = solve_instanton_gk(&pair, cfg.cutoff_gk, cfg.spacing_gk)?;
    let op = assemble_l_gk(&pair, &inst)?;
    let (mu, _) = mobility_gk(&inst, &op);
    let psi = optimal_psi_gk(&inst, &op);
    let second = inst.profile.map(|u| 2.0 * pair.w_prime(u));
    let corr = solve_corrector_gk(&inst, &op, &psi, &second)?;
    let aux = solve_h_gk(&inst, &op, &corr, &second)?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut last_gap = f64::NAN;
    for &eps in &cfg.eps {
        let frames = (cfg.t_end / (eps * eps / 4.0)).ceil() as usize + 1;
        let path = circle_path(
            [0.5, 0.5],
            |t| cfg.r0 - cfg.shrink_rate * t,
            cfg.t_end,
            frames,
        )?;
        let sac = action_sharp(&path, mu, 0.5)?;
        let times: Vec<f64> = (0..frames)
            .map(|k| cfg.t_end * k as f64 / (frames - 1) as f64)
            .collect();
        let radii: Vec<f64> = times.iter().map(|t| cfg.r0 - cfg.shrink_rate * t).collect();
        let nr = (4.0 / eps).ceil() as usize;
        let rp =
            controlled_recovery_circle(&pair, &inst.profile, &aux.h, eps, nr, 0.5, &times, &radii)?;
        let newton = action_eps_gk(&rp, &pair, GkRoute::Newton, Some(&aux.h), Some(sac))?;
        let ansatz = action_eps_gk(&rp, &pair, GkRoute::Ansatz, Some(&aux.h), Some(sac))?;
        let gap = (newton.total - sac) / sac;
        rows.push(vec![
            fmtf(eps),
            fmtf(newton.total),
            fmtf(ansatz.total),
            fmtf(sac),
            fmtf(gap),
            fmtf(newton.sup_h_gap.unwrap_or(f64::NAN)),
            fmtf(newton.max_residual.unwrap_or(f64::NAN)),
        ]);
        summary.push(format!(
            "eps={eps}: optimized {:.6} / closed-form {:.6} vs sharp {:.6} (gap {:+.3}%)",
            newton.total,
            ansatz.total,
            sac,
            100.0 * gap
        ));
        last_gap = gap.abs();
    }
    Ok(RunOutput {
        columns: strs(&[
            "eps",
            "total_optimized",
            "total_closed_form",
            "reference",
            "rel_gap",
            "sup_h_gap",
            "max_residual",
        ]),
        rows,
        summary,
        headline: ("rel_gap".into(), last_gap),
    })
}

fn exp_mcf(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let eps = cfg.eps[0];
    let frames = 6;
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let (times, radii, predicted): (Vec<f64>, Vec<f64>, Vec<f64>) = if cfg.process == "kac" {
        let model = kac_model(cfg)?;
        let inst = solve_instanton_kac(&model, cfg.cutoff, cfg.spacing)?;
        let alpha = solve_decay_rate(&model)?;
        let bundle = compute_kac_bundle(&model, &inst, alpha.alpha)?;
        let theta = bundle.coeffs.theta;
        let n = ((8.0 / eps).ceil() as usize).max(96);
        let r0 = cfg.r0;
        let f0 = Field2::from_fn(n, |x, y| {
            let d = r0 - ((x - 0.5f64).powi(2) + (y - 0.5f64).powi(2)).sqrt();
            inst.profile.eval(d / eps)
        });
        let t_end = if cfg.t_end > 0.0 {
            cfg.t_end
        } else {
            0.5 * r0 * r0 / (2.0 * theta)
        };
        let traj = evolve_nonlocal_torus(&model, &f0, eps, t_end, frames)?;
        let radii: Vec<f64> = traj.fields.iter().map(|f| radius_from_area(f, 0.0)).collect();
        let pred: Vec<f64> = traj
            .times
            .iter()
            .map(|&t| (r0 * r0 - 2.0 * theta * t).max(0.0).sqrt())
            .collect();
        (traj.times, radii, pred)
    } else {
        let pair = gk_pair(cfg)?;
        let inst = solve_instanton_gk(&pair, cfg.cutoff_gk, cfg.spacing_gk)?;
        let n = ((8.0 / eps).ceil() as usize).max(96);
        let r0 = cfg.r0;
        let f0 = Field2::from_fn(n, |x, y| {
            let d = r0 - ((x - 0.5f64).powi(2) + (y - 0.5f64).powi(2)).sqrt();
            inst.profile.eval(d / eps)
        });
        let t_end = if cfg.t_end > 0.0 { cfg.t_end } else { 0.5 * r0 * r0 };
        let traj = evolve_rd_torus(&pair, &f0, eps, t_end, frames)?;
        let radii: Vec<f64> = traj
            .fields
            .iter()
            .map(|f| radius_from_area(f, pair.rho_mid))
            .collect();
        let pred: Vec<f64> = traj
            .times
            .iter()
            .map(|&t| (r0 * r0 - t).max(0.0).sqrt())
            .collect();
        (traj.times, radii, pred)
    };
    for k in 0..times.len() {
        let err = (radii[k] - predicted[k]).abs() / cfg.r0;
        worst = worst.max(err);
        rows.push(vec![
            fmtf(times[k]),
            fmtf(radii[k]),
            fmtf(predicted[k]),
            fmtf(err),
        ]);
    }
    let summary = vec![format!(
        "{} interface flow at eps={eps}: worst relative radius error {:.3}% against the curvature law",
        cfg.process,
        100.0 * worst
    )];
    Ok(RunOutput {
        columns: strs(&["t", "radius", "radius_predicted", "rel_error"]),
        rows,
        summary,
        headline: ("radius_rel_error".into(), worst),
    })
}

fn exp_nucleation(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let model = kac_model(cfg)?;
    let inst = solve_instanton_kac(&model, cfg.cutoff, cfg.spacing)?;
    let alpha = solve_decay_rate(&model)?;
    let bundle = compute_kac_bundle(&model, &inst, alpha.alpha)?;
    let co = &bundle.coeffs;
    let m_delta = cfg.ell / (10.0 * cfg.n_delta as f64);
    let (_, rep) = nucleation_path(cfg.ell, cfg.n_delta, m_delta, co.theta, co.mu, co.tau)?;
    let rows = vec![vec![
        rep.n_delta.to_string(),
        fmtf(rep.semi_major),
        fmtf(rep.semi_minor),
        fmtf(rep.perimeter),
        fmtf(rep.cost),
        fmtf(rep.cost_perimeter_route),
        fmtf(rep.target),
        fmtf(rep.ratio),
        fmtf(rep.sigma_delta),
        fmtf(rep.sigma_bound),
        rep.converged.to_string(),
    ]];
    let summary = vec![format!(
        "nucleation chain of {} seeds over length {}: cost {:.6} vs target {:.6} (ratio {:.4}), extinction {:.3e} <= bound {:.3e}",
        rep.n_delta, cfg.ell, rep.cost, rep.target, rep.ratio, rep.sigma_delta, rep.sigma_bound
    )];
    Ok(RunOutput {
        columns: strs(&[
            "n_delta",
            "semi_major",
            "semi_minor",
            "perimeter",
            "cost",
            "cost_perimeter_route",
            "target",
            "ratio",
            "extinction",
            "extinction_bound",
            "converged",
        ]),
        rows,
        summary,
        headline: ("cost_ratio".into(), rep.ratio),
    })
}

fn exp_front_speed(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let model = kac_model(cfg)?;
    let inst = solve_instanton_kac(&model, cfg.cutoff, cfg.spacing)?;
    let mprime = inst.profile.derivative();
    let (_, mu) = crate::coefficients::mobility_kac(&model, &inst, &mprime)?;
    let t_end = if cfg.t_end > 1.0 { cfg.t_end } else { 20.0 };
    let resp = front_response(&model, &inst.profile, &cfg.field_values, t_end, 0.02)?;
    let predicted = -2.0 * model.magnetization() * mu;
    let rel = (resp.slope - predicted).abs() / predicted.abs();
    let mut rows = Vec::new();
    for (h, v) in resp.h_values.iter().zip(&resp.speeds) {
        rows.push(vec![fmtf(*h), fmtf(*v), fmtf(resp.slope), fmtf(predicted)]);
    }
    let summary = vec![format!(
        "front speed response: slope {:.6} vs predicted {:.6} (rel {:.3}%), odd defect {:.3e}",
        resp.slope,
        predicted,
        100.0 * rel,
        resp.odd_defect
    )];
    Ok(RunOutput {
        columns: strs(&["h", "speed", "slope", "slope_predicted"]),
        rows,
        summary,
        headline: ("slope_rel_error".into(), rel),
    })
}

fn smooth_magnetization(x: f64, m_beta: f64) -> f64 {
    0.9 * m_beta * (std::f64::consts::TAU * x).cos()
}

fn exp_lattice_kac(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let model = kac_model_1d(cfg)?;
    let mb = model.magnetization();
    let n = cfg.sites;
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(cfg.seed ^ 0x9e37);
    let init: Vec<i8> = (0..n)
        .map(|i| {
            let p = 0.5 * (1.0 + smooth_magnetization((i as f64 + 0.5) / n as f64, mb));
            if rng.gen::<f64>() < p {
                1
            } else {
                -1
            }
        })
        .collect();
    let traj = simulate_glauber_kac(&model, &init, cfg.t_end, 2, cfg.seed)?;
    let lattice: Vec<f64> = traj
        .spins
        .last()
        .unwrap()
        .iter()
        .map(|&s| s as f64)
        .collect();
    let lattice_blocks = coarse_grain(&lattice, cfg.blocks);
    let n_pde = 512;
    let pde0: Vec<f64> = (0..n_pde)
        .map(|i| smooth_magnetization((i as f64 + 0.5) / n_pde as f64, mb))
        .collect();
    let pde = evolve_nonlocal_ring(&model, &pde0, cfg.t_end, 2)?;
    let pde_blocks = coarse_grain(pde.states.last().unwrap(), cfg.blocks);
    let l1 = l1_error(&lattice_blocks, &pde_blocks);
    let rows: Vec<Vec<String>> = (0..cfg.blocks)
        .map(|b| {
            vec![
                b.to_string(),
                fmtf(lattice_blocks[b]),
                fmtf(pde_blocks[b]),
            ]
        })
        .collect();
    let summary = vec![format!(
        "spin chain ({n} sites) vs mean-field flow at t={}: block L1 distance {:.5} ({} flips)",
        cfg.t_end, l1, traj.events
    )];
    Ok(RunOutput {
        columns: strs(&["block", "lattice", "pde"]),
        rows,
        summary,
        headline: ("l1".into(), l1),
    })
}

fn exp_lattice_gk(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let rate = bistable_local_rate();
    let (b, d) = derive_bd(&rate);
    let pair = make_reaction_pair(&ReactionSpec::Explicit { birth: b, death: d })?;
    let n = cfg.sites;
    let u0 = |x: f64| 0.5 + 0.35 * (std::f64::consts::TAU * x).sin();
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(cfg.seed ^ 0x51f1);
    let init: Vec<u8> = (0..n)
        .map(|i| u8::from(rng.gen::<f64>() < u0((i as f64 + 0.5) / n as f64)))
        .collect();
    let traj = simulate_gk(&rate, &init, cfg.t_end, 2, cfg.seed, true)?;
    let lattice: Vec<f64> = traj
        .occupations
        .last()
        .unwrap()
        .iter()
        .map(|&s| s as f64)
        .collect();
    let lattice_blocks = coarse_grain(&lattice, cfg.blocks);
    let n_pde = 512;
    let pde0: Vec<f64> = (0..n_pde)
        .map(|i| u0((i as f64 + 0.5) / n_pde as f64))
        .collect();
    let pde = evolve_rd_ring(&pair, &pde0, cfg.t_end, 2)?;
    let pde_blocks = coarse_grain(pde.states.last().unwrap(), cfg.blocks);
    let l1 = l1_error(&lattice_blocks, &pde_blocks);
    let rows: Vec<Vec<String>> = (0..cfg.blocks)
        .map(|bk| {
            vec![
                bk.to_string(),
                fmtf(lattice_blocks[bk]),
                fmtf(pde_blocks[bk]),
            ]
        })
        .collect();
    let summary = vec![format!(
        "lattice gas ({n} sites) vs reaction-diffusion flow at t={}: block L1 distance {:.5} ({} flips, {} exchanges)",
        cfg.t_end, l1, traj.events_glauber, traj.events_kawasaki
    )];
    Ok(RunOutput {
        columns: strs(&["block", "lattice", "pde"]),
        rows,
        summary,
        headline: ("l1".into(), l1),
    })
}

fn exp_hydro_compare(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let seeds: Vec<u64> = (0..cfg.runs as u64).map(|k| cfg.seed.wrapping_add(k)).collect();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut ratio = f64::NAN;
    let ladder = [cfg.sites, cfg.sites * 2];
    if cfg.process == "kac" {
        let model = kac_model_1d(cfg)?;
        let mut prev = f64::NAN;
        for &n in &ladder {
            let e = kac_hydro_error(&model, n, cfg.blocks, cfg.t_end, &seeds)?;
            ratio = e / prev;
            rows.push(vec!["kac".into(), n.to_string(), fmtf(e), fmtf(ratio)]);
            summary.push(format!("spin chain n={n}: mean L1 {:.5}", e));
            prev = e;
        }
    } else {
        let rate = bistable_local_rate();
        let (b, d) = derive_bd(&rate);
        let pair = make_reaction_pair(&ReactionSpec::Explicit { birth: b, death: d })?;
        let mut prev = f64::NAN;
        for &n in &ladder {
            let e = gk_hydro_error(&rate, &pair, n, cfg.blocks, cfg.t_end, &seeds)?;
            ratio = e / prev;
            rows.push(vec!["gk".into(), n.to_string(), fmtf(e), fmtf(ratio)]);
            summary.push(format!("lattice gas n={n}: mean L1 {:.5}", e));
            prev = e;
        }
    }
    summary.push(format!("refinement ratio {ratio:.4} (should be < 1)"));
    Ok(RunOutput {
        columns: strs(&["process", "sites", "l1", "ratio"]),
        rows,
        summary,
        headline: ("l1_ratio".into(), ratio),
    })
}

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

fn csv_body(cfg: &ExperimentConfig, out: &RunOutput) -> String {
    let hash = config_hash(cfg);
    let version = env!("CARGO_PKG_VERSION");
    let mut s = String::new();
    let _ = writeln!(s, "{},config_hash,version", out.columns.join(","));
    for row in &out.rows {
        let _ = writeln!(s, "{},{hash},{version}", row.join(","));
    }
    s
}

/// Write `manifest.json`, `results.csv` and `summary.txt` for a finished run.
pub fn write_artifacts(cfg: &ExperimentConfig, out: &RunOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(Error::Io)?;
    let hash = config_hash(cfg);
    let manifest = serde_json::json!({
        "config": cfg,
        "config_hash": hash,
        "version": env!("CARGO_PKG_VERSION"),
        "headline": { "name": out.headline.0, "value": out.headline.1 },
        "generated_unix_ms": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0),
    });
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n",
    )
    .map_err(Error::Io)?;
    std::fs::write(dir.join("results.csv"), csv_body(cfg, out)).map_err(Error::Io)?;
    let mut txt = format!("experiment: {} (config {hash})\n", cfg.experiment);
    for line in &out.summary {
        txt.push_str(line);
        txt.push('\n');
    }
    std::fs::write(dir.join("summary.txt"), txt).map_err(Error::Io)?;
    Ok(())
}

/// Run a configuration file end to end.
pub fn command_run(config_path: &Path) -> Result<()> {
    let cfg = load_config(config_path)?;
    let out = run_experiment(&cfg)?;
    write_artifacts(&cfg, &out, Path::new(&cfg.out_dir))?;
    for line in &out.summary {
        println!("{line}");
    }
    Ok(())
}

/// Apply a sweep override to a copy of the base configuration.
pub fn apply_sweep(cfg: &ExperimentConfig, param: &str, value: f64) -> Result<ExperimentConfig> {
    let mut c = cfg.clone();
    match param {
        "eps" => c.eps = vec![value],
        "gamma" => {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::Config("gamma must lie in (0, 1)".into()));
            }
            c.sites = (1.0 / value).round() as usize;
        }
        "n" => {
            if value < 2.0 {
                return Err(Error::Config("n must be at least 2".into()));
            }
            c.sites = value.round() as usize;
        }
        "h" => c.spacing = value,
        other => {
            return Err(Error::Config(format!(
                "parameter '{other}' is not sweepable (expected eps, gamma, n or h)"
            )))
        }
    }
    validate_config(&c)?;
    Ok(c)
}

/// Run the experiment once per parameter value and tabulate the headline
/// metric with successive ratios.
pub fn sweep_experiment(
    cfg: &ExperimentConfig,
    param: &str,
    values: &[f64],
) -> Result<RunOutput> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs a nonempty value list".into()));
    }
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut prev = f64::NAN;
    let mut metric_name = String::new();
    let mut last_ratio = f64::NAN;
    for &v in values {
        let c = apply_sweep(cfg, param, v)?;
        let out = run_experiment(&c)?;
        metric_name = out.headline.0.clone();
        let metric = out.headline.1;
        last_ratio = metric / prev;
        rows.push(vec![
            param.to_string(),
            fmtf(v),
            fmtf(metric),
            fmtf(last_ratio),
        ]);
        summary.push(format!("{param}={v}: {} = {:.6e}", out.headline.0, metric));
        prev = metric;
    }
    summary.push(format!("successive {metric_name} ratios end at {last_ratio:.4}"));
    Ok(RunOutput {
        columns: strs(&["parameter", "value", "metric", "ratio"]),
        rows,
        summary,
        headline: (metric_name, last_ratio),
    })
}

/// Sweep driver: parses the value list, runs, writes artifacts.
pub fn command_sweep(config_path: &Path, param: &str, values_csv: &str) -> Result<()> {
    let cfg = load_config(config_path)?;
    let values: Vec<f64> = values_csv
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad sweep value '{s}': {e}")))
        })
        .collect::<Result<_>>()?;
    let out = sweep_experiment(&cfg, param, &values)?;
    write_artifacts(&cfg, &out, Path::new(&cfg.out_dir))?;
    for line in &out.summary {
        println!("{line}");
    }
    Ok(())
}

/// Exit code classification: configuration problems (schema, I/O, unknown
/// parameters) exit 2; runtime numerical failures exit 3.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Io(_) => 2,
        _ => 3,
    }
}

/// Machine-readable error record written next to the artifacts on failure.
pub fn error_record(err: &Error) -> String {
    serde_json::json!({
        "error": err.to_string(),
        "exit_code": exit_code(err),
    })
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_dir(tag: &str) -> std::path::PathBuf {
        let d = std::env::temp_dir().join(format!(
            "sharpflow-cli-{tag}-{}",
            std::process::id()
        ));
        let _ = std::fs::remove_dir_all(&d);
        d
    }

    #[test]
    fn config_round_trips_and_hash_is_stable() {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment = "coefficients".into();
        let text = toml::to_string(&cfg).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(config_hash(&cfg), config_hash(&back));
        let mut other = cfg.clone();
        other.seed = 2;
        assert_ne!(config_hash(&cfg), config_hash(&other));
    }

    #[test]
    fn unknown_fields_and_experiments_are_config_errors() {
        let err = toml::from_str::<ExperimentConfig>("experiment = \"coefficients\"\nbogus = 1\n");
        assert!(err.is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.experiment = "fly-to-the-moon".into();
        let e = run_experiment(&cfg).unwrap_err();
        assert_eq!(exit_code(&e), 2);
    }

    #[test]
    fn invalid_beta_is_a_numerical_error() {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment = "coefficients".into();
        cfg.beta = 0.5;
        let e = run_experiment(&cfg).unwrap_err();
        assert_eq!(exit_code(&e), 3);
        assert!(e.to_string().to_lowercase().contains("beta"), "{e}");
    }

    #[test]
    fn coefficients_run_writes_deterministic_artifacts() {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment = "coefficients".into();
        cfg.cutoff = 8.0;
        let dir = temp_dir("coeff");
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.columns[0], "m_beta");
        write_artifacts(&cfg, &out, &dir).unwrap();
        let body1 = std::fs::read_to_string(dir.join("results.csv")).unwrap();
        assert!(dir.join("manifest.json").exists());
        assert!(dir.join("summary.txt").exists());
        let out2 = run_experiment(&cfg).unwrap();
        write_artifacts(&cfg, &out2, &dir).unwrap();
        let body2 = std::fs::read_to_string(dir.join("results.csv")).unwrap();
        assert_eq!(body1, body2);
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn sweep_rejects_empty_values_and_unknown_params() {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment = "coefficients".into();
        let e = sweep_experiment(&cfg, "eps", &[]).unwrap_err();
        assert_eq!(exit_code(&e), 2);
        let e = apply_sweep(&cfg, "volume", 1.0).unwrap_err();
        assert_eq!(exit_code(&e), 2);
    }

    #[test]
    fn grid_sweep_shows_second_order_coefficient_convergence() {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment = "coefficients".into();
        cfg.cutoff = 8.0;
        // tau(h) converges at second order: successive differences against
        // the finest level shrink by ~4 when h halves.
        let hs = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
        let mut taus = Vec::new();
        for &h in &hs {
            let c = apply_sweep(&cfg, "h", h).unwrap();
            taus.push(run_experiment(&c).unwrap().headline.1);
        }
        let d1 = (taus[0] - taus[3]).abs();
        let d2 = (taus[1] - taus[3]).abs();
        let d3 = (taus[2] - taus[3]).abs();
        assert!(d2 < d1 / 2.5, "tau differences {d1:e} {d2:e}");
        assert!(d3 < d2 / 2.5, "tau differences {d2:e} {d3:e}");
    }
}
