//! Multi-seed experiment driver.
//!
//! Each seed builds one synthetic ground truth (field drawn from the prior
//! at the true length scale, data polluted by measurement noise) and runs
//! every configured method against the *same* truth, data, initialization
//! and update perturbations, so per-seed comparisons between methods are
//! paired. Stochastic ingredients come from named substreams of the seed;
//! a fixed truth seed may be supplied to hold the truth constant while the
//! algorithmic randomness varies.

use heki_core::ensemble::{self, col_mean, perturb_observations, scaled_gamma};
use heki_core::forward::{EllipticSolver, ForwardMap, ObservationOperator};
use heki_core::grid::Grid1d;
use heki_core::hierarchy::{
    centred_mean_field, centred_update, noncentred_update, stack_centred, Clamp,
    NonCentredEnsemble,
};
use heki_core::linalg::{norm2, Mat};
use heki_core::matern::SpectralFieldMap;
use heki_core::rng::{stream, Prng};
use heki_core::variants::{apply_jitter, gauss_taper_matrix, KalmanInflation};
use serde::Serialize;

use crate::config::{ExperimentConfig, Method};
use crate::Result;

/// Immutable problem geometry shared by every seed.
pub struct Problem {
    /// The discretization grid.
    pub grid: Grid1d,
    /// Field sampler at the configured (σ, α).
    pub map: SpectralFieldMap,
    /// Elliptic forward map with pointwise observations.
    pub fwd: ForwardMap,
}

impl Problem {
    /// Assembles grid, sampler and forward map from a config.
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let grid = Grid1d::new(cfg.domain[0], cfg.domain[1], cfg.grid_points);
        let map = SpectralFieldMap::new(grid, cfg.sigma, cfg.alpha)?;
        let solver = EllipticSolver::new(grid)?;
        let obs = ObservationOperator::spread(cfg.grid_points, cfg.n_observations)?;
        let fwd = ForwardMap::new(solver, obs)?;
        Ok(Problem { grid, map, fwd })
    }
}

/// Ground truth and data for one seed.
pub struct TruthData {
    /// True field on the grid.
    pub u_true: Vec<f64>,
    /// Noisy observations.
    pub y: Vec<f64>,
}

/// Draws the per-seed truth and data from the truth/data substreams.
pub fn make_truth(problem: &Problem, cfg: &ExperimentConfig, truth_seed: u64) -> Result<TruthData> {
    let mut rt = Prng::substream(truth_seed, stream::TRUTH_FIELD);
    let xi_t = rt.gaussian_vec(cfg.grid_points);
    let u_true = problem
        .map
        .transform(&xi_t, cfg.ell_true * cfg.ell_unit)?;
    let mut rd = Prng::substream(truth_seed, stream::DATA_NOISE);
    let clean = problem.fwd.predict(&u_true)?;
    let sd = cfg.gamma_data.sqrt();
    let y = clean.iter().map(|v| v + sd * rd.next_gaussian()).collect();
    Ok(TruthData { u_true, y })
}

/// Result of one method on one seed.
#[derive(Debug, Clone, Serialize)]
pub struct MethodRun {
    /// Which method produced this run.
    pub method: Method,
    /// Relative L² error of the ensemble-mean field, before the first and
    /// after every iteration (`n_iterations + 1` entries).
    pub recon_trace: Vec<f64>,
    /// Ensemble mean of the length scale on the same schedule; empty for
    /// the non-hierarchical baseline.
    pub mean_ell_trace: Vec<f64>,
    /// Ensemble-mean field after the last iteration.
    pub final_mean_field: Vec<f64>,
}

impl MethodRun {
    /// Final reconstruction error.
    pub fn final_recon(&self) -> f64 {
        *self.recon_trace.last().unwrap()
    }

    /// Final mean length scale (hierarchical methods only).
    pub fn final_mean_ell(&self) -> Option<f64> {
        self.mean_ell_trace.last().copied()
    }
}

/// All method runs for one seed.
#[derive(Debug, Clone, Serialize)]
pub struct SeedRun {
    /// Seed that drove the algorithmic randomness.
    pub seed: u64,
    /// Seed that drove truth and data (differs under `--fixed-truth-seed`).
    pub truth_seed: u64,
    /// One entry per configured method, in config order.
    pub runs: Vec<MethodRun>,
}

impl SeedRun {
    /// Looks up the run for a method.
    pub fn run(&self, m: Method) -> Option<&MethodRun> {
        self.runs.iter().find(|r| r.method == m)
    }
}

fn relative_error(mean_field: &[f64], truth: &[f64]) -> f64 {
    let mut diff = mean_field.to_vec();
    for (d, t) in diff.iter_mut().zip(truth.iter()) {
        *d -= t;
    }
    norm2(&diff) / norm2(truth)
}

/// Runs one method against prepared truth/data. All stochastic input is
/// re-derived from `seed`, so every method sees identical substreams.
pub fn run_method(
    problem: &Problem,
    cfg: &ExperimentConfig,
    truth: &TruthData,
    seed: u64,
    method: Method,
) -> Result<MethodRun> {
    let n = cfg.grid_points;
    let j = cfg.n_particles;
    let k = problem.fwd.data_len();
    let unit = cfg.ell_unit;
    let clamp = Clamp {
        lo: cfg.ell_clamp[0],
        hi: cfg.ell_clamp[1],
    };
    let gs = scaled_gamma(&vec![cfg.gamma_update; k], cfg.step)?;

    let mut rx = Prng::substream(seed, stream::INIT_FIELD);
    let mut re = Prng::substream(seed, stream::INIT_HYPER);
    let mut rp = Prng::substream(seed, stream::UPDATE_PERTURBATIONS);
    let mut rj = Prng::substream(seed, stream::JITTER);

    let mut ens = NonCentredEnsemble::init(n, j, cfg.ell_init[0], cfg.ell_init[1], &mut rx, &mut re)?;

    let xi_taper = match method {
        Method::NonCentredLoc => {
            let radius = cfg.loc_radius * problem.grid.h();
            let field_pos = problem.grid.nodes();
            let obs_pos = problem.fwd.observations().positions(&problem.grid);
            Some(gauss_taper_matrix(&field_pos, &obs_pos, radius)?)
        }
        _ => None,
    };

    let mut recon_trace = Vec::with_capacity(cfg.n_iterations + 1);
    let mut mean_ell_trace = Vec::new();
    let final_mean_field;

    match method {
        Method::Standard => {
            let mut u = Mat::zeros(n, j);
            for c in 0..j {
                let f = problem.map.transform(&ens.xi.col(c), cfg.ell_fixed * unit)?;
                u.set_col(c, &f);
            }
            recon_trace.push(relative_error(&col_mean(&u)?, &truth.u_true));
            for _ in 0..cfg.n_iterations {
                let preds = problem.fwd.predict_ensemble(&u)?;
                let yp = perturb_observations(&truth.y, &gs, j, &mut rp)?;
                u = ensemble::update_with_perturbed(&u, &preds, &yp, &gs)?;
                recon_trace.push(relative_error(&col_mean(&u)?, &truth.u_true));
            }
            final_mean_field = col_mean(&u)?;
        }
        Method::Centred => {
            let fields = ens.physical_fields(&problem.map, unit)?;
            let mut stacked = stack_centred(&fields, &ens.ell)?;
            recon_trace.push(relative_error(&centred_mean_field(&stacked)?, &truth.u_true));
            mean_ell_trace.push(mean_of_last_row(&stacked));
            for _ in 0..cfg.n_iterations {
                let preds = predict_stacked(problem, &stacked)?;
                let yp = perturb_observations(&truth.y, &gs, j, &mut rp)?;
                centred_update(&mut stacked, &preds, &yp, &gs)?;
                recon_trace.push(relative_error(&centred_mean_field(&stacked)?, &truth.u_true));
                mean_ell_trace.push(mean_of_last_row(&stacked));
            }
            final_mean_field = centred_mean_field(&stacked)?;
        }
        Method::NonCentred
        | Method::NonCentredLoc
        | Method::NonCentredInfl
        | Method::NonCentredJitter => {
            let fields = ens.physical_fields(&problem.map, unit)?;
            recon_trace.push(relative_error(&col_mean(&fields)?, &truth.u_true));
            mean_ell_trace.push(ens.mean_ell());
            for _ in 0..cfg.n_iterations {
                let fields = ens.physical_fields(&problem.map, unit)?;
                let preds = problem.fwd.predict_ensemble(&fields)?;
                let yp = perturb_observations(&truth.y, &gs, j, &mut rp)?;
                let inflation = if method == Method::NonCentredInfl {
                    let ell_bar = ens.mean_ell();
                    let xi_mean = col_mean(&ens.xi)?;
                    Some(KalmanInflation::assemble(
                        cfg.inflation_gamma,
                        cfg.theta_prior_var,
                        &problem.map,
                        &problem.fwd,
                        &xi_mean,
                        ell_bar * unit,
                        (ell_bar + cfg.theta_delta) * unit,
                        (ell_bar - cfg.theta_delta) * unit,
                        2.0 * cfg.theta_delta,
                    )?)
                } else {
                    None
                };
                noncentred_update(
                    &mut ens,
                    &preds,
                    &yp,
                    &gs,
                    clamp,
                    xi_taper.as_ref(),
                    None,
                    inflation.as_ref(),
                )?;
                if method == Method::NonCentredJitter {
                    apply_jitter(
                        &mut ens,
                        cfg.inflation_gamma,
                        cfg.step,
                        cfg.theta_prior_var,
                        clamp,
                        &mut rj,
                    )?;
                }
                let fields = ens.physical_fields(&problem.map, unit)?;
                recon_trace.push(relative_error(&col_mean(&fields)?, &truth.u_true));
                mean_ell_trace.push(ens.mean_ell());
            }
            final_mean_field = col_mean(&ens.physical_fields(&problem.map, unit)?)?;
        }
    }

    Ok(MethodRun {
        method,
        recon_trace,
        mean_ell_trace,
        final_mean_field,
    })
}

fn mean_of_last_row(stacked: &Mat) -> f64 {
    let r = stacked.rows() - 1;
    (0..stacked.cols()).map(|c| stacked[(r, c)]).sum::<f64>() / stacked.cols() as f64
}

fn predict_stacked(problem: &Problem, stacked: &Mat) -> Result<Mat> {
    let n = stacked.rows() - 1;
    let mut fields = Mat::zeros(n, stacked.cols());
    for c in 0..stacked.cols() {
        for i in 0..n {
            fields[(i, c)] = stacked[(i, c)];
        }
    }
    Ok(problem.fwd.predict_ensemble(&fields)?)
}

/// Runs all configured methods for one seed.
pub fn run_seed(
    problem: &Problem,
    cfg: &ExperimentConfig,
    seed: u64,
    truth_seed: u64,
) -> Result<SeedRun> {
    let truth = make_truth(problem, cfg, truth_seed)?;
    let mut runs = Vec::with_capacity(cfg.methods.len());
    for &m in &cfg.methods {
        runs.push(run_method(problem, cfg, &truth, seed, m)?);
    }
    Ok(SeedRun {
        seed,
        truth_seed,
        runs,
    })
}

/// Runs `seed_count` seeds `base_seed..base_seed + seed_count`, redrawing
/// the truth per seed unless `fixed_truth_seed` pins it.
pub fn run_many(
    cfg: &ExperimentConfig,
    seed_count: usize,
    fixed_truth_seed: Option<u64>,
) -> Result<Vec<SeedRun>> {
    let problem = Problem::new(cfg)?;
    let mut out = Vec::with_capacity(seed_count);
    for k in 0..seed_count {
        let seed = cfg.base_seed + k as u64;
        let truth_seed = fixed_truth_seed.unwrap_or(seed);
        out.push(run_seed(&problem, cfg, seed, truth_seed)?);
    }
    Ok(out)
}

/// Count of seeds where `candidate` strictly beats `reference` in final
/// reconstruction error (paired by seed).
pub fn paired_wins(seeds: &[SeedRun], candidate: Method, reference: Method) -> usize {
    seeds
        .iter()
        .filter(|s| match (s.run(candidate), s.run(reference)) {
            (Some(c), Some(r)) => c.final_recon() < r.final_recon(),
            _ => false,
        })
        .count()
}
