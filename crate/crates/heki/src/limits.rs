//! Step-size refinement study for the continuous-time ensemble flow.
//!
//! The discrete update applied to a linear forward map is one step of a
//! tamed time integrator for the preconditioned gradient flow. This module
//! integrates a small ensemble to a fixed horizon with both the native
//! discrete scheme and explicit Euler, compares against a fine Runge–Kutta
//! reference, and fits the observed convergence order.

use heki_core::flow::LinearFlow;
use heki_core::linalg::Mat;
use heki_core::matern::SpectralFieldMap;
use heki_core::rng::{stream, Prng};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::experiment::Problem;
use crate::{AppError, Result};

/// Integrator horizon for the study.
pub const T_END: f64 = 1.0;
/// Reference integrator uses the finest requested step divided by this.
pub const REF_REFINEMENT: usize = 16;

/// Errors and fitted orders from one refinement study.
#[derive(Debug, Clone, Serialize)]
pub struct LimitsReport {
    /// Step sizes in the order they were requested.
    pub h_values: Vec<f64>,
    /// Relative Frobenius error of the native discrete scheme at `T_END`.
    pub discrete_errors: Vec<f64>,
    /// Relative Frobenius error of explicit Euler at `T_END`.
    pub euler_errors: Vec<f64>,
    /// Least-squares slope of log error against log step.
    pub discrete_order: f64,
    /// Least-squares slope for the Euler scheme.
    pub euler_order: f64,
    /// Whether the discrete errors strictly decrease with the step.
    pub discrete_monotone: bool,
    /// Whether the Euler errors strictly decrease with the step.
    pub euler_monotone: bool,
    /// Step used by the Runge–Kutta reference.
    pub reference_h: f64,
}

/// Least-squares slope of `ln e` against `ln h`.
pub fn log_log_slope(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        num += (x - xm) * (y - ym);
        den += (x - xm) * (x - xm);
    }
    num / den
}

fn steps_for(h: f64) -> Result<usize> {
    if !(h > 0.0) || h > T_END {
        return Err(AppError::Invalid(format!("step size {h} out of range")));
    }
    let n = (T_END / h).round();
    if ((n * h) - T_END).abs() > 1e-9 {
        return Err(AppError::Invalid(format!(
            "step size {h} does not divide the horizon {T_END}"
        )));
    }
    Ok(n as usize)
}

fn rel_fro(a: &Mat, b: &Mat) -> f64 {
    let mut d = a.clone();
    d.add_scaled(b, -1.0);
    d.fro_norm() / b.fro_norm()
}

fn sample_ensemble(
    map: &SpectralFieldMap,
    n: usize,
    cols: usize,
    ell: f64,
    rng: &mut Prng,
) -> Result<Mat> {
    let mut out = Mat::zeros(n, cols);
    for c in 0..cols {
        let xi = rng.gaussian_vec(n);
        out.set_col(c, &map.transform(&xi, ell)?);
    }
    Ok(out)
}

/// Runs the refinement study at the configured geometry.
///
/// Data are noise-free observations of a truth drawn from the prior, the
/// flow uses isotropic noise level `cfg.limit_gamma`, and all schemes start
/// from the same prior ensemble of `n_particles` members.
pub fn refinement_study(
    cfg: &ExperimentConfig,
    h_values: &[f64],
    seed: u64,
    n_particles: usize,
) -> Result<LimitsReport> {
    if h_values.len() < 2 {
        return Err(AppError::Invalid(
            "need at least two step sizes to fit an order".into(),
        ));
    }
    let problem = Problem::new(cfg)?;
    let n = cfg.grid_points;

    let mut rt = Prng::substream(seed, stream::TRUTH_FIELD);
    let xi_t = rt.gaussian_vec(n);
    let u_true = problem
        .map
        .transform(&xi_t, cfg.ell_true * cfg.ell_unit)?;
    let g = problem.fwd.matrix()?;
    let y = g.matvec(&u_true);
    let gamma = vec![cfg.limit_gamma; y.len()];
    let flow = LinearFlow::new(g, y, gamma)?;

    let mut ri = Prng::substream(seed, stream::INIT_FIELD);
    let u0 = sample_ensemble(
        &problem.map,
        n,
        n_particles,
        cfg.ell_fixed * cfg.ell_unit,
        &mut ri,
    )?;

    let h_min = h_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let reference_h = h_min / REF_REFINEMENT as f64;
    let n_ref = steps_for(reference_h)?;
    let mut u_ref = u0.clone();
    for _ in 0..n_ref {
        flow.rk4_step(&mut u_ref, reference_h)?;
    }

    let mut discrete_errors = Vec::with_capacity(h_values.len());
    let mut euler_errors = Vec::with_capacity(h_values.len());
    for &h in h_values {
        let steps = steps_for(h)?;
        let mut ud = u0.clone();
        let mut ue = u0.clone();
        for _ in 0..steps {
            flow.discrete_step(&mut ud, h)?;
            flow.euler_step(&mut ue, h)?;
        }
        discrete_errors.push(rel_fro(&ud, &u_ref));
        euler_errors.push(rel_fro(&ue, &u_ref));
    }

    let strictly_decreasing = |e: &[f64]| {
        let mut sorted: Vec<(f64, f64)> = h_values.iter().cloned().zip(e.iter().cloned()).collect();
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        sorted.windows(2).all(|w| w[0].1 < w[1].1)
    };

    Ok(LimitsReport {
        discrete_order: log_log_slope(h_values, &discrete_errors),
        euler_order: log_log_slope(h_values, &euler_errors),
        discrete_monotone: strictly_decreasing(&discrete_errors),
        euler_monotone: strictly_decreasing(&euler_errors),
        h_values: h_values.to_vec(),
        discrete_errors,
        euler_errors,
        reference_h,
    })
}
