//! JSON experiment configuration with defaults matching the reference
//! study: a Matérn-type field with unknown length scale on (0, π),
//! observed through an elliptic solve at 16 interior points.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{AppError, Result};

/// Estimation methods the experiment driver can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Plain ensemble inversion of the field at a fixed length scale.
    Standard,
    /// Centred hierarchical update on the stacked (field, length scale).
    Centred,
    /// Non-centred hierarchical update on (white noise, length scale).
    NonCentred,
    /// Non-centred with Gaussian localization of the field–data covariance.
    NonCentredLoc,
    /// Non-centred with Kalman-form prior inflation.
    NonCentredInfl,
    /// Non-centred with additive jitter inflation.
    NonCentredJitter,
}

impl Method {
    /// Stable label used in file names and report columns.
    pub fn label(&self) -> &'static str {
        match self {
            Method::Standard => "standard",
            Method::Centred => "centred",
            Method::NonCentred => "noncentred",
            Method::NonCentredLoc => "noncentred_loc",
            Method::NonCentredInfl => "noncentred_infl",
            Method::NonCentredJitter => "noncentred_jitter",
        }
    }

    /// True for the methods that carry a per-particle length scale.
    pub fn is_hierarchical(&self) -> bool {
        !matches!(self, Method::Standard)
    }
}

/// Full experiment configuration. Every field has a default, so a JSON
/// config may specify only the values it wants to override.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Domain endpoints.
    pub domain: [f64; 2],
    /// Number of grid nodes.
    pub grid_points: usize,
    /// Number of evenly spread observation nodes.
    pub n_observations: usize,
    /// Field amplitude σ.
    pub sigma: f64,
    /// Field regularity exponent α.
    pub alpha: f64,
    /// True length scale (hyperparameter units).
    pub ell_true: f64,
    /// Grid-unit size of one hyperparameter unit.
    pub ell_unit: f64,
    /// Uniform initialization range for the length scale.
    pub ell_init: [f64; 2],
    /// Hard clamp interval for the length scale.
    pub ell_clamp: [f64; 2],
    /// Fixed length scale used by the non-hierarchical baseline.
    pub ell_fixed: f64,
    /// Ensemble size J.
    pub n_particles: usize,
    /// Number of update iterations.
    pub n_iterations: usize,
    /// Step size h of the discrete scheme.
    pub step: f64,
    /// Measurement-noise variance used to synthesize data.
    pub gamma_data: f64,
    /// Algorithmic noise variance used inside the updates.
    pub gamma_update: f64,
    /// Localization radius in grid steps.
    pub loc_radius: f64,
    /// Inflation weight γ.
    pub inflation_gamma: f64,
    /// Prior variance of the length-scale coordinate.
    pub theta_prior_var: f64,
    /// Half-width of the finite-difference probe in the inflation operator.
    pub theta_delta: f64,
    /// Noise variance of the refinement study's limit problem.
    pub limit_gamma: f64,
    /// Base seed; seed k of a multi-seed run uses `base_seed + k`.
    pub base_seed: u64,
    /// Methods to run, in report order.
    pub methods: Vec<Method>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            domain: [0.0, std::f64::consts::PI],
            grid_points: 50,
            n_observations: 16,
            sigma: 1.0,
            alpha: 0.8,
            ell_true: 37.0,
            ell_unit: 0.02,
            ell_init: [10.0, 40.0],
            ell_clamp: [1.0, 400.0],
            ell_fixed: 25.0,
            n_particles: 50,
            n_iterations: 15,
            step: 1.0 / 15.0,
            gamma_data: 1e-4,
            gamma_update: 5e-3,
            loc_radius: 10.0,
            inflation_gamma: 0.1,
            theta_prior_var: 75.0,
            theta_delta: 0.5,
            limit_gamma: 1.0,
            base_seed: 0,
            methods: vec![
                Method::Standard,
                Method::Centred,
                Method::NonCentred,
                Method::NonCentredLoc,
                Method::NonCentredInfl,
            ],
        }
    }
}

impl ExperimentConfig {
    /// Loads a config from a JSON file, filling unspecified fields with
    /// defaults.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks internal consistency.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(AppError::Invalid(msg.to_string()));
        if !(self.domain[1] > self.domain[0]) {
            return bad("domain must be increasing");
        }
        if self.grid_points < 4 {
            return bad("grid_points must be at least 4");
        }
        if self.n_observations == 0 || self.n_observations + 1 >= self.grid_points {
            return bad("n_observations must fit inside the grid");
        }
        if !(self.sigma > 0.0) || !(self.alpha > 0.5) {
            return bad("sigma must be positive and alpha must exceed 1/2");
        }
        if !(self.ell_unit > 0.0) || !(self.ell_true > 0.0) {
            return bad("length-scale parameters must be positive");
        }
        if !(self.ell_init[1] > self.ell_init[0]) || !(self.ell_init[0] > 0.0) {
            return bad("ell_init must be a positive increasing interval");
        }
        if !(self.ell_clamp[1] > self.ell_clamp[0]) || !(self.ell_clamp[0] > 0.0) {
            return bad("ell_clamp must be a positive increasing interval");
        }
        if self.n_particles < 2 {
            return bad("n_particles must be at least 2");
        }
        if self.n_iterations == 0 {
            return bad("n_iterations must be positive");
        }
        if !(self.step > 0.0) {
            return bad("step must be positive");
        }
        if !(self.gamma_data > 0.0) || !(self.gamma_update > 0.0) || !(self.limit_gamma > 0.0) {
            return bad("noise variances must be positive");
        }
        if !(self.loc_radius > 0.0) {
            return bad("loc_radius must be positive");
        }
        if !(self.inflation_gamma >= 0.0) || !(self.theta_prior_var >= 0.0) {
            return bad("inflation parameters must be nonnegative");
        }
        if !(self.theta_delta > 0.0) {
            return bad("theta_delta must be positive");
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty");
        }
        Ok(())
    }
}
