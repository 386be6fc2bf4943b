//! Hierarchical ensemble updates for the joint state (field coordinates,
//! length scale).
//!
//! Two parameterizations are provided. The *centred* flavor stacks the
//! physical field and the hyperparameter into one vector and applies the
//! plain linear update, so particles remain in the affine span of the
//! initial ensemble. The *non-centred* flavor keeps white-noise field
//! coordinates `ξ` and a length scale `ℓ` per particle, evaluates the
//! forward map through `u = T(ξ, ℓ)`, and updates both blocks with their
//! empirical cross-covariances against the predictions; the nonlinearity
//! of `T` in `ℓ` is what lets data reshape the physical particles beyond
//! the initial span and drive `ℓ` toward values that explain the data.
//!
//! The hyperparameter is kept inside a hard interval by clamping after
//! every update; the centred flavor deliberately omits the clamp to keep
//! its linear-span property exact.

use alloc::vec::Vec;

use crate::ensemble::{self, col_mean};
use crate::linalg::Mat;
use crate::matern::SpectralFieldMap;
use crate::rng::Prng;
use crate::variants::KalmanInflation;
use crate::{Error, Result};

/// Hard interval for the hyperparameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clamp {
    /// Lower bound.
    pub lo: f64,
    /// Upper bound.
    pub hi: f64,
}

impl Clamp {
    /// Clamps a value into the interval.
    pub fn apply(&self, v: f64) -> f64 {
        v.max(self.lo).min(self.hi)
    }
}

/// Non-centred ensemble: white-noise field coordinates (one particle per
/// column) and a length scale per particle, in the caller's units.
#[derive(Debug, Clone)]
pub struct NonCentredEnsemble {
    /// Field coordinates, `n × J`.
    pub xi: Mat,
    /// Length scales, length `J`.
    pub ell: Vec<f64>,
}

impl NonCentredEnsemble {
    /// Draws `n_particles` particles with `ξ ~ N(0, I)` and
    /// `ℓ ~ U[ell_lo, ell_hi]`, each from its own stream.
    pub fn init(
        n: usize,
        n_particles: usize,
        ell_lo: f64,
        ell_hi: f64,
        rng_xi: &mut Prng,
        rng_ell: &mut Prng,
    ) -> Result<Self> {
        if n_particles == 0 {
            return Err(Error::EmptyEnsemble);
        }
        if !(ell_hi > ell_lo) || !(ell_lo > 0.0) {
            return Err(Error::InvalidParameter("length-scale range is invalid"));
        }
        let ell = (0..n_particles)
            .map(|_| rng_ell.next_uniform_in(ell_lo, ell_hi))
            .collect();
        let xi = Mat::from_fn(n, n_particles, |_, _| rng_xi.next_gaussian());
        Ok(NonCentredEnsemble { xi, ell })
    }

    /// Number of particles.
    pub fn n_particles(&self) -> usize {
        self.xi.cols()
    }

    /// Ensemble mean of the length scales.
    pub fn mean_ell(&self) -> f64 {
        self.ell.iter().sum::<f64>() / self.ell.len() as f64
    }

    /// Physical fields `u_j = T(ξ_j, ℓ_j · unit)`, one per column; `unit`
    /// converts stored length scales to grid units.
    pub fn physical_fields(&self, map: &SpectralFieldMap, unit: f64) -> Result<Mat> {
        if self.ell.len() != self.xi.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.xi.cols(),
                got: self.ell.len(),
            });
        }
        let mut out = Mat::zeros(map.len(), self.n_particles());
        for j in 0..self.n_particles() {
            let u = map.transform(&self.xi.col(j), self.ell[j] * unit)?;
            out.set_col(j, &u);
        }
        Ok(out)
    }
}

/// One non-centred update with already-drawn perturbed observations `yp`
/// and pre-scaled noise diagonal `gamma_scaled = h⁻¹ diag(Γ)`.
///
/// Optional modifiers: `xi_taper` (entrywise on the `ξ`–prediction
/// cross-covariance, `n × K`), `pp_taper` (entrywise on the prediction
/// covariance, `K × K`) and Kalman-form `inflation`.
#[allow(clippy::too_many_arguments)]
pub fn noncentred_update(
    ens: &mut NonCentredEnsemble,
    preds: &Mat,
    yp: &Mat,
    gamma_scaled: &[f64],
    clamp: Clamp,
    xi_taper: Option<&Mat>,
    pp_taper: Option<&Mat>,
    inflation: Option<&KalmanInflation>,
) -> Result<()> {
    let j = ens.n_particles();
    if ens.ell.len() != j || preds.cols() != j || yp.cols() != j {
        return Err(Error::DimensionMismatch {
            expected: j,
            got: preds.cols(),
        });
    }
    if preds.rows() != yp.rows() || preds.rows() != gamma_scaled.len() {
        return Err(Error::DimensionMismatch {
            expected: preds.rows(),
            got: gamma_scaled.len(),
        });
    }
    let inv_j = 1.0 / j as f64;

    let pc = ensemble::center_columns(preds)?;
    let mut cpp = pc.matmul_abt(&pc);
    cpp.scale(inv_j);

    let xc = ensemble::center_columns(&ens.xi)?;
    let mut cxp = xc.matmul_abt(&pc);
    cxp.scale(inv_j);

    let ell_mean = ens.ell.iter().sum::<f64>() * inv_j;
    let mut ctp = alloc::vec![0.0; preds.rows()];
    for (jj, &l) in ens.ell.iter().enumerate() {
        let dev = l - ell_mean;
        for (k, c) in ctp.iter_mut().enumerate() {
            *c += dev * pc[(k, jj)] * inv_j;
        }
    }

    if let Some(t) = xi_taper {
        cxp.schur_mul(t)?;
    }
    if let Some(t) = pp_taper {
        cpp.schur_mul(t)?;
    }

    let mut gain_x = cxp;
    let mut gain_t = ctp;
    if let Some(inf) = inflation {
        if inf.linear_map.cols() != ens.xi.rows() || inf.linear_map.rows() != preds.rows() {
            return Err(Error::DimensionMismatch {
                expected: preds.rows() * ens.xi.rows(),
                got: inf.linear_map.rows() * inf.linear_map.cols(),
            });
        }
        let mmt = inf.linear_map.matmul_abt(&inf.linear_map);
        cpp.add_scaled(&mmt, inf.gamma);
        let w = inf.gamma * inf.theta_var;
        for a in 0..cpp.rows() {
            for b in 0..cpp.cols() {
                cpp[(a, b)] += w * inf.theta_slope[a] * inf.theta_slope[b];
            }
        }
        gain_x.add_scaled(&inf.linear_map.transpose(), inf.gamma);
        for (g, d) in gain_t.iter_mut().zip(inf.theta_slope.iter()) {
            *g += w * d;
        }
    }

    let mut innov = yp.clone();
    innov.add_scaled(preds, -1.0);
    let sol = ensemble::innovation_solve(&cpp, gamma_scaled, &innov)?;

    ens.xi.add_scaled(&gain_x.matmul(&sol), 1.0);
    for jj in 0..j {
        let mut dl = 0.0;
        for k in 0..sol.rows() {
            dl += gain_t[k] * sol[(k, jj)];
        }
        ens.ell[jj] = clamp.apply(ens.ell[jj] + dl);
    }
    Ok(())
}

/// One centred update on the stacked state (physical field rows first,
/// hyperparameter in the last row). A plain linear update on the joint
/// vector: particles remain in the affine span of the initial ensemble,
/// and no clamp is applied.
pub fn centred_update(
    stacked: &mut Mat,
    preds: &Mat,
    yp: &Mat,
    gamma_scaled: &[f64],
) -> Result<()> {
    *stacked = ensemble::update_with_perturbed(stacked, preds, yp, gamma_scaled)?;
    Ok(())
}

/// Stacks physical fields and length scales into the centred state layout.
pub fn stack_centred(fields: &Mat, ell: &[f64]) -> Result<Mat> {
    if fields.cols() != ell.len() {
        return Err(Error::DimensionMismatch {
            expected: fields.cols(),
            got: ell.len(),
        });
    }
    let mut out = Mat::zeros(fields.rows() + 1, fields.cols());
    for j in 0..fields.cols() {
        for i in 0..fields.rows() {
            out[(i, j)] = fields[(i, j)];
        }
        out[(fields.rows(), j)] = ell[j];
    }
    Ok(out)
}

/// Ensemble-mean field of a centred stacked state (drops the last row).
pub fn centred_mean_field(stacked: &Mat) -> Result<Vec<f64>> {
    let mean = col_mean(stacked)?;
    Ok(mean[..mean.len() - 1].to_vec())
}
