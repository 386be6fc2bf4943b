//! Ensemble empirical moments and the perturbed-observation Kalman update.
//!
//! Particles are stored as the columns of a matrix. Empirical covariances
//! use the `1/J` normalization throughout. The update with step size `h`
//! reads
//!
//! ```text
//! u_j ← u_j + C^{up} (C^{pp} + h⁻¹Γ)⁻¹ (y_j - p_j),
//! y_j = y + ι_j,   ι_j ~ N(0, h⁻¹Γ),
//! ```
//!
//! so a unit step with ensemble-free `Γ` recovers the classical iteration
//! and smaller steps damp each increment while injecting proportionally
//! larger observation noise.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Mat;
use crate::rng::Prng;
use crate::{Error, Result};

/// Mean of the columns of `m`.
pub fn col_mean(m: &Mat) -> Result<Vec<f64>> {
    if m.cols() == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let mut mean = vec![0.0; m.rows()];
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            mean[i] += m[(i, j)];
        }
    }
    let inv = 1.0 / m.cols() as f64;
    for v in mean.iter_mut() {
        *v *= inv;
    }
    Ok(mean)
}

/// Columns of `m` with the column mean removed.
pub fn center_columns(m: &Mat) -> Result<Mat> {
    let mean = col_mean(m)?;
    let mut out = m.clone();
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            out[(i, j)] -= mean[i];
        }
    }
    Ok(out)
}

/// Empirical cross-covariance `A_c B_cᵀ / J` between two ensembles with a
/// shared number of particles.
pub fn cross_cov(a: &Mat, b: &Mat) -> Result<Mat> {
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            got: b.cols(),
        });
    }
    let ac = center_columns(a)?;
    let bc = center_columns(b)?;
    let mut c = ac.matmul_abt(&bc);
    c.scale(1.0 / a.cols() as f64);
    Ok(c)
}

/// Scales a noise covariance diagonal by the inverse step size.
pub fn scaled_gamma(gamma_diag: &[f64], step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidParameter("step size must be positive"));
    }
    if gamma_diag.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::InvalidParameter(
            "noise covariance diagonal must be positive",
        ));
    }
    Ok(gamma_diag.iter().map(|&g| g / step).collect())
}

/// Draws the perturbed-observation matrix `y_j = y + ι_j` with
/// `ι_j ~ N(0, diag(gamma_scaled))`, one column per particle.
pub fn perturb_observations(
    y: &[f64],
    gamma_scaled: &[f64],
    n_particles: usize,
    rng: &mut Prng,
) -> Result<Mat> {
    if y.len() != gamma_scaled.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: gamma_scaled.len(),
        });
    }
    if n_particles == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let mut out = Mat::zeros(y.len(), n_particles);
    for j in 0..n_particles {
        for i in 0..y.len() {
            out[(i, j)] = y[i] + libm::sqrt(gamma_scaled[i]) * rng.next_gaussian();
        }
    }
    Ok(out)
}

/// Solves `(C^{pp} + diag(gamma_scaled)) X = innovations` for the shared
/// right factor of every Kalman gain in one iteration.
pub fn innovation_solve(cpp: &Mat, gamma_scaled: &[f64], innov: &Mat) -> Result<Mat> {
    if cpp.rows() != cpp.cols() || cpp.rows() != gamma_scaled.len() {
        return Err(Error::DimensionMismatch {
            expected: cpp.rows(),
            got: gamma_scaled.len(),
        });
    }
    let mut a = cpp.clone();
    for i in 0..a.rows() {
        a[(i, i)] += gamma_scaled[i];
    }
    Ok(a.cholesky()?.solve_mat(innov))
}

/// One perturbed-observation update of `state` given already-drawn
/// perturbed data `yp`; returns the updated ensemble.
pub fn update_with_perturbed(
    state: &Mat,
    preds: &Mat,
    yp: &Mat,
    gamma_scaled: &[f64],
) -> Result<Mat> {
    if preds.rows() != yp.rows() || preds.cols() != yp.cols() || state.cols() != preds.cols() {
        return Err(Error::DimensionMismatch {
            expected: preds.rows() * preds.cols(),
            got: yp.rows() * yp.cols(),
        });
    }
    let cpp = cross_cov(preds, preds)?;
    let cup = cross_cov(state, preds)?;
    let mut innov = yp.clone();
    innov.add_scaled(preds, -1.0);
    let x = innovation_solve(&cpp, gamma_scaled, &innov)?;
    let mut out = state.clone();
    out.add_scaled(&cup.matmul(&x), 1.0);
    Ok(out)
}

/// One full update with step size `step`: draws the perturbations from
/// `rng` with covariance `step⁻¹ diag(gamma_diag)` and applies the gain.
pub fn standard_update(
    state: &Mat,
    preds: &Mat,
    y: &[f64],
    gamma_diag: &[f64],
    step: f64,
    rng: &mut Prng,
) -> Result<Mat> {
    let gs = scaled_gamma(gamma_diag, step)?;
    let yp = perturb_observations(y, &gs, state.cols(), rng)?;
    update_with_perturbed(state, preds, &yp, &gs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Scalar three-particle Kalman case, worked by hand and frozen. [DERIVED]
    const HAND_U: [f64; 3] = [0.2, -0.5, 1.1];
    const HAND_IOTA: [f64; 3] = [0.05, -0.10, 0.02];
    const HAND_CUP: f64 = 0.8577777777777779;
    const HAND_CPP: f64 = 1.7155555555555557;
    const HAND_GAIN: f64 = 0.3871614844533601;
    const HAND_UNEW: [f64; 3] = [
        0.4516549648946841,
        0.23560682046138426,
        0.6431494483450351,
    ];

    #[test]
    fn hand_case_moments_and_update() {
        let u = Mat::from_vec(1, 3, HAND_U.to_vec()).unwrap();
        let p = Mat::from_fn(1, 3, |_, j| 2.0 * HAND_U[j]);
        let cup = cross_cov(&u, &p).unwrap();
        let cpp = cross_cov(&p, &p).unwrap();
        assert!((cup[(0, 0)] - HAND_CUP).abs() < 1e-15);
        assert!((cpp[(0, 0)] - HAND_CPP).abs() < 1e-15);
        assert!((cup[(0, 0)] / (cpp[(0, 0)] + 0.5) - HAND_GAIN).abs() < 1e-15);

        let yp = Mat::from_fn(1, 3, |_, j| 1.0 + HAND_IOTA[j]);
        let unew = update_with_perturbed(&u, &p, &yp, &[0.5]).unwrap();
        for j in 0..3 {
            assert!(
                (unew[(0, j)] - HAND_UNEW[j]).abs() < 1e-14,
                "particle {j}: {} vs {}",
                unew[(0, j)],
                HAND_UNEW[j]
            );
        }
    }

    #[test]
    fn centering_removes_mean() {
        let m = Mat::from_fn(3, 5, |i, j| (i * 5 + j) as f64 * 0.37 - 1.0);
        let c = center_columns(&m).unwrap();
        let mean = col_mean(&c).unwrap();
        for v in mean {
            assert!(v.abs() < 1e-14);
        }
    }

    #[test]
    fn perturbations_have_requested_spread() {
        let mut rng = Prng::substream(99, 4);
        let y = [1.0, -2.0];
        let gs = [4.0, 0.25];
        let yp = perturb_observations(&y, &gs, 40_000, &mut rng).unwrap();
        for i in 0..2 {
            let mut s = 0.0;
            let mut s2 = 0.0;
            for j in 0..yp.cols() {
                let d = yp[(i, j)] - y[i];
                s += d;
                s2 += d * d;
            }
            let mean = s / yp.cols() as f64;
            let var = s2 / yp.cols() as f64 - mean * mean;
            assert!(mean.abs() < 0.05 * libm::sqrt(gs[i]));
            assert!((var / gs[i] - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn empty_and_mismatched_inputs_error() {
        let m = Mat::zeros(2, 0);
        assert_eq!(col_mean(&m).unwrap_err(), Error::EmptyEnsemble);
        let a = Mat::zeros(2, 3);
        let b = Mat::zeros(2, 4);
        assert!(cross_cov(&a, &b).is_err());
        assert!(scaled_gamma(&[1.0, -1.0], 1.0).is_err());
        assert!(scaled_gamma(&[1.0], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn self_covariance_is_positive_semidefinite(seed in 0u64..500) {
            let mut rng = Prng::substream(seed, 0);
            let a = Mat::from_fn(4, 6, |_, _| rng.next_gaussian());
            let c = cross_cov(&a, &a).unwrap();
            // x'Cx = |B'x|²/J >= 0 for every x.
            let x = rng.gaussian_vec(4);
            let cx = c.matvec(&x);
            let quad = crate::linalg::dot(&x, &cx);
            prop_assert!(quad >= -1e-12);
            // And symmetry.
            for i in 0..4 {
                for j in 0..4 {
                    prop_assert!((c[(i, j)] - c[(j, i)]).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn update_is_invariant_under_particle_relabeling(perm in 0usize..6) {
            // Swapping particles must swap the updated particles identically.
            let mut rng = Prng::substream(41, 2);
            let u = Mat::from_fn(3, 4, |_, _| rng.next_gaussian());
            let p = Mat::from_fn(2, 4, |_, _| rng.next_gaussian());
            let yp = Mat::from_fn(2, 4, |_, _| rng.next_gaussian());
            let gs = [0.7, 1.3];
            let base = update_with_perturbed(&u, &p, &yp, &gs).unwrap();

            let a = perm % 4;
            let b = (perm + 1) % 4;
            let swap = |m: &Mat| {
                let mut s = m.clone();
                let ca = m.col(a);
                let cb = m.col(b);
                s.set_col(a, &cb);
                s.set_col(b, &ca);
                s
            };
            let swapped = update_with_perturbed(&swap(&u), &swap(&p), &swap(&yp), &gs).unwrap();
            for i in 0..3 {
                prop_assert!((swapped[(i, a)] - base[(i, b)]).abs() < 1e-12);
                prop_assert!((swapped[(i, b)] - base[(i, a)]).abs() < 1e-12);
            }
        }
    }
}
