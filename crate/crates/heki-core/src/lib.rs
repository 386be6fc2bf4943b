//! Core numerics for hierarchical ensemble Kalman inversion.
//!
//! The crate provides the building blocks for solving linear inverse
//! problems with ensemble Kalman iterations whose priors come from the
//! Whittle–Matérn family, with the length scale itself treated as an
//! unknown:
//!
//! - [`grid`], [`matern`]: uniform 1-D grids, the sine eigenbasis, the
//!   stationary Matérn kernel and two exact field samplers;
//! - [`forward`]: a discretized elliptic forward operator with pointwise
//!   observations;
//! - [`ensemble`]: empirical moments and the plain perturbed-observation
//!   Kalman update with an explicit step size;
//! - [`hierarchy`]: centred and non-centred updates for the joint state
//!   (field coordinates, length scale);
//! - [`variants`]: covariance localization and prior-inflation variants;
//! - [`flow`]: the continuous-time limit as a deterministic/stochastic
//!   flow, with explicit, tamed and Runge–Kutta steppers;
//! - [`rng`], [`linalg`], [`special`]: deterministic substream randomness
//!   and the small numerical kernels everything else is built on.
//!
//! The crate is `no_std` (with `alloc`); all file, serialization and
//! command-line concerns live in the companion binary crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]
#![warn(missing_docs)]

extern crate alloc;

pub mod ensemble;
pub mod error;
pub mod flow;
pub mod forward;
pub mod grid;
pub mod hierarchy;
pub mod linalg;
pub mod matern;
pub mod rng;
pub mod special;
pub mod variants;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
