//! Filter-based regularization of linear statistical inverse problems in the
//! Gaussian sequence model
//!
//! ```text
//! Y_k = sqrt(lambda_k) f_k + sigma xi_k,   xi_k ~ N(0, 1) i.i.d.
//! ```
//!
//! The crate provides the ordered spectral filters (spectral cut-off,
//! Tikhonov, iterated Tikhonov, Landweber, Showalter), the exact prediction
//! and direct risks, the empirical prediction-risk score used to choose the
//! regularization parameter from data, the Lepskii balancing principle, the
//! oracle choice, problem generators for the Green-kernel operator and for
//! diagonal test operators, a seeded Monte Carlo engine, and a weighted
//! least-squares test for empirical convergence rates.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod error;
pub mod montecarlo;
pub mod problems;
pub mod rate;
pub mod risk;
pub mod rng;
pub mod select;
pub mod spectral;
mod sum;

pub use error::{Error, Result};
pub use spectral::{
    estimate_coefficients, filter_value, s_value, sample_observations, EstimateCoefficients,
    FilterFamily, FilterSpec, Observations, SpectralProblem,
};
