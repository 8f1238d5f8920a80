//! Ratio estimators with nonnegative weights, Nadaraya–Watson regression and
//! the Monte Carlo machinery used to check their `L^p` convergence rates.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod kernels;
pub mod moment_params;
pub mod montecarlo;
pub mod numeric_oracle;
pub mod nw_regression;
pub mod processes;
pub mod quadrature;
pub mod ratio_core;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
