//! Distribution functions of sums of independent gamma random variables,
//! of positive-definite Gaussian quadratic forms, and of low-dimensional
//! multivariate gamma distributions.
//!
//! All three are evaluated through a periodic integral over a circle of
//! radius r < 1 whose integrand pairs a product of principal powers with the
//! generating function G_a(x, y) = Σ P(a + n, x) yⁿ. Independent series and
//! Monte Carlo references live in [`oracles`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Reference constants keep every digit of their high-precision source.
#![allow(clippy::excessive_precision)]

pub mod cdf;
pub mod cli;
pub mod error;
pub mod gfun;
pub mod mvgamma;
pub mod oracles;
pub mod qform;
pub mod special;

pub use cdf::{cdf, quantile, CdfEstimate, DerivedParams, GammaSumParams, QuadratureConfig};
pub use error::{Error, Result};
