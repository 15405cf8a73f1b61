//! Probabilistic round-off error analysis for floating-point expressions.
//!
//! Given an arithmetic expression over independent random inputs with known
//! distributions, this crate bounds the round-off error of its
//! floating-point evaluation *probabilistically*: it produces a threshold
//! `U` such that the error exceeds `U` with probability at most `1 - c` for
//! a requested confidence `c`. The pipeline:
//!
//! 1. [`expr`] parses the problem (variables, distributions, expression)
//!    and classifies its structure;
//! 2. [`fpmodel`] applies the IEEE rounding model `fl(x . y) =
//!    (x . y)(1 + e) + d` to every operation and extracts the first-order
//!    error coefficients and the exact higher-order residual;
//! 3. [`poly`] provides the exact sparse polynomial arithmetic, including
//!    the positive/negative-part rewrite that makes coefficient magnitudes
//!    integrable;
//! 4. [`moments`] computes exact or certified-direction moments of those
//!    polynomials under the input distributions, optionally restricted to
//!    subranges;
//! 5. [`threshold`] combines the moments into concentration bounds and
//!    searches for the smallest certifiable threshold;
//! 6. [`detbound`] supplies deterministic interval/structural bounds for
//!    the residual term;
//! 7. [`mc`] cross-checks thresholds by simulating actual floating-point
//!    evaluations against an exact reference.

pub mod detbound;
pub mod dist;
pub mod error;
pub mod expr;
pub mod fpmodel;
pub mod mc;
pub mod moments;
pub mod poly;
pub mod rat;
pub mod special;
pub mod threshold;

pub use error::{Error, Result};
