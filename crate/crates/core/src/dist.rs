//! Input distributions.
//!
//! Three truncated families are supported. Bounds are exact rationals from
//! the problem file; the analysis consumes them both exactly (interval boxes,
//! sign classification) and as `f64` (moments, sampling).

use crate::rat::{rat_to_f64, Dir, Rat};
use num_traits::Signed;

/// Distribution family of one input variable.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Uniform on [a, b].
    Uniform,
    /// Standard normal (mean 0, variance 1 before truncation) restricted to [a, b].
    TruncNormal,
    /// Double exponential with density (1/2σ)·exp(−|x|/σ) restricted to [a, b].
    TruncLaplace {
        /// Scale parameter; called σ after the benchmark convention even
        /// though it is a scale, not a variance.
        sigma: Rat,
    },
}

/// A truncated input distribution on [a, b].
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub family: Family,
    pub a: Rat,
    pub b: Rat,
}

/// Sign class of a variable's support, driving the PN decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignClass {
    /// a < 0 < b: the variable takes both signs.
    Spans,
    /// a ≥ 0.
    NonNeg,
    /// b ≤ 0.
    NonPos,
}

impl Distribution {
    pub fn uniform(a: Rat, b: Rat) -> Self {
        Distribution { family: Family::Uniform, a, b }
    }
    pub fn trunc_normal(a: Rat, b: Rat) -> Self {
        Distribution { family: Family::TruncNormal, a, b }
    }
    pub fn trunc_laplace(a: Rat, b: Rat, sigma: Rat) -> Self {
        Distribution { family: Family::TruncLaplace { sigma }, a, b }
    }

    pub fn sign_class(&self) -> SignClass {
        if self.a.is_negative() && self.b.is_positive() {
            SignClass::Spans
        } else if !self.a.is_negative() {
            SignClass::NonNeg
        } else {
            SignClass::NonPos
        }
    }

    /// Support endpoints as nearest `f64` (used by moments and sampling).
    pub fn support_f64(&self) -> (f64, f64) {
        (rat_to_f64(&self.a, Dir::Nearest), rat_to_f64(&self.b, Dir::Nearest))
    }

    /// Laplace scale as `f64`; 1.0 placeholder for other families.
    pub fn sigma_f64(&self) -> f64 {
        match &self.family {
            Family::TruncLaplace { sigma } => rat_to_f64(sigma, Dir::Nearest),
            _ => 1.0,
        }
    }
}
