//! Unified analysis error type.
//!
//! Variants are grouped by how the CLI maps them to exit codes: problem/input
//! errors (exit 2), unsupported structure (exit 3), resource caps (exit 4),
//! diagnosed non-finite intermediates (exit 5), exhausted sweeps (exit 6).

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Problem-file or flag validation failure (line/column when available).
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Input that parses but violates a validation rule.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Expression shape the analysis does not handle.
    #[error("unsupported structure: {0}")]
    Unsupported(String),

    /// A configured resource cap was exceeded.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Per-order deadline exceeded during a sweep.
    #[error("analysis order timed out after {0:.3} s")]
    Timeout(f64),

    /// Underflow-induced non-finite intermediate (reported as DZ, matching the
    /// benchmark convention for diagnosed zero/underflow aborts).
    #[error("DZ: non-finite intermediate in {0}")]
    NonFinite(String),

    /// No u in the search bracket satisfies the confidence target.
    #[error("no feasible threshold in ({ell:.6e}, {r:.6e})")]
    NoFeasible { ell: f64, r: f64 },

    /// Every order in a sweep failed; carries per-order diagnostics.
    #[error("order sweep exhausted: {0}")]
    SweepExhausted(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }
}
