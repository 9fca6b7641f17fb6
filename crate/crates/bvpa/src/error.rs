//! Error type shared by every module of the crate.

use thiserror::Error;

/// Everything that can go wrong across sampling, estimation, studies, and
/// the data pipeline.
///
/// The variants are grouped so that callers (in particular the CLI) can map
/// them onto coarse categories: invalid inputs, data problems, and numeric
/// failures of the iterative procedures.
#[derive(Debug, Error)]
pub enum BvpaError {
    /// A parameter value outside its admissible range (non-positive scale or
    /// shape, non-finite location, malformed configuration).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A function argument outside its mathematical domain (for example a
    /// quantile level outside the open unit interval).
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural precondition was violated (mismatched frames, an index
    /// out of range, a configuration that cannot be run).
    #[error("precondition violation: {0}")]
    Precondition(String),

    /// An operation that needs observations received none.
    #[error("empty dataset")]
    EmptyData,

    /// An operation produced no output rows (for example a threshold pass
    /// that retained nothing).
    #[error("empty result: {0}")]
    EmptyResult(String),

    /// Input data that no continuous sample could produce (constant columns
    /// and similar degeneracies).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// The univariate maximum-likelihood fixed point exhausted its sweep
    /// budget. The payload carries the location estimate (always the exact
    /// sample minimum) together with the final scale/shape iterate so the
    /// caller can inspect where the iteration was drifting.
    #[error(
        "univariate MLE did not converge after {iterations} sweeps \
         (mu={mu}, last sigma={sigma}, last alpha={alpha})"
    )]
    MleNonConvergence {
        mu: f64,
        sigma: f64,
        alpha: f64,
        iterations: usize,
    },

    /// A sufficient statistic or update coefficient that must be positive
    /// came out zero, so a shape update is undefined.
    #[error("degenerate statistics: {0}")]
    DegenerateStatistics(String),

    /// A normalized coordinate fell at or below -1, which no Pareto
    /// location/scale pair can produce; the frame does not match the data.
    #[error("normalized value {z} at index {index} is <= -1; location/scale frame does not match the data")]
    InvalidNormalization { index: usize, z: f64 },

    /// A gradient step could not keep a scale iterate positive even after
    /// repeated halving.
    #[error("scale update diverged: {0}")]
    StepDivergence(String),

    /// Every replication of a study or bootstrap cell failed, so there is
    /// nothing to aggregate.
    #[error("all {failures} replications failed for variant {variant}, n={n}")]
    AllReplicationsFailed {
        variant: String,
        n: usize,
        failures: usize,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    /// A malformed row in an input file; `line` is 1-based and counts the
    /// header.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, BvpaError>;
