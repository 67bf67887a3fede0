use thiserror::Error;

/// Failure modes shared by every layer of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty support")]
    EmptySupport,

    #[error("support {start}..{end} does not fit in dimension {dim}")]
    SupportOutOfRange { start: usize, end: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("truncation {dim} exceeds the dense cap {cap}")]
    CapExceeded { dim: usize, cap: usize },

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("no analytic spectrum available for {0}")]
    NoAnalyticSpectrum(&'static str),

    #[error("singular mixing matrix (|det| = {0:e})")]
    SingularMatrix(f64),

    #[error("tuple not in X_n: numerical rank {rank} < {n}")]
    NotIndependent { rank: usize, n: usize },

    #[error("dimension drop under T")]
    DimensionDrop,

    #[error("orbit hits kernel at iterate {0}")]
    OrbitHitsKernel(usize),

    #[error("truncation leakage {lost:e} at iterate {k} exceeds tolerance")]
    Leakage { k: usize, lost: f64 },

    #[error("criterion hypotheses not satisfied by this model: {0}")]
    CriterionHypotheses(String),

    #[error("non-ambiguity condition violated at n = {n}: deg P_n = {degree}, b_n = {b}")]
    NonAmbiguity { n: u64, degree: usize, b: u64 },

    #[error("truncation insufficient: index {needed} requested, {available} available")]
    TruncationInsufficient { needed: u64, available: u64 },

    #[error("hypothesis unverified: {0}")]
    HypothesisUnverified(String),

    #[error("no admissible control value at n = {0}")]
    SchemeInconsistent(u64),

    #[error("enumeration index overflow")]
    EnumerationOverflow,

    #[error("retries exhausted after {0} attempts")]
    RetriesExhausted(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
