use thiserror::Error;

/// Errors raised by the zero range toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZrpError {
    #[error("site {site}: rate at k = 0 must be 0, got {value}")]
    NonzeroAtZero { site: usize, value: f64 },
    #[error("site {site}: rate c({k}) = {value} is not strictly positive")]
    NonpositiveRate { site: usize, k: usize, value: f64 },
    #[error("site {site}: tail coefficient {theta} must be positive")]
    NonpositiveTail { site: usize, theta: f64 },
    #[error("invalid rate specification: {0}")]
    RateSpec(String),
    #[error("condition (M) fails for every k0 <= {k0_max}")]
    MNotSatisfied { k0_max: usize },
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("truncation window would exceed the hard cap of {cap} terms")]
    TruncationOverflow { cap: usize },
    #[error("no convergence after {iterations} iterations: {what}")]
    NoConvergence { what: String, iterations: usize },
    #[error("state space has {count} states, above the cap of {cap}")]
    StateSpaceTooLarge { count: u128, cap: usize },
    #[error("coupling space has {count} pairs, above the cap of {cap}")]
    PairSpaceTooLarge { count: u128, cap: usize },
    #[error("generator is not irreducible")]
    NotIrreducible,
    #[error("density has a negative entry {value} at state {index}")]
    NegativeDensity { index: usize, value: f64 },
    #[error("eigensolve failed: {0}")]
    EigensolveFailure(String),
    #[error("ratio is degenerate: density is within 1e-12 of constant")]
    DegenerateRatio,
    #[error("fit needs at least two points, got {0}")]
    FitUnderdetermined(usize),
    #[error("birth-death law has zero mass at {0}")]
    ZeroMass(usize),
    #[error("invalid initial configuration: {0}")]
    InvalidInitial(String),
    #[error("insufficient signal: {0}")]
    InsufficientSignal(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, ZrpError>;
