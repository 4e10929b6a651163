use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rank mismatch: expected {expected}, got {got}")]
    RankMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("core is empty after shrinking the window by {margin}")]
    EmptyCore { margin: f64 },

    #[error("need at least {needed} points in the core, found {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("degenerate embedding: {0}")]
    DegenerateEmbedding(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("substitution matrix is not primitive")]
    NotPrimitive,

    #[error("power iteration did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("integer coordinate overflow at substitution iteration {iteration}")]
    CoordinateOverflow { iteration: usize },

    #[error("tile lengths inconsistent with the substitution (label {label}, residual {residual:e})")]
    InconsistentLengths { label: usize, residual: f64 },

    #[error("residual sup grows with scale ({first} -> {last}); linear approximation fails")]
    ResidualGrowth { first: f64, last: f64 },

    #[error("Lagarias cover failed: residue at distance {distance} exceeds search radius {radius}")]
    CoverFailed { distance: f64, radius: f64 },

    #[error("epsilon {eps} must be below twice the density ({limit})")]
    EpsilonTooLarge { eps: f64, limit: f64 },

    #[error("invalid van Hove sequence: {0}")]
    InvalidVanHove(String),

    #[error("patch is not exhaustive on the requested region: {0}")]
    NotExhaustive(String),

    #[error("homomorphism rejected: {0}")]
    HomRejected(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
