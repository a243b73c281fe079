use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degree too large: basis size overflows for n={n}, k={k}")]
    DegreeTooLarge { n: usize, k: usize },
    #[error("size mismatch: expected {expected} points, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("gradient undefined: {0}")]
    GradientUndefined(String),
    #[error("degenerate degree: k must be positive")]
    DegenerateDegree,
    #[error("cannot classify tail behaviour of weight: {0}")]
    CannotClassify(String),
    #[error("weight is unbounded below on the grid")]
    WeightUnboundedBelow,
    #[error("grid too short: {0}")]
    GridTooShort(String),
    #[error("insufficient samples: {got} per grid point, need at least {need}")]
    InsufficientSamples { got: usize, need: usize },
    #[error("step size failure: acceptance {acceptance:.4} after adaptation")]
    StepSizeFailure { acceptance: f64 },
    #[error("bad initialization: {0}")]
    BadInit(String),
    #[error("search failure: {0}")]
    SearchFailure(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("bad grid: {0}")]
    BadGrid(String),
    #[error("base measure is not a probability measure")]
    NonProbabilityBase,
    #[error("unknown preset: {0}")]
    UnknownPreset(String),
    #[error("Gram matrix condition {condition:e} exceeds the refusal threshold")]
    ConditionRefused { condition: f64 },
    #[error("rejection sampling efficiency too low ({efficiency:e})")]
    ProposalFailure { efficiency: f64 },
    #[error("origin is not an interior point of the body")]
    OriginNotInterior,
    #[error("count mismatch: {left} vs {right}")]
    CountMismatch { left: usize, right: usize },
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("inverse temperature {beta} is at or below the critical value {critical}")]
    BelowCritical { beta: f64, critical: f64 },
    #[error("lattice cloud too large ({count} points)")]
    CloudTooLarge { count: usize },
    #[error("degenerate interval [{a}, {b}]")]
    DegenerateInterval { a: f64, b: f64 },
    #[error("empty histogram")]
    EmptyHistogram,
    #[error("truncation tail mass {tail:e} exceeds tolerance")]
    TruncationTail { tail: f64 },
    #[error("window [{lo}, {hi}] lies outside [-1, 1]")]
    WindowOutOfRange { lo: f64, hi: f64 },
    #[error("not admissible: {0}")]
    NotAdmissible(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
