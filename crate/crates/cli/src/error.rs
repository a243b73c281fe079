use fekete_gibbs::Error as CoreError;

/// Failure classes, each with its own exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("admissibility failure: {0}")]
    Admissibility(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Admissibility(_) => 3,
            CliError::Solver(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        use CoreError::*;
        let msg = e.to_string();
        match e {
            NotAdmissible(_) | BelowCritical { .. } => CliError::Admissibility(msg),
            DegreeTooLarge { .. }
            | SizeMismatch { .. }
            | DimensionMismatch { .. }
            | InvalidConfiguration(_)
            | DegenerateDegree
            | CannotClassify(_)
            | WeightUnboundedBelow
            | GridTooShort(_)
            | InsufficientSamples { .. }
            | BadGrid(_)
            | NonProbabilityBase
            | UnknownPreset(_)
            | OriginNotInterior
            | CountMismatch { .. }
            | CloudTooLarge { .. }
            | DegenerateInterval { .. }
            | WindowOutOfRange { .. }
            | InvalidInput(_)
            | Parse(_) => CliError::Config(msg),
            _ => CliError::Solver(msg),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn io_err(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Solver(format!("{}: {e}", path.display()))
}
