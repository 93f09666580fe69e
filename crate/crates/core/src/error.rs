use thiserror::Error;

/// Errors produced by the channel model, beamforming and solver routines.
#[derive(Debug, Error)]
pub enum HbfError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("combiner is rank deficient")]
    SingularCombiner,

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("ill-conditioned matrix (condition estimate {0:e})")]
    IllConditioned(f64),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("search space of {bits} binary entries exceeds the enumeration limit of {limit}")]
    ShapeTooLarge { bits: usize, limit: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HbfError {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            HbfError::Infeasible(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, HbfError>;
