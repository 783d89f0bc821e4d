use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A level (α, β) fell outside the domain of the measure or family.
    #[error("level {value} outside domain {domain}")]
    Domain { value: f64, domain: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A family that should be non-increasing in its level was observed increasing.
    #[error("family is not monotone: value {upper} at level {lo} is below {lower} at level {hi}")]
    NonMonotone {
        lo: f64,
        hi: f64,
        upper: f64,
        lower: f64,
    },

    #[error("matrix decomposition failed: {0}")]
    Decomposition(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::InvalidInput(_) => "invalid_input",
            Error::NonMonotone { .. } => "non_monotone",
            Error::Decomposition(_) => "decomposition",
            Error::Infeasible(_) => "infeasible",
            Error::Degenerate(_) => "degenerate",
            Error::Data(_) => "data",
            Error::Parse { .. } => "parse",
            Error::Solver(_) => "solver",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn unit_level(alpha: f64) -> Result<f64> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(alpha)
    } else {
        Err(Error::Domain {
            value: alpha,
            domain: "(0, 1)".into(),
        })
    }
}
