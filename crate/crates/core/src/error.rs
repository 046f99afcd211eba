use thiserror::Error;

/// Errors raised by the solvers, generators and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("problem is infeasible: {0}")]
    Infeasible(String),

    #[error("maximum iterations ({iterations}) reached; projected-gradient residual {residual:.3e}")]
    MaxIterations { iterations: usize, residual: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("degenerate array geometry: {0}")]
    DegenerateGeometry(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("at sweep point {point}: {source}")]
    AtPoint { point: String, source: Box<Error> },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn is_infeasible(&self) -> bool {
        match self {
            Error::Infeasible(_) => true,
            Error::AtPoint { source, .. } => source.is_infeasible(),
            _ => false,
        }
    }
}
