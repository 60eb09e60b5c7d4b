use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid radial grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("numeric failure: {message} (residual {residual:.3e})")]
    NumericFailure {
        message: String,
        residual: f64,
        /// Residual history of the iteration that failed, oldest first.
        trace: Vec<f64>,
    },

    #[error("disk ground state is not radial (m_star = {m_star})")]
    NotRadial { m_star: i64 },

    #[error("parameters are not admissible: {0}")]
    NotAdmissible(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("unsupported domain kind: {0}")]
    UnsupportedKind(String),

    #[error("mesh quality violation: {0}")]
    MeshQuality(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn numeric(message: impl Into<String>, residual: f64) -> Self {
        Error::NumericFailure {
            message: message.into(),
            residual,
            trace: Vec::new(),
        }
    }

    /// True for errors caused by bad inputs rather than by a solver.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::NumericFailure { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
