use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric or structural precondition was violated. `module` names the
    /// component whose contract was broken.
    #[error("[{module}] invalid parameter: {message}")]
    InvalidParameter {
        module: &'static str,
        message: String,
    },

    #[error("[simulate] population overflow: {cells} cells exceeds the cap of {cap}")]
    PopulationOverflow { cells: usize, cap: usize },

    #[error("[stationary] solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("[{module}] grid mismatch: {message}")]
    GridMismatch {
        module: &'static str,
        message: String,
    },

    #[error("[estimator] spectrum is not Hermitian: asymmetry {asymmetry:e} at xi = {xi}")]
    NotHermitian { asymmetry: f64, xi: f64 },

    #[error("[stationary] quadrature failed at xi = {xi}: {message}")]
    Quadrature { xi: f64, message: String },

    #[error("[{module}] {message}")]
    State {
        module: &'static str,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {message}")]
    Csv { path: String, message: String },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(module: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            module,
            message: message.into(),
        }
    }

    pub(crate) fn state(module: &'static str, message: impl Into<String>) -> Self {
        Error::State {
            module,
            message: message.into(),
        }
    }
}
