use std::path::PathBuf;

/// Errors produced by the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: expected dimension {expected}, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("evolution failed at t = {time}: {reason}")]
    Evolution { time: f64, reason: String },

    #[error(
        "integrator not converged at t = {time}: halving the step changed the state by {change:.3e}"
    )]
    Convergence { time: f64, change: f64 },

    #[error("degenerate state: squared norm is {0:e}")]
    DegenerateState(f64),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("finite-difference step too small: {0}")]
    StepSize(String),

    #[error("fit window error: {0}")]
    Window(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dense oracle limited to dimension {limit}, got {dimension}")]
    OracleScale { dimension: usize, limit: usize },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("run failed at sweep point `{point}`: {source}")]
    Run {
        point: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed snapshot record: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
