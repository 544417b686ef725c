use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid input vector: {0}")]
    InvalidInput(String),
    #[error("mass matrix is singular")]
    SingularMass,
    #[error("controller singularity (margin {margin:.3e})")]
    Singularity { margin: f64 },
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("invalid gains: {0}")]
    InvalidGains(String),
    #[error("Newton iteration did not converge (residual {residual:.3e} after {iterations} iterations)")]
    NewtonDiverged { residual: f64, iterations: usize },
    #[error("empty simulation log")]
    EmptyLog,
    #[error("nominal scenario failed: {0}")]
    NominalFailed(String),
    #[error("all {0} samples failed")]
    AllSamplesFailed(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            got,
        })
    }
}
