use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("mesh construction failed: {0}")]
    Mesh(String),
    #[error("location {index} lies outside the mesh")]
    Lookup { index: usize },
    #[error("assembly failed on triangle {triangle}: {msg}")]
    Assembly { triangle: usize, msg: String },
    #[error("parameter overflow: {0}")]
    ParameterOverflow(String),
    #[error("matrix not positive definite (pivot {pivot})")]
    NotSpd { pivot: usize },
    #[error("rational fit failed: {msg} (residual {residual:.3e})")]
    RationalFit { msg: String, residual: f64 },
    #[error("ill-conditioned operator: {0}")]
    Conditioning(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("degenerate sea state: {0}")]
    DegenerateSea(String),
    #[error("quadrature did not converge (error estimate {residual:.3e})")]
    Quadrature { residual: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Data,
    Numerical,
    Config,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Dimension(_)
            | Error::Parse { .. }
            | Error::Mesh(_)
            | Error::Lookup { .. }
            | Error::Data(_)
            | Error::Io(_) => ErrorClass::Data,
            Error::Config(_) => ErrorClass::Config,
            _ => ErrorClass::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
