use thiserror::Error;

/// Errors produced anywhere in the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("scheme error: {0}")]
    Scheme(String),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("degenerate basis: {0}")]
    DegenerateBasis(String),

    #[error("not implemented: {0}")]
    NotImplemented(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable category tag, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Model(_) => "model",
            Error::Argument(_) => "argument",
            Error::Scheme(_) => "scheme",
            Error::Solver { .. } => "solver",
            Error::Numerical(_) => "numerical",
            Error::DegenerateBasis(_) => "degenerate_basis",
            Error::NotImplemented(_) => "not_implemented",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}
