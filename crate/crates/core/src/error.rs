use thiserror::Error;

/// Errors raised by grid construction, solvers, schemes and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("mode ({k}, {l}) is not representable on this grid")]
    ModeNotRepresentable { k: i64, l: i64 },
    #[error("circle of radius {0} leaves the domain")]
    CircleOutOfDomain(f64),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("config error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Error {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }

    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping step and context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } | Error::Context { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self.root(), Error::Singular(_))
    }

    /// True for configuration and input problems (CLI exit code 1); everything
    /// else counts as a numerical failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self.root(),
            Error::Config(_)
                | Error::InvalidDimension(_)
                | Error::InvalidParameter(_)
                | Error::ModeNotRepresentable { .. }
                | Error::CircleOutOfDomain(_)
                | Error::Io(_)
        )
    }
}
