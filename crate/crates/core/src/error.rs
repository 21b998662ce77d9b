use thiserror::Error;

/// Errors produced by the conerepair library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical breakdown: {0}")]
    Numerical(String),

    /// The embedding value is too close to zero for the normalized residual
    /// direction to carry any information.
    #[error("degenerate gradient: t* = {tstar:e} is at or below the threshold {threshold:e}")]
    DegenerateGradient { tstar: f64, threshold: f64 },

    #[error("unsupported regularizer composition: {0}")]
    UnsupportedComposition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("interior margin {eps:e} leaves no feasible point; retry with a smaller margin")]
    InteriorInfeasible { eps: f64 },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Wraps an error with a short description of what was being attempted.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Strips `Context` layers and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
