use thiserror::Error;

/// Errors produced by field construction, operators, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {left} vs {right}")]
    ShapeMismatch { left: String, right: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value at node {node}, component {component}")]
    NonFinite { node: usize, component: usize },

    #[error("non-finite intermediate at iteration {iteration}")]
    NonFiniteIterate { iteration: usize },

    #[error("antipodal points have no unique geodesic")]
    Antipodal,

    #[error("index loop under-resolved: angle increment {increment} at step {step}")]
    UnderResolvedLoop { increment: f64, step: usize },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 1 for bad inputs, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ShapeMismatch { .. }
            | Error::InvalidParameter(_)
            | Error::Io { .. }
            | Error::Parse { .. } => 1,
            Error::NonFinite { .. }
            | Error::NonFiniteIterate { .. }
            | Error::Antipodal
            | Error::UnderResolvedLoop { .. } => 2,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }
}
