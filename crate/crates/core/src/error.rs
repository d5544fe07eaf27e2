use thiserror::Error;

/// Errors surfaced by the numerical routines and the run harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    /// A quadrature or iteration hit its cap before reaching the requested tolerance.
    #[error("{what} did not converge: best estimate {estimate:e}, error bound {error:e}")]
    NonConvergence {
        what: &'static str,
        estimate: f64,
        error: f64,
    },

    /// Internal numerical failure (eigen-solve, non-finite state, ...).
    #[error("numerical failure in {what}: {detail}")]
    Numerical { what: &'static str, detail: String },

    /// Run configuration rejected before any computation started.
    #[error("invalid config: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Config(Vec<FieldError>),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One rejected field, addressed by its dotted path in the config document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "`{}`: {}", self.path, self.message)
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config(vec![FieldError {
            path: path.into(),
            message: message.into(),
        }])
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
