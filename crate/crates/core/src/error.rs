use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the crate.
///
/// The variants follow the failure classes the CLI maps onto exit codes:
/// domain/config problems, numerical failures, ingestion problems and plain I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("ingestion error in `{field}`: {reason}")]
    Ingestion { field: String, reason: String },

    #[error("quadrature did not converge on face {face} (boxes {from} -> {to}) after {depth} refinements")]
    Quadrature {
        face: usize,
        from: usize,
        to: usize,
        depth: usize,
    },

    #[error("eigensolver did not converge: {converged}/{wanted} pairs, worst residual {worst_residual:.3e}")]
    Eigen {
        wanted: usize,
        converged: usize,
        worst_residual: f64,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn ingestion(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Ingestion {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Innermost error, looking through stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code: 2 config/domain, 3 numerical, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Domain(_) | Error::Config(_) => 2,
            Error::Quadrature { .. } | Error::Eigen { .. } | Error::Numerical(_) => 3,
            Error::Ingestion { .. } | Error::Io { .. } | Error::Json { .. } => 4,
            Error::Stage { .. } => unreachable!(),
        }
    }
}
