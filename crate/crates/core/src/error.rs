use thiserror::Error;

use crate::lattice::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {}", format_violations(.0))]
    Lattice(Vec<Violation>),

    #[error("no valid three-layer matching assignment exists for the requested bonds")]
    NoMatchingAssignment,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{what} needs {qubits} qubits but the configured limit is {limit}")]
    ResourceLimit {
        what: &'static str,
        qubits: usize,
        limit: usize,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ResourceLimit { .. } => 3,
            Error::Numeric(_) => 4,
            Error::Io(_) => 1,
            _ => 2,
        }
    }

    /// Short machine-readable tag for error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Lattice(_) => "lattice",
            Error::NoMatchingAssignment => "lattice",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Config(_) => "config",
            Error::ResourceLimit { .. } => "resource_limit",
            Error::Numeric(_) => "numeric",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
