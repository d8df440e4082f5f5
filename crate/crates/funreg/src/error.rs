//! Errors of the file and command layer, and their process exit codes.

use std::path::PathBuf;

use funreg_core::Error as CoreError;

pub type Result<T> = std::result::Result<T, Error>;

/// Input or configuration problem: bad files, bad flags, invalid data.
pub const EXIT_INPUT: i32 = 2;
/// Failure while running the pipeline or loading a model.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: expected header `{expected}`, found `{found}`", path.display())]
    BadHeader {
        path: PathBuf,
        expected: &'static str,
        found: String,
    },

    #[error("MalformedRow: {}, line {line}: {message}", path.display())]
    MalformedRow {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{}: invalid JSON at line {line}, column {column}: {message}", path.display())]
    Json {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("VersionMismatch: artifact format {found:?}, this build reads {expected:?}")]
    VersionMismatch { found: String, expected: &'static str },

    #[error("CorruptArtifact: {}: {reason}", path.display())]
    CorruptArtifact { path: PathBuf, reason: String },

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, e: &serde_json::Error) -> Error {
        Error::Json {
            path: path.into(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }

    /// 2 for problems with what the user handed in, 3 for failures while
    /// fitting, applying or loading a model.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::BadHeader { .. } | Error::MalformedRow { .. } | Error::Json { .. } => EXIT_INPUT,
            Error::Config(_) => EXIT_INPUT,
            Error::VersionMismatch { .. } | Error::CorruptArtifact { .. } => EXIT_RUNTIME,
            Error::Core(e) => core_exit_code(e),
        }
    }
}

fn core_exit_code(e: &CoreError) -> i32 {
    use CoreError::*;
    match e {
        Stage { .. } => EXIT_RUNTIME,
        BadInterval { .. }
        | BadGridSize(_)
        | BadSeries(_)
        | DuplicateTimestamp { .. }
        | DomainViolation { .. }
        | MissingChannel { .. }
        | UnknownVariable(_)
        | RoleMismatch { .. }
        | InsufficientCoverage { .. }
        | TooFewSubjects { .. }
        | BadBandwidth { .. }
        | BadScenario(_)
        | BadConfig(_)
        | IndexOutOfRange { .. }
        | NoOverlap => EXIT_INPUT,
        _ => EXIT_RUNTIME,
    }
}
