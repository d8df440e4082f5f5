//! Error type shared by every stage of the library.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid interval [{lo}, {hi}]: lo must be finite and below hi")]
    BadInterval { lo: f64, hi: f64 },

    #[error("BadGridSize: grid needs at least 2 points, got {0}")]
    BadGridSize(usize),

    #[error("invalid series: {0}")]
    BadSeries(String),

    #[error("DuplicateTimestamp: subject {subject:?}, variable {variable:?} has time {time} twice")]
    DuplicateTimestamp {
        subject: String,
        variable: String,
        time: f64,
    },

    #[error("DomainViolation: subject {subject:?}, variable {variable:?} has time {time} outside [{lo}, {hi}]")]
    DomainViolation {
        subject: String,
        variable: String,
        time: f64,
        lo: f64,
        hi: f64,
    },

    #[error("MissingChannel: subject {subject:?} has no observations of {variable:?}")]
    MissingChannel { subject: String, variable: String },

    #[error("unknown variable {0:?} (not declared in the schema)")]
    UnknownVariable(String),

    #[error("variable {variable:?} appears with role {found}, declared as {declared}")]
    RoleMismatch {
        variable: String,
        declared: &'static str,
        found: &'static str,
    },

    #[error("InsufficientCoverage: channel {variable:?} has {distinct} distinct pooled times spanning {span_fraction:.3} of its domain (need >= {min_distinct} and >= {min_span})")]
    InsufficientCoverage {
        variable: String,
        distinct: usize,
        span_fraction: f64,
        min_distinct: usize,
        min_span: f64,
    },

    #[error("TooFewSubjects: need at least {needed}, got {got}")]
    TooFewSubjects { needed: usize, got: usize },

    #[error("bandwidth {bandwidth} must be positive and below the interval length {length}")]
    BadBandwidth { bandwidth: f64, length: f64 },

    #[error("DegenerateWindow: kernel window at {at:?} has too little weight or spread (bandwidth {bandwidth} too small)")]
    DegenerateWindow { at: Vec<f64>, bandwidth: f64 },

    #[error("NonFiniteFit: local fit produced a non-finite value")]
    NonFiniteFit,

    #[error("NoPairs: no subject has two or more observations")]
    NoPairs,

    #[error("AllCandidatesDegenerate: every bandwidth candidate produced a degenerate fit")]
    AllCandidatesDegenerate,

    #[error("EigenFailure: symmetric eigendecomposition did not converge")]
    EigenFailure,

    #[error("EmptySpectrum: no eigenvalue above the floor")]
    EmptySpectrum,

    #[error("TooSparse: series has {points} observation(s), need at least 2")]
    TooSparse { points: usize },

    #[error("BlockMismatch: {0}")]
    BlockMismatch(String),

    #[error("ChannelCountMismatch: expected {expected} channels, got {got}")]
    ChannelCountMismatch { expected: usize, got: usize },

    #[error("LengthMismatch: expected length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("ShapeMismatch: {0}")]
    ShapeMismatch(String),

    #[error("DivergenceDetected: training loss became non-finite at epoch {epoch}")]
    DivergenceDetected { epoch: usize },

    #[error("ChannelMismatch: missing channels {missing:?}, unexpected channels {extra:?}")]
    ChannelMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },

    #[error("NoOverlap: predictions and truth share no subjects")]
    NoOverlap,

    #[error("BadScenario: {0}")]
    BadScenario(String),

    #[error("IndexOutOfRange: index {index} with length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid configuration: {0}")]
    BadConfig(String),

    #[error("orthonormality check failed: max deviation {deviation:e}")]
    NotOrthonormal { deviation: f64 },

    #[error("{stage}: {source}")]
    Stage { stage: String, source: Box<Error> },
}

impl Error {
    /// The innermost error, with stage labels stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, label: impl FnOnce() -> String) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, label: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage: label(),
            source: Box::new(e),
        })
    }
}
