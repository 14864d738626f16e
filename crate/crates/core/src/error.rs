use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid evaluation domain: {0}")]
    InvalidDomain(String),

    #[error("invalid sharing parameters: {0}")]
    InvalidParams(String),

    #[error("interpolation nodes are not distinct")]
    DegenerateNodes,

    #[error("need at least {needed} shares to reconstruct, got {got}")]
    InsufficientShares { needed: usize, got: usize },

    #[error("share sets live on different evaluation domains")]
    DomainMismatch,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("beaver triple {0} was already consumed")]
    TripleReused(u64),

    /// The opened masked value cannot be inverted reliably. Retry with fresh randomness.
    #[error("masked opening is numerically singular ({detail})")]
    SingularMask { detail: String },

    #[error("innovation covariance is singular")]
    SingularInnovation,

    /// The leakage bound diverges (a zero-variance noise term with nonzero signal).
    #[error("leakage bound is unbounded: {0}")]
    InfiniteLeak(String),

    #[error("protocol aborted in round {round}: missing parties {missing:?} ({reason})")]
    ProtocolAbort {
        round: u32,
        missing: Vec<usize>,
        reason: String,
    },

    #[error("configuration hash mismatch with party {peer}")]
    ConfigMismatch { peer: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed frame: {0}")]
    Wire(String),

    #[error("party {party}: {source}")]
    Party { party: usize, source: Box<Error> },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Strips party context and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Party { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn abort(round: u32, missing: Vec<usize>, reason: impl Into<String>) -> Self {
        Error::ProtocolAbort {
            round,
            missing,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
