use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("empty result: {0}")]
    EmptyResult(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown user {0:?}")]
    UnknownUser(String),

    #[error("model {0} has not been fitted")]
    Unfitted(String),

    #[error("user {0:?} has a single interaction; cannot split into non-empty train and test")]
    SingleInteractionUser(String),

    #[error("training diverged: loss became {0}")]
    Divergence(f64),

    #[error("mismatched user sets: {0}")]
    MismatchedUsers(String),

    #[error("zero qualifying users")]
    NoQualifyingUsers,

    #[error("missing transcript for replay key {0}")]
    MissingTranscript(String),

    #[error("endpoint error: {0}")]
    Endpoint(String),

    #[error("rate limit exhausted after {0} attempts")]
    RateLimited(usize),

    #[error("serialization: {0}")]
    Serialization(String),

    #[error("[{stage}] {context}: {source}")]
    Stage {
        stage: &'static str,
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn in_stage(self, stage: &'static str, context: impl Into<String>) -> Self {
        Error::Stage {
            stage,
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, unwrapping stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures talking to a chat-completion endpoint.
    pub fn is_endpoint(&self) -> bool {
        matches!(self.root(), Error::Endpoint(_) | Error::RateLimited(_))
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str, context: impl FnOnce() -> String) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str, context: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|e| e.in_stage(stage, context()))
    }
}
