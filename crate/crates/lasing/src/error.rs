use lasing_core::Error as ModelError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("invalid sweep specification: {0}")]
    InvalidSpec(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("could not encode metadata: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Self::Io { context: context.into(), source }
    }

    /// Process exit status: 2 for bad input, 3 for resource or convergence
    /// failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::InvalidSpec(_) => 2,
            Error::Model(e) => match e {
                ModelError::InvalidParameter(_)
                | ModelError::EmptyLadder(_)
                | ModelError::InvalidOrder { .. }
                | ModelError::InvalidDistribution(_)
                | ModelError::EmptyCavity => 2,
                _ => 3,
            },
            Error::Io { .. } | Error::Json(_) => 3,
        }
    }
}
