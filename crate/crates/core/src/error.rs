use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("instance too large: {size} exceeds the limit of {limit}")]
    InstanceTooLarge { size: usize, limit: usize },

    #[error("block count {blocks} exceeds the limit of {limit}")]
    BlockCountExceeded { blocks: usize, limit: usize },

    #[error("index {index} out of range for {len} vertices")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("sample value {value} exceeds the cap {cap}; is p_n mis-scaled?")]
    SampleCapExceeded { value: u64, cap: u64 },

    #[error("unknown example id `{0}`")]
    UnknownExample(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors caused by hitting a computational limit rather than bad input.
    pub fn is_runtime_limit(&self) -> bool {
        matches!(
            self,
            Error::InstanceTooLarge { .. }
                | Error::BlockCountExceeded { .. }
                | Error::SampleCapExceeded { .. }
        )
    }

    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::InstanceTooLarge { .. } => "instance-too-large",
            Error::BlockCountExceeded { .. } => "block-count-exceeded",
            Error::IndexOutOfRange { .. } => "index-out-of-range",
            Error::SampleCapExceeded { .. } => "sample-cap-exceeded",
            Error::UnknownExample(_) => "unknown-example",
        }
    }
}
