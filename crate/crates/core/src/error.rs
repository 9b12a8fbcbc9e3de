use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Wav { path: PathBuf, message: String },
    #[error("unsupported channel count {0}: only mono input is accepted")]
    UnsupportedChannels(u16),
    #[error("unsupported bit depth {0}: only 8- and 16-bit PCM is accepted")]
    UnsupportedBitDepth(u16),
    #[error("unsupported sample encoding: only integer PCM is accepted")]
    NonPcm,
    #[error("amplitude {value} at index {index} is outside [-1, 1]")]
    AmplitudeOutOfRange { index: usize, value: f64 },
    #[error("manifest {path}, line {line}: {message}")]
    Manifest { path: PathBuf, line: usize, message: String },
    #[error("duplicate path in manifest: {0}")]
    DuplicatePath(String),
    #[error("conflicting labels: {0} has both normal and murmur records")]
    ConflictingLabels(String),
    #[error("patient {0} has unlabeled records but no labeled record")]
    UnlabeledPatient(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("signal too short: {0}")]
    SignalTooShort(String),
    #[error("zero dynamic range: cannot normalize a constant signal")]
    ZeroDynamicRange,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("training diverged: {0}")]
    NonFiniteLoss(String),
    #[error("split error: {0}")]
    Split(String),
    #[error("train/test leakage: {0}")]
    Leakage(String),
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error("{id}: {source}")]
    Sample {
        id: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn in_sample(self, id: impl Into<String>) -> Self {
        Error::Sample { id: id.into(), source: Box::new(self) }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
