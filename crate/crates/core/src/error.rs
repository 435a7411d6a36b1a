use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("recording has {samples} samples, fewer than one window of {window}")]
    RecordingTooShort { samples: usize, window: usize },

    #[error("channel index {index} out of range for {channels} channels")]
    ChannelOutOfRange { index: usize, channels: usize },

    #[error("duplicate channel index {0}")]
    DuplicateChannel(usize),

    #[error("class {class} has {count} windows, fewer than {folds} folds")]
    ClassTooSmall { class: usize, count: usize, folds: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("signal of length {len} is too short for {levels} decomposition levels")]
    SignalTooShort { len: usize, levels: usize },

    #[error("empty sequence")]
    EmptySequence,

    #[error("signal has zero power")]
    ZeroPower,

    #[error("requested SNR {requested} dB is outside the achievable range ({min} dB, {max} dB)")]
    UnreachableSnr { requested: f64, min: f64, max: f64 },

    #[error("infeasible one-class problem: nu * n = {0} < 1")]
    InfeasibleNu(f64),

    #[error("calibration needs both label values")]
    SingleClassLabels,

    #[error("no valid codebook after {0} attempts")]
    NoValidCodebook(usize),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed row {row}: {message}")]
    MalformedRow { row: usize, message: String },

    #[error("fold {fold}, repeat {repeat}: {source}")]
    Split {
        fold: usize,
        repeat: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
