use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty signal")]
    EmptySignal,

    #[error("sample-rate mismatch: expected {expected} Hz, got {actual} Hz")]
    RateMismatch { expected: f64, actual: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("window [{start}, {end}) s exceeds signal duration {duration} s")]
    WindowExceedsSignal { start: f64, end: f64, duration: f64 },

    #[error("band edge {edge_hz} Hz is beyond 0.45 x sample rate ({sample_rate} Hz)")]
    BandEdgeBeyondNyquist { edge_hz: f64, sample_rate: f64 },

    #[error("simulation unstable: |a| = {amplitude:e} exceeds {limit:e} at t = {time:e} s (detector {detector}, mode {mode})")]
    Unstable { amplitude: f64, limit: f64, time: f64, detector: usize, mode: usize },

    #[error("singular normal equations ({0}); use lambda > 0")]
    Singular(String),

    #[error("empty partition: {0}")]
    EmptyPartition(String),

    #[error("degenerate target: {0}")]
    DegenerateTarget(String),

    #[error("corpus: {0}")]
    Corpus(String),

    #[error("malformed container: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("wav: {0}")]
    Wav(#[from] hound::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
