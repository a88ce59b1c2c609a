use thiserror::Error;

pub type Result<T, E = ModemError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ModemError {
    #[error("payload of {len} bytes exceeds the {max}-byte frame limit")]
    PayloadTooLong { len: usize, max: usize },

    #[error("invalid modem configuration: {0}")]
    ConfigInvalid(String),

    #[error("buffer too short: need {needed} samples, have {available}")]
    BufferTooShort { needed: usize, available: usize },

    #[error("soft symbol has zero or non-finite magnitude")]
    ZeroMagnitude,

    #[error("no sync: preamble not found")]
    NoSync,

    #[error("header block failed CRC verification")]
    HeaderError,

    #[error("frame truncated: header announces {expected} symbols, only {available} available")]
    TruncatedFrame { expected: usize, available: usize },

    #[error("invalid channel profile: {0}")]
    InvalidProfile(String),

    #[error("length mismatch: {left} sent symbols vs {right} received")]
    LengthMismatch { left: usize, right: usize },

    #[error("unknown sweep axis `{0}`")]
    UnknownAxis(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported WAV format: {0}")]
    UnsupportedWav(String),

    #[error(transparent)]
    Wav(#[from] hound::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
