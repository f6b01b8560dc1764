use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("code length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("{info} payload bits plus {crc} CRC bits exceed code length {len}")]
    TooManyBits { info: usize, crc: usize, len: usize },
    #[error("reliability order is not a permutation of 0..{0}")]
    BadReliabilityOrder(usize),
    #[error("expected length {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid CRC polynomial {poly:#x} for a {len}-bit CRC")]
    BadCrcPoly { poly: u64, len: usize },
    #[error("bit value {0} is not 0 or 1")]
    NotABit(u8),
    #[error("iteration {got} out of order (expected {expected}, max {max})")]
    IterationOutOfRange { got: usize, expected: usize, max: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("weight set does not match decoder: {0}")]
    WeightMismatch(String),
    #[error("training diverged: non-finite loss at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),
    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
