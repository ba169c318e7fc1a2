use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input domain error: {0}")]
    InputDomain(String),

    #[error("index {index} out of range for {len} levels")]
    Index { index: usize, len: usize },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("framing error: stream of {len} samples is not a whole number of {symbol}-sample symbols")]
    Framing { len: usize, symbol: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged on device {device} in round {round}")]
    Divergence { device: usize, round: usize },

    #[error("{path}: bad IDX magic 0x{found:08x}, expected 0x{expected:08x}")]
    Format {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("{path}: truncated IDX file, need {needed} bytes but found {found}")]
    Length {
        path: PathBuf,
        needed: usize,
        found: usize,
    },

    #[error("image file holds {images} items but label file holds {labels}")]
    Consistency { images: usize, labels: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
