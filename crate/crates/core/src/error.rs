use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("bit sequence of length {len} is not a multiple of {bits_per_symbol} bits per symbol")]
    BitLength { len: usize, bits_per_symbol: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("search space of 2^{bits} candidates exceeds the exhaustive-search limit of 2^{limit}")]
    SearchSpaceTooLarge { bits: usize, limit: usize },

    #[error("channel row {0} has zero norm")]
    ZeroNormRow(usize),

    #[error("channel matrix is rank deficient ({rows}x{cols}, condition {condition:e})")]
    RankDeficient {
        rows: usize,
        cols: usize,
        condition: f64,
    },

    #[error("iteration diverged at step {iteration}: |x| = {norm:e} exceeds {limit:e}")]
    Divergence {
        iteration: usize,
        norm: f64,
        limit: f64,
    },

    #[error("de-spreading needs slot 1 then slot 2, got slots {0} and {1}")]
    SlotOrder(u8, u8),

    #[error("observations carry different reference levels")]
    ReferenceMismatch,

    #[error("subcarrier {0} has zero frequency response")]
    ZeroSubcarrier(usize),

    #[error("incompatible detector/system pairing: {0}")]
    Incompatible(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// Config-class errors map to CLI exit code 1, everything else to 2.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Incompatible(_))
    }
}
