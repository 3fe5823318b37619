//! Harness-level errors: file format, configuration, and per-cell failures.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("bad magic bytes: expected VAT1")]
    BadMagic,

    #[error("unsupported format version {0} (expected 1)")]
    BadVersion(u32),

    #[error("truncated payload: needed {needed} more bytes for {what}")]
    Truncated { needed: usize, what: String },

    #[error("dimension product overflow in tensor {name}: dims {dims:?}")]
    DimOverflow { name: String, dims: Vec<u64> },

    #[error("tensor name is not valid UTF-8")]
    BadName,

    #[error("tensor name {0:?} is not ASCII")]
    NonAsciiName(String),

    #[error("duplicate tensor name {0:?}")]
    DuplicateName(String),

    #[error("{0} bytes of trailing garbage after the last tensor")]
    TrailingBytes(usize),

    #[error("tensor {name} has {got} values but dims {dims:?} require {want}")]
    ValueCountMismatch {
        name: String,
        dims: Vec<u64>,
        want: usize,
        got: usize,
    },

    #[error("missing tensor {0:?} (need Q, K, V)")]
    MissingTensor(&'static str),

    #[error("tensor {name} must be a 2-d matrix, got {ndim} dims")]
    NotAMatrix { name: String, ndim: usize },

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("config file {path}: {source}")]
    ConfigIo {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("config parse error: {0}")]
    ConfigParse(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("approximator {approximator} at r={r}: {source}")]
    Cell {
        approximator: String,
        r: usize,
        source: vat_core::Error,
    },

    #[error(transparent)]
    Core(#[from] vat_core::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;
