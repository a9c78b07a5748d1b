use std::path::PathBuf;

use thiserror::Error;

use crate::matrix::MatrixError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Matrix(#[from] MatrixError),

    #[error("invalid subsystem {index}: {reason}")]
    InvalidSpec { index: usize, reason: String },

    #[error("invalid config key `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },

    #[error("{what}: expected length {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("subsystem index {index} out of range (N = {count})")]
    IndexOutOfRange { index: usize, count: usize },

    #[error(
        "weight table for subsystem {index} covers ages < {covered}, age {requested} requested"
    )]
    TableNotCovered {
        index: usize,
        covered: usize,
        requested: usize,
    },

    #[error("subsystem {index} updated twice in slot {slot}")]
    DoubleUpdate { index: usize, slot: u64 },

    #[error("subsystem {index}: slot {slot} follows slot {last}")]
    SlotOutOfOrder { index: usize, slot: u64, last: u64 },

    #[error("state of subsystem {index} diverged at slot {slot} (|x| = {magnitude:e})")]
    Diverged {
        index: usize,
        slot: u64,
        magnitude: f64,
    },

    #[error("incomplete trace: {0}")]
    IncompleteTrace(String),

    #[error("no results to write")]
    EmptyResults,

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
