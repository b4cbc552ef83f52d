use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty point set")]
    EmptyPointSet,

    #[error("size schedule infeasible at level m = {level}: no pair of clusters fits within {max_size} BSs")]
    ScheduleInfeasible { level: usize, max_size: usize },

    #[error("cluster level m = {m} out of range 1..={num_bs}")]
    LevelOutOfRange { m: usize, num_bs: usize },

    #[error("cannot distribute {num_bands} bands: {reason}")]
    BandAllocation { num_bands: usize, reason: String },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("failed to parse config: {0}")]
    ConfigParse(String),

    #[error("malformed CSV: {0}")]
    CsvParse(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("realization {realization}, m = {m}, gamma_d = {gamma_d}: {source}")]
    Pipeline {
        realization: u64,
        m: usize,
        gamma_d: f64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
