use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate signal: zero power")]
    DegenerateSignal,

    #[error("positive-normal sampler gave up after {rejections} rejections (mean {mean}, sigma {sigma})")]
    RejectionLimit {
        mean: f64,
        sigma: f64,
        rejections: u64,
    },

    #[error("segment too short: {segment_fs} fs per segment, need at least {required_fs} fs")]
    SegmentTooShort { segment_fs: f64, required_fs: f64 },

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

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

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
