use thiserror::Error;

/// Errors raised while building schedules, lattices, or reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("illegal override value {value} for block {k} (allowed: 0, ±{magnitude})")]
    IllegalOverride {
        k: usize,
        value: f64,
        magnitude: f64,
    },

    #[error("block index {k} outside 1..={k_max}")]
    BlockOutOfRange { k: usize, k_max: usize },

    #[error("time {n} outside block {k} range ({lo}, {hi}]")]
    OutsideBlock {
        n: String,
        k: usize,
        lo: String,
        hi: String,
    },

    #[error("window overflow: {0}")]
    WindowOverflow(String),

    #[error("schedule too large for the lattice: {0}")]
    LatticeRange(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
