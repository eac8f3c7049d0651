use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the simulator.
#[derive(Debug, Error)]
pub enum SimError {
    /// A configuration value violates a structural requirement (e.g. `N < L`).
    #[error("configuration error: {0}")]
    Config(String),
    /// An argument to an operation is out of its admissible range.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// The channel does not admit the requested construction (rank loss, all-zero).
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),
    /// A numerical routine failed (e.g. singular matrix).
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, SimError>;
