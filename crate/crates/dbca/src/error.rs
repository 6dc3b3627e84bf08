//! Error type shared across the crate.

use thiserror::Error;

/// All failure modes surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration (fractions, caps, CLI arguments).
    #[error("configuration error: {0}")]
    Config(String),

    /// Invalid values in an otherwise well-formed request (bad probabilities,
    /// empty samples, malformed graphs).
    #[error("domain error: {0}")]
    Domain(String),

    /// Structurally invalid rule application graphs (cycles, bad indices).
    #[error("structural error: {0}")]
    Structure(String),

    /// Ruleset or data text that failed to parse.
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },

    /// A split cannot be satisfied because one side has too few examples.
    #[error("infeasible split: {side} side has {available} examples but {required} are required")]
    Infeasible {
        side: String,
        available: usize,
        required: usize,
    },

    /// Resolution got stuck: no rule applies to the given expression.
    #[error("resolution error: no rule applies to {0}")]
    Resolution(String),

    /// Random generation exhausted its retry or depth budget.
    #[error("generation error: {0}")]
    Generation(String),

    /// Malformed dataset or split files.
    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
