//! Error taxonomy shared across the crate.
//!
//! The CLI maps these onto process exit codes; see `main.rs`. Library callers
//! can match on variants to distinguish recoverable conditions (no feasible
//! method, insufficient data) from bugs (`Internal`).

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value violates a documented domain invariant.
    #[error("validation failed: {msg}")]
    Validation { msg: String },

    /// Insert of a (task, method, hardware) key that is already present.
    #[error("duplicate record for ({task_id}, {method_id}, {hw_id})")]
    DuplicateRecord {
        task_id: String,
        method_id: String,
        hw_id: String,
    },

    /// Feature vector or model input does not match the expected schema.
    #[error("schema mismatch: expected {expected}, found {found}")]
    SchemaMismatch { expected: String, found: String },

    /// A measurement references a task/method/hardware id with no descriptor.
    #[error("missing {kind} descriptor for id {id:?}")]
    MissingDescriptor { kind: &'static str, id: String },

    /// A training set was requested from an empty tensor.
    #[error("history is empty")]
    EmptyHistory,

    /// Fewer training rows than the model kind requires.
    #[error("insufficient data: need at least {needed} rows, have {available}")]
    InsufficientData { needed: usize, available: usize },

    /// Every candidate's estimated cost exceeds the budget.
    #[error(
        "no feasible method: minimum estimated cost {min_estimated_cost} exceeds budget {budget}"
    )]
    NoFeasibleMethod {
        min_estimated_cost: f64,
        budget: f64,
    },

    /// A persisted file declares a format version this build does not read.
    #[error("unsupported format version {found:?} (expected {expected:?})")]
    Version { found: String, expected: String },

    /// A persisted file is structurally corrupt. `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A configuration document is malformed or self-contradictory.
    #[error("config error: {msg}")]
    Config { msg: String },

    /// An internal invariant was broken; always a bug.
    #[error("internal error: {msg}")]
    Internal { msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation { msg: msg.into() }
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal { msg: msg.into() }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config { msg: msg.into() }
    }
}
