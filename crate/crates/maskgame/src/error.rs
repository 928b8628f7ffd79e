//! Error types shared across the crate.

use thiserror::Error;

/// Errors from parsing or validating models.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("probability branches of command `[{label}]` at line {line} sum to {sum}, expected 1")]
    BranchSum { label: String, line: usize, sum: String },

    #[error("branch probability {value} of command `[{label}]` at line {line} is outside [0, 1]")]
    BranchRange { label: String, line: usize, value: String },

    #[error("update assigns {value} to `{var}`, outside its declared range [{lo}..{hi}]")]
    OutOfRange { var: String, value: i64, lo: i64, hi: i64 },

    #[error("reachable state {state} has no outgoing transition")]
    Deadlock { state: String },

    #[error("unknown identifier `{name}` at line {line}")]
    UnknownIdent { name: String, line: usize },

    #[error("duplicate declaration of `{name}` at line {line}")]
    DuplicateDecl { name: String, line: usize },

    #[error("init value {value} of `{var}` is outside [{lo}..{hi}]")]
    InitOutOfRange { var: String, value: i64, lo: i64, hi: i64 },

    #[error("type error at line {line}: {msg}")]
    TypeError { line: usize, msg: String },

    #[error("nominal model declares fault labels {labels:?}")]
    FaultInNominal { labels: Vec<String> },

    #[error("shared alphabets differ: nominal {nominal:?}, implementation (non-fault) {implementation:?}")]
    AlphabetMismatch { nominal: Vec<String>, implementation: Vec<String> },

    #[error("model has no actions")]
    EmptyModel,
}

/// Errors from polytope operations.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolytopeError {
    #[error("coupling polytope has {cells} cells, exceeding the enumeration cap of {cap}")]
    CapExceeded { cells: usize, cap: usize },

    #[error("system is infeasible")]
    Infeasible,
}

/// Errors from quantitative analysis.
#[derive(Debug, Error, PartialEq)]
pub enum ValueError {
    #[error("game is not almost-surely failing under fairness; the value is not well-defined")]
    NotFailing,

    #[error(
        "default bound needs the vertex snippet, which exceeds the enumeration cap; pass an explicit bound"
    )]
    BoundNeedsSnippet(#[from] PolytopeError),

    #[error("value iteration did not converge within {iters} iterations (residual {residual})")]
    NotConverged { iters: u64, residual: f64 },
}

/// Errors from reading serialized game graphs.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid JSON: {0}")]
    Json(String),

    #[error("malformed graph: {0}")]
    Schema(String),
}

/// Errors from the brute-force oracle.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("strategy space of size {size} exceeds the cap of {cap}")]
    StrategyCapExceeded { size: u128, cap: u128 },

    #[error("oracle requires an almost-surely failing snippet")]
    NotFailing,

    #[error("determinacy assertion failure: {0}")]
    Determinacy(String),
}
