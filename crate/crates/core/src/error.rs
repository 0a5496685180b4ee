use thiserror::Error;

/// Errors raised by network construction, belief propagation, inference and IO.
#[derive(Debug, Error)]
pub enum HgfError {
    #[error("invalid attribute: {0}")]
    InvalidAttribute(String),

    #[error("node index {index} out of range (network has {len} nodes)")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("edge {child} -> {parent} would introduce a cycle")]
    Cycle { child: usize, parent: usize },

    #[error("cycle detected in network edges")]
    CycleDetected,

    #[error("duplicate {coupling} edge {child} -> {parent}")]
    DuplicateEdge {
        child: usize,
        parent: usize,
        coupling: &'static str,
    },

    #[error("invalid edge: {0}")]
    InvalidEdge(String),

    #[error("unknown update function `{0}`")]
    UnknownFunction(String),

    #[error("sequencing error at node {node}: {reason}")]
    Sequencing { node: usize, reason: String },

    #[error("numerical failure at node {node} during `{step}`: {reason}")]
    NumericalFailure {
        node: usize,
        step: String,
        reason: String,
    },

    #[error("row {row}: {source}")]
    AtRow {
        row: usize,
        #[source]
        source: Box<HgfError>,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid observation: {0}")]
    InvalidObservation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("sampler failure: {0}")]
    SamplerFailure(String),

    #[error("diagnostics error: {0}")]
    Diagnostics(String),

    #[error("optimization failure: {0}")]
    OptimizationFailure(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("ingestion error at row {row}: {message}")]
    Ingestion { row: usize, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl HgfError {
    pub(crate) fn numerical(node: usize, step: &str, reason: impl Into<String>) -> Self {
        HgfError::NumericalFailure {
            node,
            step: step.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn at_row(self, row: usize) -> Self {
        HgfError::AtRow {
            row,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, HgfError>;
