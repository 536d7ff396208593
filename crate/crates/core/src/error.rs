use thiserror::Error;

use crate::graph::ColouredEdge;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed graph file: {0}")]
    Parse(String),

    #[error("duplicate monochrome edge {0}")]
    DuplicateEdge(ColouredEdge),

    #[error("edge {edge} has an endpoint outside 0..{n}")]
    EndpointOutOfRange { edge: ColouredEdge, n: usize },

    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("loops are not permitted here: {0}")]
    LoopNotAllowed(String),

    #[error("unsupported sparsity parameter l = {0} (expected 1, 2 or 3)")]
    BadSparsityParameter(u8),

    #[error("enumeration guard exceeded: {n} vertices (limit {limit})")]
    GuardExceeded { n: usize, limit: usize },

    #[error("illegal move: {0}")]
    IllegalMove(String),

    #[error("graph is not a member of class {0}")]
    NotInClass(String),

    #[error("no reduction found for a member of class {class}: {graph}")]
    ReductionExhausted { class: String, graph: String },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("placement does not match context: {0}")]
    PlacementMismatch(String),

    #[error("invalid context: {0}")]
    InvalidContext(String),

    #[error("row for edge {edge} failed: {source}")]
    Row {
        edge: ColouredEdge,
        #[source]
        source: Box<Error>,
    },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("random sampling failed after {0} attempts")]
    SamplingFailed(usize),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
