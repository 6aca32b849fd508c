//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by graph construction, builders, kernels, propagation,
/// and the application pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("edge ({src}, {dst}) out of range for {num_vertices} vertices")]
    EdgeOutOfRange {
        src: u32,
        dst: u32,
        num_vertices: usize,
    },

    #[error("duplicate edge ({src}, {dst})")]
    DuplicateEdge { src: u32, dst: u32 },

    #[error("self-loop at vertex {0}")]
    SelfLoop(u32),

    #[error("cycle detected through vertex {0}")]
    CycleDetected(u32),

    #[error("vertex counts differ across DAGs: {0} vs {1}")]
    MismatchedVertexCounts(usize, usize),

    #[error("direction {0} has no opposite-direction partner in the set")]
    UnpairedDirection(&'static str),

    #[error("schedule does not match DAG: {0}")]
    ScheduleMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("vertex id {id} out of range for {num_vertices} vertices")]
    VertexOutOfRange { id: u32, num_vertices: usize },

    #[error("channel mismatch: expected {expected}, got {got}")]
    ChannelMismatch { expected: usize, got: usize },

    #[error("point cloud carries no normals")]
    MissingNormals,

    #[error("point cloud carries no colors")]
    MissingColors,

    #[error("degenerate neighborhood around point {0}: covariance rank < 2")]
    DegenerateNeighborhood(u32),

    #[error("coincident centroids not separated after {0} jitter attempts")]
    DegenerateCentroids(u32),

    #[error("loss diverged at step {0}")]
    DivergedLoss(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
