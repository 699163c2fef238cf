use thiserror::Error;

use crate::lp::LpStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("path parameter {s} outside domain [{start}, {end}]")]
    OutOfDomain { s: f64, start: f64, end: f64 },

    #[error("derivative order {0} not supported (expected 0, 1 or 2)")]
    InvalidOrder(usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid bounds: {0}")]
    InvalidBounds(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("constraint evaluation failed at s = {s}: {reason}")]
    Evaluation { s: f64, reason: String },

    #[error("stage {stage}: linear program ended with status {status:?}")]
    Lp { stage: usize, status: LpStatus },

    #[error("forward pass infeasible at stage {stage} although the backward pass succeeded")]
    ForwardPass { stage: usize },

    #[error("segment {segment} has zero velocity at both ends; traversal time is infinite")]
    InfiniteDuration { segment: usize },

    #[error("stage {stage}: no slack vector satisfies the block constraints at the given state")]
    SlackInfeasible { stage: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),
}
