use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge ({0}, {1}) references a node that is not in the graph")]
    DanglingEdge(NodeId, NodeId),
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("node {0} is not in the graph")]
    UnknownNode(NodeId),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is empty")]
    EmptyMatrix,
    #[error("non-finite payoff at ({0}, {1})")]
    NonFinitePayoff(usize, usize),
    #[error("no feasible defender path: {0}")]
    NoFeasiblePath(String),
    #[error("unsupported game form: {0}")]
    Unsupported(String),
    #[error("size cap exceeded: {0}")]
    SizeCap(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },
    #[error("optimization backend: {0}")]
    Backend(#[from] sgkit_lp::LpError),
    #[error("optimization backend reported {0} for a problem that must be solvable")]
    SolverFailure(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
