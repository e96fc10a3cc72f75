use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("failed to parse document: {0}")]
    Parse(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("graph is disconnected: node {0} is unreachable from node 1")]
    Disconnected(usize),

    #[error("invalid spanning tree: {0}")]
    InvalidTree(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("numerical consistency failure: {0}")]
    Numerical(String),

    #[error("operation requires a spanning-tree graph (|E| = n - 1), got n = {nodes}, |E| = {edges}")]
    NotATree { nodes: usize, edges: usize },

    #[error("edge weights are not all equal to rho = {0}")]
    UnequalWeights(f64),

    #[error("invalid design problem: {0}")]
    InvalidDesign(String),

    #[error("design problem infeasible: {0}")]
    Infeasible(String),

    #[error("solver failure ({backend}): {status}")]
    Solver { backend: String, status: String },

    #[error("unknown solver backend `{0}`")]
    UnknownBackend(String),

    #[error("invalid simulation setup: {0}")]
    InvalidSimulation(String),

    #[error("step size {step} too large for stiffness {rate:.6}; need step <= {required:.6e}")]
    StepTooLarge { step: f64, rate: f64, required: f64 },

    #[error("simulation diverged at t = {0}: state magnitude exceeded 1e6")]
    Diverged(f64),

    #[error("empty frequency grid")]
    EmptyGrid,

    #[error("empty integration window [{0}, {1}]")]
    EmptyWindow(f64, f64),
}
