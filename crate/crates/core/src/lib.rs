//! H∞ analysis and design of edge-consensus networks with heterogeneous
//! time scales and edge weights.
//!
//! ```no_run
//! use edgehinf_core::{analysis, decompose, fixtures, TreeSelector};
//!
//! let net = fixtures::triangle();
//! let dec = decompose(&net, &TreeSelector::Explicit(vec![1, 2])).unwrap();
//! let norm = analysis::hinf_exact_scaled(&net, &dec).unwrap().norm;
//! println!("{norm:.4}");
//! ```

use openblas_src as _;

pub mod analysis;
pub mod design;
pub mod dynamics;
pub mod error;
pub mod fixtures;
pub mod format;
pub mod graph;
pub mod linalg;
pub mod sim;

pub use analysis::{analyze, HinfReport};
pub use design::{DesignProblem, DesignSolution};
pub use dynamics::{CovarianceModel, EdgeConsensusRealization};
pub use error::{CoreError, Result};
pub use graph::{
    decompose, load_network, Edge, NetworkDocument, NetworkSpec, Node, SpanningTreeDecomposition,
    TreeSelector,
};
pub use sim::{DisturbanceSpec, FormationSpec, SimConfig, TrajectoryRecord};
