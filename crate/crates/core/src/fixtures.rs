//! Bundled reference networks.
//!
//! `triangle` is the three-node cycle with `eps = (0.1, 0.4, 0.8)` and
//! `w = (4, 8, 12)`. `net10` is the ten-node, fifteen-edge network whose
//! first nine edges form the reference spanning tree; it ships with unit
//! weights and time scales.

use crate::design::DesignProblem;
use rand::Rng;

use crate::graph::{load_network, Edge, NetworkSpec, Node};

pub const TRIANGLE_JSON: &str = include_str!("../fixtures/triangle.json");
pub const NET10_JSON: &str = include_str!("../fixtures/net10.json");
pub const NET10_DESIGN_JSON: &str = include_str!("../fixtures/net10_design.json");

/// Fast agents of `net10` (time scales in `[0.1, 0.5]`); the rest are slow
/// (`[1, 5]`).
pub const NET10_FAST_NODES: [usize; 5] = [1, 2, 3, 4, 5];

pub fn triangle() -> NetworkSpec {
    load_network(TRIANGLE_JSON).expect("bundled triangle fixture is valid")
}

pub fn net10() -> NetworkSpec {
    load_network(NET10_JSON).expect("bundled net10 fixture is valid")
}

/// Design problem for `net10`: `w in [10, 130]`, fast/slow time-scale
/// boxes, `(alpha, beta, gamma) = (7.7e-3, 2.15e-2, 10)`.
pub fn net10_design() -> DesignProblem {
    DesignProblem::from_json(NET10_DESIGN_JSON).expect("bundled design fixture is valid")
}

/// Random connected network: node `k` attaches to a uniformly chosen
/// earlier node, then every remaining pair is joined with probability
/// `extra`. Time scales and weights are drawn log-uniformly from the given
/// ranges; `sigma_w = sigma_v = 1`.
pub fn random_network<R: Rng>(
    rng: &mut R,
    n: usize,
    extra: f64,
    eps_range: (f64, f64),
    w_range: (f64, f64),
) -> NetworkSpec {
    let log_uniform = |rng: &mut R, (lo, hi): (f64, f64)| (rng.gen_range(lo.ln()..=hi.ln())).exp();
    let nodes: Vec<Node> = (1..=n).map(|id| Node { id, epsilon: log_uniform(rng, eps_range) }).collect();
    let mut pairs = Vec::new();
    for k in 2..=n {
        pairs.push((rng.gen_range(1..k), k));
    }
    for v in 2..=n {
        for u in 1..v {
            if !pairs.contains(&(u, v)) && rng.gen_bool(extra) {
                pairs.push((u, v));
            }
        }
    }
    pairs.sort_unstable();
    let edges = pairs
        .into_iter()
        .enumerate()
        .map(|(l, (u, v))| Edge { id: l + 1, u, v, weight: log_uniform(rng, w_range) })
        .collect();
    NetworkSpec::new(nodes, edges, 1.0, 1.0, None).expect("generated network is connected")
}
