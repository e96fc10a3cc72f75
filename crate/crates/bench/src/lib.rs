//! Shared inputs for the criterion benches.

use edgehinf_core::{decompose, fixtures, NetworkSpec, SpanningTreeDecomposition, TreeSelector};

/// `net10` with its reference tree.
pub fn net10_case() -> (NetworkSpec, SpanningTreeDecomposition) {
    let net = fixtures::net10();
    let dec = decompose(&net, &TreeSelector::Default).expect("fixture tree is valid");
    (net, dec)
}

pub fn triangle_case() -> (NetworkSpec, SpanningTreeDecomposition) {
    let net = fixtures::triangle();
    let dec = decompose(&net, &TreeSelector::Explicit(vec![1, 2])).expect("edges 1, 2 span the triangle");
    (net, dec)
}
