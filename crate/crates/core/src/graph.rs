//! Weighted, time-scaled undirected networks and their incidence machinery.
//!
//! Edges are oriented from the lower node id (initial, `+1`) to the higher
//! node id (terminal, `-1`). Node and edge ids are 1-based in every public
//! structure; matrix indices are 0-based.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: usize,
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// On-disk network description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub sigma_w: f64,
    pub sigma_v: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<Vec<usize>>,
}

/// A connected, undirected graph with node time scales, edge weights and
/// noise intensities. Construction validates every invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    sigma_w: f64,
    sigma_v: f64,
    tree: Option<Vec<usize>>,
}

impl NetworkSpec {
    /// Builds a network from raw parts. Node ids are renumbered `1..=n` in
    /// ascending order and edge ids `1..=|E|` likewise; endpoints are
    /// stored with `u < v`.
    pub fn new(
        nodes: Vec<Node>,
        edges: Vec<Edge>,
        sigma_w: f64,
        sigma_v: f64,
        tree: Option<Vec<usize>>,
    ) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(CoreError::InvalidNetwork(
                "a network needs at least two nodes".into(),
            ));
        }
        if !(sigma_w >= 0.0 && sigma_w.is_finite()) || !(sigma_v >= 0.0 && sigma_v.is_finite()) {
            return Err(CoreError::InvalidNetwork(format!(
                "noise intensities must be finite and nonnegative (sigma_w = {sigma_w}, sigma_v = {sigma_v})"
            )));
        }

        let mut node_map = BTreeMap::new();
        for node in &nodes {
            if !(node.epsilon > 0.0 && node.epsilon.is_finite()) {
                return Err(CoreError::InvalidNetwork(format!(
                    "node {} has nonpositive time scale {}",
                    node.id, node.epsilon
                )));
            }
            if node_map.insert(node.id, node.epsilon).is_some() {
                return Err(CoreError::InvalidNetwork(format!("duplicate node id {}", node.id)));
            }
        }
        let renumber: BTreeMap<usize, usize> =
            node_map.keys().enumerate().map(|(k, &id)| (id, k + 1)).collect();
        let norm_nodes: Vec<Node> = node_map
            .iter()
            .enumerate()
            .map(|(k, (_, &epsilon))| Node { id: k + 1, epsilon })
            .collect();

        let mut sorted_edges = edges;
        sorted_edges.sort_by_key(|e| e.id);
        let mut edge_renumber = BTreeMap::new();
        let mut seen_pairs = BTreeSet::new();
        let mut norm_edges = Vec::with_capacity(sorted_edges.len());
        for (k, e) in sorted_edges.iter().enumerate() {
            if edge_renumber.insert(e.id, k + 1).is_some() {
                return Err(CoreError::InvalidNetwork(format!("duplicate edge id {}", e.id)));
            }
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(CoreError::InvalidNetwork(format!(
                    "edge {} has nonpositive weight {}",
                    e.id, e.weight
                )));
            }
            if e.u == e.v {
                return Err(CoreError::InvalidNetwork(format!(
                    "edge {} is a self-loop on node {}",
                    e.id, e.u
                )));
            }
            let lookup = |id: usize| {
                renumber.get(&id).copied().ok_or_else(|| {
                    CoreError::InvalidNetwork(format!("edge {} references unknown node {id}", e.id))
                })
            };
            let (a, b) = (lookup(e.u)?, lookup(e.v)?);
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if !seen_pairs.insert((u, v)) {
                return Err(CoreError::InvalidNetwork(format!(
                    "duplicate edge between nodes {} and {}",
                    e.u, e.v
                )));
            }
            norm_edges.push(Edge { id: k + 1, u, v, weight: e.weight });
        }

        let tree = match tree {
            Some(ids) => Some(
                ids.iter()
                    .map(|id| {
                        edge_renumber.get(id).copied().ok_or_else(|| {
                            CoreError::InvalidTree(format!("unknown edge id {id}"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };

        let net = Self { nodes: norm_nodes, edges: norm_edges, sigma_w, sigma_v, tree };
        net.check_connected()?;
        Ok(net)
    }

    pub fn from_document(doc: NetworkDocument) -> Result<Self> {
        Self::new(doc.nodes, doc.edges, doc.sigma_w, doc.sigma_v, doc.tree)
    }

    pub fn to_document(&self) -> NetworkDocument {
        NetworkDocument {
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
            sigma_w: self.sigma_w,
            sigma_v: self.sigma_v,
            tree: self.tree.clone(),
        }
    }

    fn check_connected(&self) -> Result<()> {
        let mut uf = UnionFind::new(self.n());
        for e in &self.edges {
            uf.union(e.u - 1, e.v - 1);
        }
        let root = uf.find(0);
        match (1..self.n()).find(|&i| uf.find(i) != root) {
            Some(i) => Err(CoreError::Disconnected(i + 1)),
            None => Ok(()),
        }
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn sigma_w(&self) -> f64 {
        self.sigma_w
    }

    pub fn sigma_v(&self) -> f64 {
        self.sigma_v
    }

    /// Tree edge ids carried by the source document, if any.
    pub fn preferred_tree(&self) -> Option<&[usize]> {
        self.tree.as_deref()
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.epsilon).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    pub fn is_tree(&self) -> bool {
        self.m() + 1 == self.n()
    }

    /// Same topology with new time scales and edge weights.
    pub fn with_parameters(&self, epsilons: &[f64], weights: &[f64]) -> Result<Self> {
        if epsilons.len() != self.n() || weights.len() != self.m() {
            return Err(CoreError::Dimension(format!(
                "expected {} time scales and {} weights, got {} and {}",
                self.n(),
                self.m(),
                epsilons.len(),
                weights.len()
            )));
        }
        let nodes = self
            .nodes
            .iter()
            .zip(epsilons)
            .map(|(n, &epsilon)| Node { id: n.id, epsilon })
            .collect();
        let edges = self
            .edges
            .iter()
            .zip(weights)
            .map(|(e, &weight)| Edge { weight, ..*e })
            .collect();
        Self::new(nodes, edges, self.sigma_w, self.sigma_v, self.tree.clone())
    }

    pub fn with_noise(&self, sigma_w: f64, sigma_v: f64) -> Result<Self> {
        Self::new(self.nodes.clone(), self.edges.clone(), sigma_w, sigma_v, self.tree.clone())
    }

    /// The subgraph made of the given edges only (must stay connected).
    pub fn edge_subgraph(&self, edge_ids: &[usize]) -> Result<Self> {
        let edges = edge_ids
            .iter()
            .map(|&id| {
                self.edges
                    .get(id.wrapping_sub(1))
                    .copied()
                    .ok_or_else(|| CoreError::InvalidTree(format!("unknown edge id {id}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.nodes.clone(), edges, self.sigma_w, self.sigma_v, None)
    }

    /// Oriented incidence matrix `D` (n x |E|), original edge order.
    pub fn incidence(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n(), self.m());
        for (l, e) in self.edges.iter().enumerate() {
            d[(e.u - 1, l)] = 1.0;
            d[(e.v - 1, l)] = -1.0;
        }
        d
    }

    /// Unweighted Laplacian `D Dᵀ`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let d = self.incidence();
        &d * d.transpose()
    }

    /// Number of spanning trees by Kirchhoff's theorem: any cofactor of the
    /// unweighted Laplacian.
    pub fn kirchhoff_count(&self) -> f64 {
        let l = self.laplacian();
        l.remove_row(0).remove_column(0).determinant()
    }
}

/// Parses and validates a network document.
pub fn load_network(document: &str) -> Result<NetworkSpec> {
    let doc: NetworkDocument =
        serde_json::from_str(document).map_err(|e| CoreError::Parse(e.to_string()))?;
    NetworkSpec::from_document(doc)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum TreeSelector {
    /// The tree carried by the network document if present, otherwise
    /// breadth-first search from node 1 with ascending edge ids.
    #[default]
    Default,
    /// Breadth-first search, ignoring any tree stored in the document.
    Bfs,
    /// Explicit edge ids.
    Explicit(Vec<usize>),
}

/// Tree/co-tree split of the incidence matrix.
///
/// Matrices indexed by edges in `column_order` (tree edges first, then
/// co-tree edges) are `r`, `r_pinv`; `d` keeps the original edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTreeDecomposition {
    pub orientation: Vec<(usize, usize)>,
    pub d: DMatrix<f64>,
    pub tree_edges: Vec<usize>,
    pub cotree_edges: Vec<usize>,
    /// 0-based edge indices: tree edges then co-tree edges.
    pub column_order: Vec<usize>,
    pub d_tau: DMatrix<f64>,
    pub d_c: DMatrix<f64>,
    pub t_tau_c: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub r_pinv: DMatrix<f64>,
}

impl SpanningTreeDecomposition {
    pub fn n(&self) -> usize {
        self.d.nrows()
    }

    pub fn m(&self) -> usize {
        self.d.ncols()
    }

    /// Permutes an edge-indexed vector into `column_order`.
    pub fn permute_edges(&self, values: &[f64]) -> Vec<f64> {
        self.column_order.iter().map(|&l| values[l]).collect()
    }

    /// Inverse of [`Self::permute_edges`].
    pub fn unpermute_edges(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; values.len()];
        for (k, &l) in self.column_order.iter().enumerate() {
            out[l] = values[k];
        }
        out
    }

    /// `D` with columns in `column_order`, i.e. `[D_tau D_c]`.
    pub fn d_permuted(&self) -> DMatrix<f64> {
        linalg::select_columns(&self.d, &self.column_order)
    }
}

fn bfs_tree(net: &NetworkSpec) -> Vec<usize> {
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); net.n()];
    for e in net.edges() {
        adjacency[e.u - 1].push((e.id, e.v - 1));
        adjacency[e.v - 1].push((e.id, e.u - 1));
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }
    let mut visited = vec![false; net.n()];
    let mut tree = Vec::with_capacity(net.n() - 1);
    let mut queue = VecDeque::from([0usize]);
    visited[0] = true;
    while let Some(i) = queue.pop_front() {
        for &(edge_id, j) in &adjacency[i] {
            if !visited[j] {
                visited[j] = true;
                tree.push(edge_id);
                queue.push_back(j);
            }
        }
    }
    tree.sort_unstable();
    tree
}

fn validate_tree(net: &NetworkSpec, ids: &[usize]) -> Result<Vec<usize>> {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != ids.len() {
        return Err(CoreError::InvalidTree("repeated edge id".into()));
    }
    if sorted.len() != net.n() - 1 {
        return Err(CoreError::InvalidTree(format!(
            "a spanning tree of {} nodes needs {} edges, got {}",
            net.n(),
            net.n() - 1,
            sorted.len()
        )));
    }
    let mut uf = UnionFind::new(net.n());
    for &id in &sorted {
        let e = net
            .edges()
            .get(id.wrapping_sub(1))
            .ok_or_else(|| CoreError::InvalidTree(format!("unknown edge id {id}")))?;
        if !uf.union(e.u - 1, e.v - 1) {
            return Err(CoreError::InvalidTree(format!("edge {id} closes a cycle")));
        }
    }
    Ok(sorted)
}

/// Splits the incidence matrix into tree and co-tree parts and builds
/// `T_tau^c`, `R = [I T_tau^c]` and `R†`.
pub fn decompose(net: &NetworkSpec, selector: &TreeSelector) -> Result<SpanningTreeDecomposition> {
    let tree_edges = match selector {
        TreeSelector::Explicit(ids) => validate_tree(net, ids)?,
        TreeSelector::Default => match net.preferred_tree() {
            Some(ids) => validate_tree(net, ids)?,
            None => bfs_tree(net),
        },
        TreeSelector::Bfs => bfs_tree(net),
    };
    let in_tree: BTreeSet<usize> = tree_edges.iter().copied().collect();
    let cotree_edges: Vec<usize> =
        (1..=net.m()).filter(|id| !in_tree.contains(id)).collect();
    let column_order: Vec<usize> =
        tree_edges.iter().chain(cotree_edges.iter()).map(|id| id - 1).collect();

    let d = net.incidence();
    let tree_idx: Vec<usize> = tree_edges.iter().map(|id| id - 1).collect();
    let cotree_idx: Vec<usize> = cotree_edges.iter().map(|id| id - 1).collect();
    let d_tau = linalg::select_columns(&d, &tree_idx);
    let d_c = linalg::select_columns(&d, &cotree_idx);

    let n1 = net.n() - 1;
    if linalg::rank(&d_tau, 1e-10) != n1 {
        return Err(CoreError::Numerical("D_tau is not full column rank".into()));
    }

    let gram = d_tau.transpose() * &d_tau;
    let t_tau_c = if d_c.ncols() == 0 {
        DMatrix::zeros(n1, 0)
    } else {
        linalg::spd_solve(&gram, &(d_tau.transpose() * &d_c))?
    };
    let residual = if d_c.ncols() == 0 { 0.0 } else { (&d_tau * &t_tau_c - &d_c).amax() };
    if residual > 1e-10 {
        return Err(CoreError::Numerical(format!(
            "co-tree columns not reproduced by tree columns (residual {residual:.3e})"
        )));
    }

    let mut r = DMatrix::zeros(n1, net.m());
    r.view_mut((0, 0), (n1, n1)).fill_with_identity();
    if t_tau_c.ncols() > 0 {
        r.view_mut((0, n1), (n1, t_tau_c.ncols())).copy_from(&t_tau_c);
    }
    let r_pinv = linalg::pinv(&r)?;

    Ok(SpanningTreeDecomposition {
        orientation: net.edges().iter().map(|e| (e.u, e.v)).collect(),
        d,
        tree_edges,
        cotree_edges,
        column_order,
        d_tau,
        d_c,
        t_tau_c,
        r,
        r_pinv,
    })
}

/// `L = D Dᵀ`, `L_e = Dᵀ D`, `L_{w,s} = E⁻¹ D W Dᵀ`, `L_{e,s}^tau = D_tauᵀ E⁻¹ D_tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacians {
    pub l: DMatrix<f64>,
    pub l_e: DMatrix<f64>,
    pub l_ws: DMatrix<f64>,
    pub l_es_tau: DMatrix<f64>,
}

pub fn laplacians(net: &NetworkSpec, dec: &SpanningTreeDecomposition) -> Laplacians {
    let d = &dec.d;
    let e_inv = linalg::diag(&net.epsilons().iter().map(|e| 1.0 / e).collect::<Vec<_>>());
    let w = linalg::diag(&net.weights());
    Laplacians {
        l: d * d.transpose(),
        l_e: d.transpose() * d,
        l_ws: &e_inv * d * w * d.transpose(),
        l_es_tau: time_scaled_edge_laplacian(net, dec),
    }
}

/// `D_tauᵀ E⁻¹ D_tau`, symmetric positive definite.
pub fn time_scaled_edge_laplacian(net: &NetworkSpec, dec: &SpanningTreeDecomposition) -> DMatrix<f64> {
    let e_inv = linalg::diag(&net.epsilons().iter().map(|e| 1.0 / e).collect::<Vec<_>>());
    let l = dec.d_tau.transpose() * e_inv * &dec.d_tau;
    (&l + l.transpose()) * 0.5
}

/// `round(det(R Rᵀ))`, cross-checked against the matrix-tree count.
pub fn spanning_tree_count(dec: &SpanningTreeDecomposition) -> Result<u64> {
    let rr = &dec.r * dec.r.transpose();
    let det = rr.determinant();
    let l = &dec.d * dec.d.transpose();
    let kirchhoff = l.remove_row(0).remove_column(0).determinant();
    if (det - kirchhoff).abs() > 0.5 || det < 0.5 {
        return Err(CoreError::Numerical(format!(
            "det(RR^T) = {det} disagrees with matrix-tree count {kirchhoff}"
        )));
    }
    Ok(det.round() as u64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeEnumeration {
    pub trees: Vec<Vec<usize>>,
    pub truncated: bool,
}

/// Lists spanning trees as sorted edge-id sets in lexicographic order,
/// stopping after `limit` trees. Truncation is flagged and logged.
pub fn enumerate_spanning_trees(net: &NetworkSpec, limit: usize) -> TreeEnumeration {
    struct Search<'a> {
        edges: &'a [Edge],
        need: usize,
        limit: usize,
        current: Vec<usize>,
        trees: Vec<Vec<usize>>,
        truncated: bool,
    }

    impl Search<'_> {
        fn go(&mut self, start: usize, uf: &UnionFind) {
            if self.truncated {
                return;
            }
            if self.current.len() == self.need {
                if self.trees.len() == self.limit {
                    self.truncated = true;
                } else {
                    self.trees.push(self.current.clone());
                }
                return;
            }
            let remaining = self.need - self.current.len();
            for idx in start..self.edges.len() {
                if self.edges.len() - idx < remaining {
                    break;
                }
                let e = self.edges[idx];
                let mut next = uf.clone();
                if next.union(e.u - 1, e.v - 1) {
                    self.current.push(e.id);
                    self.go(idx + 1, &next);
                    self.current.pop();
                    if self.truncated {
                        return;
                    }
                }
            }
        }
    }

    let mut search = Search {
        edges: net.edges(),
        need: net.n() - 1,
        limit,
        current: Vec::new(),
        trees: Vec::new(),
        truncated: false,
    };
    search.go(0, &UnionFind::new(net.n()));
    if search.truncated {
        log::warn!("spanning-tree enumeration truncated at {limit} trees");
    }
    TreeEnumeration { trees: search.trees, truncated: search.truncated }
}

#[derive(Debug, Clone)]
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    /// Returns false when `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}
