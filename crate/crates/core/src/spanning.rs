//! Exact, exponential-time reference: spanning-tree enumeration and the
//! tree-averaged projection matrices. Only meant for small graphs.

use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{chain_of_path, EdgeId, OneChain, Orientation, PathSpec, VertexId, WeightedGraph};
use crate::laplacian::ReducedLaplacian;
use crate::projections::ProjectionPair;
use crate::tolerance::Tolerance;

pub const DEFAULT_TREE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    /// Sorted.
    pub edges: Vec<EdgeId>,
    /// `Π_{e∉T} ℓ(e)`.
    pub weight: f64,
    /// `Π_{e∈T} 1/ℓ(e)`.
    pub coweight: f64,
    members: Vec<bool>,
}

impl SpanningTree {
    /// Checks that `edges` are `n − 1` distinct edges forming no cycle.
    pub fn new(graph: &WeightedGraph, edges: &[EdgeId]) -> Result<Self> {
        let mut members = vec![false; graph.edge_count()];
        let mut sets = DisjointSets::new(graph.vertex_count());
        for &e in edges {
            graph.check_edge(e)?;
            let edge = graph.edge(e);
            if members[e.0] || !sets.union(edge.u.0, edge.v.0) {
                return Err(Error::NotASpanningTree);
            }
            members[e.0] = true;
        }
        if edges.len() + 1 != graph.vertex_count() {
            return Err(Error::NotASpanningTree);
        }
        Ok(Self::from_members(graph, members))
    }

    fn from_members(graph: &WeightedGraph, members: Vec<bool>) -> Self {
        let mut weight = 1.0;
        let mut coweight = 1.0;
        let mut edges = Vec::new();
        for e in graph.edge_ids() {
            if members[e.0] {
                coweight /= graph.length(e);
                edges.push(e);
            } else {
                weight *= graph.length(e);
            }
        }
        Self { edges, weight, coweight, members }
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.members.get(e.0).copied().unwrap_or(false)
    }

    /// The unique path in the tree between two vertices.
    pub fn path(&self, graph: &WeightedGraph, from: VertexId, to: VertexId) -> PathSpec {
        let mut parent: Vec<Option<(EdgeId, VertexId)>> = vec![None; graph.vertex_count()];
        let mut seen = vec![false; graph.vertex_count()];
        seen[from.0] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(x) = queue.pop_front() {
            if x == to {
                break;
            }
            for &(f, y) in graph.neighbours(x) {
                if self.contains(f) && !seen[y.0] {
                    seen[y.0] = true;
                    parent[y.0] = Some((f, x));
                    queue.push_back(y);
                }
            }
        }
        let mut vertices = vec![to];
        let mut edges = Vec::new();
        let mut at = to;
        while let Some((f, prev)) = parent[at.0] {
            edges.push(f);
            vertices.push(prev);
            at = prev;
        }
        vertices.reverse();
        edges.reverse();
        PathSpec { vertices, edges }
    }

    /// Vertices on the same side of `T ∖ e` as `start`.
    fn side(&self, graph: &WeightedGraph, removed: EdgeId, start: VertexId) -> Vec<bool> {
        let mut side = vec![false; graph.vertex_count()];
        side[start.0] = true;
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for &(f, y) in graph.neighbours(x) {
                if f != removed && self.contains(f) && !side[y.0] {
                    side[y.0] = true;
                    stack.push(y);
                }
            }
        }
        side
    }
}

/// Every spanning tree of a graph, with the totals `w(G)` and `w′(G)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsemble {
    pub trees: Vec<SpanningTree>,
    pub total_weight: f64,
    pub total_coweight: f64,
}

impl TreeEnsemble {
    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// `w(T)/w(G)`, after checking it against `w′(T)/w′(G)`.
    pub fn probability(&self, tree: &SpanningTree, tol: &Tolerance) -> Result<f64> {
        let by_weight = tree.weight / self.total_weight;
        let by_coweight = tree.coweight / self.total_coweight;
        if !tol.close(by_weight, by_coweight) {
            return Err(Error::RatioMismatch { by_weight, by_coweight });
        }
        Ok(by_weight)
    }

    /// `Pr{e ∉ T}` by summing explicit tree probabilities.
    pub fn omission_probability(&self, e: EdgeId) -> f64 {
        self.trees
            .iter()
            .filter(|t| !t.contains(e))
            .map(|t| t.weight)
            .sum::<f64>()
            / self.total_weight
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// False when already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Natural log of the number of spanning trees, from the unweighted reduced
/// Laplacian.
pub fn log_tree_count(graph: &WeightedGraph) -> f64 {
    let n = graph.vertex_count();
    let mut q = DMatrix::<f64>::zeros(n - 1, n - 1);
    for edge in graph.edges() {
        let (u, v) = (edge.u.0, edge.v.0);
        // ground at the last vertex
        if u + 1 < n {
            q[(u, u)] += 1.0;
        }
        if v + 1 < n {
            q[(v, v)] += 1.0;
        }
        if u + 1 < n && v + 1 < n {
            q[(u, v)] -= 1.0;
            q[(v, u)] -= 1.0;
        }
    }
    match q.cholesky() {
        Some(c) => c.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum(),
        None => f64::INFINITY,
    }
}

pub fn enumerate_spanning_trees(graph: &WeightedGraph) -> Result<TreeEnsemble> {
    enumerate_spanning_trees_capped(graph, DEFAULT_TREE_CAP)
}

/// Deletion/contraction search over edges in id order: each edge is either
/// contracted into the partial forest (if it joins two components) or
/// deleted (if the remaining edges can still connect everything).
pub fn enumerate_spanning_trees_capped(graph: &WeightedGraph, cap: usize) -> Result<TreeEnsemble> {
    let estimate = log_tree_count(graph).exp().round();
    if estimate > cap as f64 {
        return Err(Error::TooManyTrees { estimate, cap });
    }
    let mut search = Search {
        graph,
        cap,
        members: vec![false; graph.edge_count()],
        found: Vec::new(),
    };
    search.descend(0, DisjointSets::new(graph.vertex_count()), graph.vertex_count())?;
    let trees: Vec<SpanningTree> = search
        .found
        .into_iter()
        .map(|m| SpanningTree::from_members(graph, m))
        .collect();
    let total_weight = trees.iter().map(|t| t.weight).sum();
    let total_coweight = trees.iter().map(|t| t.coweight).sum();
    Ok(TreeEnsemble { trees, total_weight, total_coweight })
}

struct Search<'g> {
    graph: &'g WeightedGraph,
    cap: usize,
    members: Vec<bool>,
    found: Vec<Vec<bool>>,
}

impl Search<'_> {
    fn descend(&mut self, next: usize, sets: DisjointSets, components: usize) -> Result<()> {
        if components == 1 {
            if self.found.len() == self.cap {
                return Err(Error::TooManyTrees { estimate: f64::NAN, cap: self.cap });
            }
            self.found.push(self.members.clone());
            return Ok(());
        }
        if next == self.graph.edge_count() {
            return Ok(());
        }
        let edge = self.graph.edge(EdgeId(next));
        let mut joined = DisjointSets { parent: sets.parent.clone() };
        if joined.union(edge.u.0, edge.v.0) {
            self.members[next] = true;
            self.descend(next + 1, joined, components - 1)?;
            self.members[next] = false;
        }
        if self.still_connectable(next + 1, &sets) {
            self.descend(next + 1, sets, components)?;
        }
        Ok(())
    }

    fn still_connectable(&self, from: usize, sets: &DisjointSets) -> bool {
        let mut sets = DisjointSets { parent: sets.parent.clone() };
        let mut components = (0..self.graph.vertex_count()).filter(|&v| sets.find(v) == v).count();
        for edge in &self.graph.edges()[from..] {
            if sets.union(edge.u.0, edge.v.0) {
                components -= 1;
            }
        }
        components == 1
    }
}

/// `c(T, e)`: for `e ∉ T`, the circuit `e` followed by the tree path back
/// from its head to its tail; zero for `e ∈ T`.
pub fn fundamental_circuit_chain(
    graph: &WeightedGraph,
    orientation: &Orientation,
    tree: &SpanningTree,
    e: EdgeId,
) -> OneChain {
    let m = graph.edge_count();
    if tree.contains(e) {
        return OneChain::zero(m);
    }
    let back = tree.path(graph, orientation.head(graph, e), orientation.tail(graph, e));
    let mut chain = chain_of_path(graph, orientation, &back).expect("tree path is connected");
    chain.add_scaled(&OneChain::edge(m, e, 1.0), 1.0);
    chain
}

/// `b(T, e)`: for `e ∈ T`, the cut separating the two components of `T ∖ e`,
/// each crossing edge signed `+1` when it crosses the same way as `e`; zero
/// for `e ∉ T`.
pub fn fundamental_cocircuit_chain(
    graph: &WeightedGraph,
    orientation: &Orientation,
    tree: &SpanningTree,
    e: EdgeId,
) -> OneChain {
    let m = graph.edge_count();
    let mut coeffs = vec![0.0; m];
    if !tree.contains(e) {
        return OneChain::from_coeffs(coeffs);
    }
    let side = tree.side(graph, e, orientation.tail(graph, e));
    for f in graph.edge_ids() {
        let (tail, head) = (orientation.tail(graph, f), orientation.head(graph, f));
        if side[tail.0] != side[head.0] {
            coeffs[f.0] = if side[tail.0] { 1.0 } else { -1.0 };
        }
    }
    OneChain::from_coeffs(coeffs)
}

/// Kirchhoff's tree averages: `cycle = Σ w(T)/w(G) M_T` and
/// `cocycle = (Σ w′(T)/w′(G) N_T)ᵀ`, where column `e` of `M_T` (`N_T`) is
/// `c(T, e)` (`b(T, e)`).
pub fn kirchhoff_projection_matrices(graph: &WeightedGraph, orientation: &Orientation) -> Result<ProjectionPair> {
    let ensemble = enumerate_spanning_trees(graph)?;
    Ok(kirchhoff_projections_from(graph, orientation, &ensemble))
}

pub fn kirchhoff_projections_from(
    graph: &WeightedGraph,
    orientation: &Orientation,
    ensemble: &TreeEnsemble,
) -> ProjectionPair {
    let m = graph.edge_count();
    let mut p = DMatrix::zeros(m, m);
    let mut p_prime = DMatrix::zeros(m, m);
    for tree in &ensemble.trees {
        let by_weight = tree.weight / ensemble.total_weight;
        let by_coweight = tree.coweight / ensemble.total_coweight;
        for e in graph.edge_ids() {
            let circuit = fundamental_circuit_chain(graph, orientation, tree, e);
            let cocircuit = fundamental_cocircuit_chain(graph, orientation, tree, e);
            for f in 0..m {
                p[(f, e.0)] += by_weight * circuit.coeffs()[f];
                p_prime[(f, e.0)] += by_coweight * cocircuit.coeffs()[f];
            }
        }
    }
    ProjectionPair { cycle: p, cocycle: p_prime.transpose() }
}

/// `(w′(G) by enumeration, det Q_q)` with `q` the first vertex.
pub fn matrix_tree_check(graph: &WeightedGraph) -> Result<(f64, f64)> {
    let ensemble = enumerate_spanning_trees(graph)?;
    let det = ReducedLaplacian::new(graph, VertexId(0))?.determinant();
    Ok((ensemble.total_coweight, det))
}

/// `det Q_q` for every ground `q`.
pub fn reduced_determinants(graph: &WeightedGraph) -> Result<Vec<f64>> {
    graph
        .vertex_ids()
        .map(|q| Ok(ReducedLaplacian::new(graph, q)?.determinant()))
        .collect()
}

/// `w(T)/w(G)`, which must agree with `w′(T)/w′(G)`.
pub fn tree_probability(graph: &WeightedGraph, tree: &SpanningTree) -> Result<f64> {
    let tree = SpanningTree::new(graph, &tree.edges)?;
    enumerate_spanning_trees(graph)?.probability(&tree, &Tolerance::default())
}
