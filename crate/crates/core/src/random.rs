//! Seeded random networks and queries for property checks.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Edge, PathSpec, VertexId, WeightedGraph, ZeroDivisor};

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape of the random multigraphs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphShape {
    pub min_vertices: usize,
    pub max_vertices: usize,
    pub max_edges: usize,
    pub min_length: f64,
    pub max_length: f64,
}

impl Default for GraphShape {
    fn default() -> Self {
        Self {
            min_vertices: 2,
            max_vertices: 6,
            max_edges: 9,
            min_length: 0.1,
            max_length: 10.0,
        }
    }
}

/// A random spanning tree (each new vertex hooked to an earlier one), then
/// extra edges between random distinct endpoints, parallels allowed.
pub fn random_graph(rng: &mut impl Rng, shape: &GraphShape) -> WeightedGraph {
    let n = rng.random_range(shape.min_vertices..=shape.max_vertices);
    let max_edges = shape.max_edges.max(n - 1);
    let m = rng.random_range(n - 1..=max_edges);
    graph_with(rng, n, m, shape.min_length, shape.max_length)
}

/// Connected multigraph with exactly `n` vertices and `m ≥ n − 1` edges.
pub fn graph_with(rng: &mut impl Rng, n: usize, m: usize, min_length: f64, max_length: f64) -> WeightedGraph {
    assert!(n >= 2 && m + 1 >= n);
    let vertices: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut ends = Vec::with_capacity(m);
    for i in 1..n {
        ends.push((rng.random_range(0..i), i));
    }
    while ends.len() < m {
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        ends.push((a, b));
    }
    let edges = ends
        .into_iter()
        .enumerate()
        .map(|(k, (a, b))| {
            let (u, v) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
            Edge {
                label: format!("e{}", k + 1),
                u: VertexId(u),
                v: VertexId(v),
                length: rng.random_range(min_length..=max_length),
            }
        })
        .collect();
    WeightedGraph::from_parts(vertices, edges).expect("spanning tree makes it connected")
}

/// `count` graphs from one seed, each drawn from its own derived stream so
/// that the corpus can be regenerated piecemeal.
pub fn corpus(seed: u64, count: usize, shape: &GraphShape) -> Vec<WeightedGraph> {
    (0..count).map(|i| random_graph(&mut rng(stream_seed(seed, i)), shape)).collect()
}

/// Seed of the `index`-th derived stream.
pub fn stream_seed(seed: u64, index: usize) -> u64 {
    // splitmix64 step keeps neighbouring streams unrelated
    let mut z = seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn vertex(rng: &mut impl Rng, graph: &WeightedGraph) -> VertexId {
    VertexId(rng.random_range(0..graph.vertex_count()))
}

/// Random mass-zero divisor with masses in `[-1, 1]`.
pub fn divisor(rng: &mut impl Rng, graph: &WeightedGraph) -> ZeroDivisor {
    let n = graph.vertex_count();
    let mut masses: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let mean = masses.iter().sum::<f64>() / n as f64;
    for m in &mut masses {
        *m -= mean;
    }
    let total: f64 = masses.iter().sum();
    masses[0] -= total;
    ZeroDivisor::new(masses, &crate::Tolerance::default()).expect("centred")
}

/// Random walk from `from` until it first reaches `to`.
pub fn walk(rng: &mut impl Rng, graph: &WeightedGraph, from: VertexId, to: VertexId) -> PathSpec {
    let mut vertices = vec![from];
    let mut edges = Vec::new();
    let mut at = from;
    while at != to {
        if edges.len() >= 64 {
            // rare on small graphs; finish along a shortest path
            let rest = graph.shortest_path(at, to);
            edges.extend(rest.edges);
            vertices.extend(rest.vertices.into_iter().skip(1));
            break;
        }
        let &(e, next) = graph.neighbours(at).choose(rng).expect("connected graph");
        edges.push(e);
        vertices.push(next);
        at = next;
    }
    PathSpec { vertices, edges }
}
