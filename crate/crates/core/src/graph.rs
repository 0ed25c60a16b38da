//! Weighted multigraphs, orientations, chains and the model operations
//! (subdivision and edge contraction) that connect a finite graph to the
//! metric graph it describes.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance::Tolerance;

/// Shortest edge length accepted by validation (ohms).
pub const MIN_LENGTH: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub usize);

impl VertexId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl EdgeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub label: String,
    pub u: VertexId,
    pub v: VertexId,
    /// Resistance in ohms.
    pub length: f64,
}

impl Edge {
    pub fn other(&self, w: VertexId) -> VertexId {
        if w == self.u {
            self.v
        } else {
            self.u
        }
    }

    pub fn joins(&self, a: VertexId, b: VertexId) -> bool {
        (self.u == a && self.v == b) || (self.u == b && self.v == a)
    }
}

/// Graph interchange format: `{"vertices": [...], "edges": [{"id","u","v","length"}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub id: String,
    pub u: String,
    pub v: String,
    pub length: f64,
}

impl GraphSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph spec serializes")
    }

    pub fn build(&self) -> Result<WeightedGraph> {
        let mut vertex_index = HashMap::with_capacity(self.vertices.len());
        for (i, name) in self.vertices.iter().enumerate() {
            if vertex_index.insert(name.clone(), VertexId(i)).is_some() {
                return Err(Error::DuplicateVertex(name.clone()));
            }
        }
        let lookup = |name: &str| {
            vertex_index
                .get(name)
                .copied()
                .ok_or_else(|| Error::UnknownVertex(name.to_string()))
        };
        let mut edges = Vec::with_capacity(self.edges.len());
        for spec in &self.edges {
            edges.push(Edge {
                label: spec.id.clone(),
                u: lookup(&spec.u)?,
                v: lookup(&spec.v)?,
                length: spec.length,
            });
        }
        WeightedGraph::from_parts(self.vertices.clone(), edges)
    }
}

/// Checks every weighted-graph invariant of an interchange document.
pub fn validate(spec: &GraphSpec) -> Result<()> {
    spec.build().map(|_| ())
}

/// Finite connected multigraph with positive edge lengths and no loops.
///
/// Vertex and edge order is insertion order and never changes; operations
/// that refine or contract the graph return new values.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    vertex_index: HashMap<String, VertexId>,
    edge_index: HashMap<String, EdgeId>,
    adjacency: Vec<Vec<(EdgeId, VertexId)>>,
}

impl WeightedGraph {
    pub fn from_json(text: &str) -> Result<Self> {
        GraphSpec::from_json(text)?.build()
    }

    pub fn builder() -> GraphBuilder {
        GraphBuilder::default()
    }

    /// Assembles and validates a graph from labelled vertices and edges whose
    /// endpoints are already resolved.
    pub fn from_parts(vertices: Vec<String>, edges: Vec<Edge>) -> Result<Self> {
        let mut vertex_index = HashMap::with_capacity(vertices.len());
        for (i, name) in vertices.iter().enumerate() {
            if vertex_index.insert(name.clone(), VertexId(i)).is_some() {
                return Err(Error::DuplicateVertex(name.clone()));
            }
        }
        if vertices.len() < 2 || edges.is_empty() {
            return Err(Error::TooFewVertices);
        }
        let mut edge_index = HashMap::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); vertices.len()];
        for (i, edge) in edges.iter().enumerate() {
            if edge_index.insert(edge.label.clone(), EdgeId(i)).is_some() {
                return Err(Error::DuplicateEdge(edge.label.clone()));
            }
            if edge.u.0 >= vertices.len() || edge.v.0 >= vertices.len() {
                return Err(Error::UnknownVertex(format!("#{}", edge.u.0.max(edge.v.0))));
            }
            if edge.u == edge.v {
                return Err(Error::SelfLoop(edge.label.clone()));
            }
            if !(edge.length.is_finite() && edge.length >= MIN_LENGTH) {
                return Err(Error::NonpositiveLength {
                    edge: edge.label.clone(),
                    length: edge.length,
                });
            }
            adjacency[edge.u.0].push((EdgeId(i), edge.v));
            adjacency[edge.v.0].push((EdgeId(i), edge.u));
        }
        let graph = Self {
            vertices,
            edges,
            vertex_index,
            edge_index,
            adjacency,
        };
        if graph.bfs_parents(VertexId(0)).iter().any(Option::is_none) {
            return Err(Error::Disconnected);
        }
        Ok(graph)
    }

    pub fn to_spec(&self) -> GraphSpec {
        GraphSpec {
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeSpec {
                    id: e.label.clone(),
                    u: self.vertices[e.u.0].clone(),
                    v: self.vertices[e.v.0].clone(),
                    length: e.length,
                })
                .collect(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Dimension of the cycle space, `m - n + 1`.
    pub fn cycle_rank(&self) -> usize {
        self.edges.len() + 1 - self.vertices.len()
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vertices.len()).map(VertexId)
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.edges.len()).map(EdgeId)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0]
    }

    pub fn length(&self, e: EdgeId) -> f64 {
        self.edges[e.0].length
    }

    pub fn vertex_label(&self, v: VertexId) -> &str {
        &self.vertices[v.0]
    }

    pub fn vertex_labels(&self) -> &[String] {
        &self.vertices
    }

    pub fn edge_label(&self, e: EdgeId) -> &str {
        &self.edges[e.0].label
    }

    pub fn vertex(&self, label: &str) -> Result<VertexId> {
        self.vertex_index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(label.to_string()))
    }

    pub fn edge_by_label(&self, label: &str) -> Result<EdgeId> {
        self.edge_index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownEdge(label.to_string()))
    }

    pub fn check_edge(&self, e: EdgeId) -> Result<()> {
        if e.0 < self.edges.len() {
            Ok(())
        } else {
            Err(Error::UnknownEdge(format!("#{}", e.0)))
        }
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<()> {
        if v.0 < self.vertices.len() {
            Ok(())
        } else {
            Err(Error::UnknownVertex(format!("#{}", v.0)))
        }
    }

    /// Incident `(edge, neighbour)` pairs of `v`, in edge order.
    pub fn neighbours(&self, v: VertexId) -> &[(EdgeId, VertexId)] {
        &self.adjacency[v.0]
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn max_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(0.0, f64::max)
    }

    /// Orientation with `e⁻ = u` and `e⁺ = v` as listed.
    pub fn default_orientation(&self) -> Orientation {
        Orientation {
            flipped: vec![false; self.edges.len()],
        }
    }

    /// Parses a point: a vertex label or `edgeId@offset`.
    pub fn parse_point(&self, text: &str) -> Result<Point> {
        if let Some(v) = self.vertex_index.get(text) {
            return Ok(Point::Vertex(*v));
        }
        if let Some((edge, offset)) = text.rsplit_once('@') {
            let edge = self.edge_by_label(edge)?;
            let offset: f64 = offset
                .parse()
                .map_err(|_| Error::Parse(format!("bad offset in point `{text}`")))?;
            return Ok(Point::OnEdge(PointOnEdge { edge, offset }));
        }
        Err(Error::UnknownVertex(text.to_string()))
    }

    /// Breadth-first parent pointers from `root`; `None` marks unreachable
    /// vertices, the root points to itself with no edge.
    fn bfs_parents(&self, root: VertexId) -> Vec<Option<(VertexId, Option<EdgeId>)>> {
        let mut parent = vec![None; self.vertices.len()];
        parent[root.0] = Some((root, None));
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            for &(e, y) in &self.adjacency[x.0] {
                if parent[y.0].is_none() {
                    parent[y.0] = Some((x, Some(e)));
                    queue.push_back(y);
                }
            }
        }
        parent
    }

    /// Fewest-hop path from `from` to `to`.
    pub fn shortest_path(&self, from: VertexId, to: VertexId) -> PathSpec {
        let parent = self.bfs_parents(from);
        let mut vertices = vec![to];
        let mut edges = Vec::new();
        let mut at = to;
        while let Some((p, Some(e))) = parent[at.0] {
            edges.push(e);
            vertices.push(p);
            at = p;
        }
        vertices.reverse();
        edges.reverse();
        PathSpec { vertices, edges }
    }

    fn fresh_vertex_label(&self, base: String, taken: &HashSet<String>) -> String {
        fresh_label(base, |s| self.vertex_index.contains_key(s) || taken.contains(s))
    }

    fn fresh_edge_label(&self, base: String, taken: &HashSet<String>) -> String {
        fresh_label(base, |s| self.edge_index.contains_key(s) || taken.contains(s))
    }
}

fn fresh_label(base: String, taken: impl Fn(&str) -> bool) -> String {
    if !taken(&base) {
        return base;
    }
    (2..)
        .map(|k| format!("{base}'{k}"))
        .find(|s| !taken(s))
        .expect("unbounded suffixes")
}

#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    spec: Vec<String>,
    edges: Vec<EdgeSpec>,
}

impl GraphBuilder {
    pub fn vertex(mut self, label: &str) -> Self {
        self.spec.push(label.to_string());
        self
    }

    pub fn vertices<'a>(mut self, labels: impl IntoIterator<Item = &'a str>) -> Self {
        self.spec.extend(labels.into_iter().map(str::to_string));
        self
    }

    pub fn edge(mut self, id: &str, u: &str, v: &str, length: f64) -> Self {
        self.edges.push(EdgeSpec {
            id: id.to_string(),
            u: u.to_string(),
            v: v.to_string(),
            length,
        });
        self
    }

    pub fn spec(self) -> GraphSpec {
        GraphSpec {
            vertices: self.spec,
            edges: self.edges,
        }
    }

    pub fn build(self) -> Result<WeightedGraph> {
        self.spec().build()
    }
}

/// Choice of `e⁻`/`e⁺` for every edge. Quantities such as the incidence
/// matrix, Ξ and the projection matrices are expressed in this basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Orientation {
    flipped: Vec<bool>,
}

impl Orientation {
    pub fn from_flips(flipped: Vec<bool>) -> Self {
        Self { flipped }
    }

    pub fn is_flipped(&self, e: EdgeId) -> bool {
        self.flipped[e.0]
    }

    /// `+1` when the oriented edge runs `u → v`, `-1` otherwise.
    pub fn sign(&self, e: EdgeId) -> f64 {
        if self.flipped[e.0] {
            -1.0
        } else {
            1.0
        }
    }

    pub fn tail(&self, graph: &WeightedGraph, e: EdgeId) -> VertexId {
        let edge = graph.edge(e);
        if self.flipped[e.0] {
            edge.v
        } else {
            edge.u
        }
    }

    pub fn head(&self, graph: &WeightedGraph, e: EdgeId) -> VertexId {
        let edge = graph.edge(e);
        if self.flipped[e.0] {
            edge.u
        } else {
            edge.v
        }
    }

    pub fn len(&self) -> usize {
        self.flipped.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flipped.is_empty()
    }
}

/// Real 1-chain, coefficients in the basis of an orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct OneChain {
    coeffs: Vec<f64>,
}

impl OneChain {
    pub fn zero(m: usize) -> Self {
        Self {
            coeffs: vec![0.0; m],
        }
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// `coeff · e` for a single oriented basis edge.
    pub fn edge(m: usize, e: EdgeId, coeff: f64) -> Self {
        let mut chain = Self::zero(m);
        chain.coeffs[e.0] = coeff;
        chain
    }

    pub fn coeff(&self, e: EdgeId) -> f64 {
        self.coeffs[e.0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn add_scaled(&mut self, other: &OneChain, factor: f64) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += factor * b;
        }
    }

    pub fn scaled(&self, factor: f64) -> OneChain {
        OneChain::from_coeffs(self.coeffs.iter().map(|c| c * factor).collect())
    }

    /// The same chain written in another orientation's basis.
    pub fn reoriented(&self, from: &Orientation, to: &Orientation) -> OneChain {
        OneChain::from_coeffs(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * from.sign(EdgeId(i)) * to.sign(EdgeId(i)))
                .collect(),
        )
    }

    /// Length-weighted inner product `[γ₁, γ₂] = Σ ℓ(e) a_e b_e`.
    pub fn inner(&self, other: &OneChain, graph: &WeightedGraph) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .zip(graph.edges())
            .map(|((a, b), e)| a * b * e.length)
            .sum()
    }
}

/// Discrete measure on the vertices with total mass zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroDivisor {
    masses: Vec<f64>,
}

impl ZeroDivisor {
    pub fn new(masses: Vec<f64>, tol: &Tolerance) -> Result<Self> {
        if !tol.is_zero_sum(&masses) {
            return Err(Error::MassNotZero {
                total: masses.iter().sum(),
            });
        }
        Ok(Self { masses })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            masses: vec![0.0; n],
        }
    }

    /// `δ_plus − δ_minus`.
    pub fn dipole(n: usize, plus: VertexId, minus: VertexId) -> Self {
        let mut masses = vec![0.0; n];
        masses[plus.0] += 1.0;
        masses[minus.0] -= 1.0;
        Self { masses }
    }

    pub fn from_labels(graph: &WeightedGraph, items: &[(&str, f64)], tol: &Tolerance) -> Result<Self> {
        let mut masses = vec![0.0; graph.vertex_count()];
        for (label, mass) in items {
            masses[graph.vertex(label)?.0] += mass;
        }
        Self::new(masses, tol)
    }

    pub fn mass(&self, v: VertexId) -> f64 {
        self.masses[v.0]
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.masses.iter().all(|&a| a == 0.0)
    }

    pub fn add_scaled(&mut self, other: &ZeroDivisor, factor: f64) {
        for (a, b) in self.masses.iter_mut().zip(&other.masses) {
            *a += factor * b;
        }
    }
}

/// A point in the interior or at an end of an edge segment, `offset` ohms
/// away from the first listed endpoint `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointOnEdge {
    pub edge: EdgeId,
    pub offset: f64,
}

/// Point of the metric graph: a model vertex or a point on an edge segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    Vertex(VertexId),
    OnEdge(PointOnEdge),
}

impl From<VertexId> for Point {
    fn from(v: VertexId) -> Self {
        Point::Vertex(v)
    }
}

impl From<PointOnEdge> for Point {
    fn from(p: PointOnEdge) -> Self {
        Point::OnEdge(p)
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v#{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e#{}", self.0)
    }
}

/// Walk `v₀, e₀, v₁, …, v_k`; edge `eᵢ` is traversed from `vᵢ` to `vᵢ₊₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeId>,
}

impl PathSpec {
    pub fn start(&self) -> VertexId {
        self.vertices[0]
    }

    pub fn end(&self) -> VertexId {
        *self.vertices.last().expect("path has a start vertex")
    }
}

/// `∂(e) = δ_{e⁺} − δ_{e⁻}`, extended linearly.
pub fn boundary(graph: &WeightedGraph, orientation: &Orientation, chain: &OneChain) -> ZeroDivisor {
    let mut masses = vec![0.0; graph.vertex_count()];
    for e in graph.edge_ids() {
        let c = chain.coeff(e);
        if c != 0.0 {
            masses[orientation.head(graph, e).0] += c;
            masses[orientation.tail(graph, e).0] -= c;
        }
    }
    ZeroDivisor { masses }
}

/// Associated 1-chain of a path: `+1` per traversal along the orientation,
/// `-1` per traversal against it.
pub fn chain_of_path(graph: &WeightedGraph, orientation: &Orientation, path: &PathSpec) -> Result<OneChain> {
    if path.vertices.len() != path.edges.len() + 1 {
        return Err(Error::BrokenPath {
            step: path.edges.len().min(path.vertices.len()),
        });
    }
    for v in &path.vertices {
        graph.check_vertex(*v)?;
    }
    let mut chain = OneChain::zero(graph.edge_count());
    for (step, &e) in path.edges.iter().enumerate() {
        graph.check_edge(e)?;
        let (from, to) = (path.vertices[step], path.vertices[step + 1]);
        let (tail, head) = (orientation.tail(graph, e), orientation.head(graph, e));
        if tail == from && head == to {
            chain.coeffs[e.0] += 1.0;
        } else if head == from && tail == to {
            chain.coeffs[e.0] -= 1.0;
        } else {
            return Err(Error::BrokenPath { step });
        }
    }
    Ok(chain)
}

/// A chain `γ` with `∂γ = ν`, assembled as `Σ a_v γ_{qv}` from fewest-hop
/// paths out of `q`.
pub fn chain_for_divisor(
    graph: &WeightedGraph,
    orientation: &Orientation,
    divisor: &ZeroDivisor,
    q: VertexId,
) -> OneChain {
    let parent = graph.bfs_parents(q);
    let mut chain = OneChain::zero(graph.edge_count());
    for v in graph.vertex_ids() {
        let a = divisor.mass(v);
        if a == 0.0 {
            continue;
        }
        // walk v back to q; each tree edge is traversed q-ward, so the
        // q → v path uses it in the opposite direction.
        let mut at = v;
        while let Some((p, Some(e))) = parent[at.0] {
            let along = if orientation.tail(graph, e) == p { 1.0 } else { -1.0 };
            chain.coeffs[e.0] += a * along;
            at = p;
        }
    }
    chain
}

/// Replaces `p.edge` by two segments of lengths `offset` and `ℓ − offset`
/// meeting at a new vertex. The first segment keeps the edge's index, the
/// second is appended, and the new vertex is appended, so every other vertex
/// and edge keeps its id.
pub fn subdivide(graph: &WeightedGraph, p: PointOnEdge) -> Result<(WeightedGraph, VertexId)> {
    graph.check_edge(p.edge)?;
    let edge = graph.edge(p.edge).clone();
    if !(p.offset > 0.0 && p.offset < edge.length) || edge.length - p.offset < MIN_LENGTH || p.offset < MIN_LENGTH {
        return Err(Error::OffsetOutOfRange {
            edge: edge.label.clone(),
            offset: p.offset,
            length: edge.length,
        });
    }
    let none = HashSet::new();
    let mut vertices = graph.vertices.clone();
    let w = VertexId(vertices.len());
    vertices.push(graph.fresh_vertex_label(format!("{}@{}", edge.label, p.offset), &none));
    let first = graph.fresh_edge_label(format!("{}:a", edge.label), &none);
    let mut taken = HashSet::new();
    taken.insert(first.clone());
    let second = graph.fresh_edge_label(format!("{}:b", edge.label), &taken);
    let mut edges = graph.edges.clone();
    edges[p.edge.0] = Edge {
        label: first,
        u: edge.u,
        v: w,
        length: p.offset,
    };
    edges.push(Edge {
        label: second,
        u: w,
        v: edge.v,
        length: edge.length - p.offset,
    });
    Ok((WeightedGraph::from_parts(vertices, edges)?, w))
}

/// A model containing every point in `points` as a vertex, plus the vertex
/// each point became. Original vertex and edge ids are preserved.
pub fn refine(graph: &WeightedGraph, points: &[Point]) -> Result<(WeightedGraph, Vec<VertexId>)> {
    let mut per_edge: HashMap<EdgeId, Vec<f64>> = HashMap::new();
    let mut resolved: Vec<Option<VertexId>> = Vec::with_capacity(points.len());
    for point in points {
        match *point {
            Point::Vertex(v) => {
                graph.check_vertex(v)?;
                resolved.push(Some(v));
            }
            Point::OnEdge(p) => {
                graph.check_edge(p.edge)?;
                let edge = graph.edge(p.edge);
                if !(p.offset >= 0.0 && p.offset <= edge.length) {
                    return Err(Error::OffsetOutOfRange {
                        edge: edge.label.clone(),
                        offset: p.offset,
                        length: edge.length,
                    });
                }
                if p.offset < MIN_LENGTH {
                    resolved.push(Some(edge.u));
                } else if edge.length - p.offset < MIN_LENGTH {
                    resolved.push(Some(edge.v));
                } else {
                    per_edge.entry(p.edge).or_default().push(p.offset);
                    resolved.push(None);
                }
            }
        }
    }
    if per_edge.is_empty() {
        return Ok((graph.clone(), resolved.into_iter().map(Option::unwrap).collect()));
    }

    let mut edges_to_split: Vec<EdgeId> = per_edge.keys().copied().collect();
    edges_to_split.sort();
    let mut refined = graph.clone();
    let mut placed: HashMap<(EdgeId, u64), VertexId> = HashMap::new();
    for e in edges_to_split {
        let mut offsets = per_edge[&e].clone();
        offsets.sort_by(f64::total_cmp);
        offsets.dedup();
        // the remaining piece of `e` after each cut; starts as `e` itself
        let mut piece = e;
        let mut consumed = 0.0;
        for offset in offsets {
            let local = offset - consumed;
            if local < MIN_LENGTH {
                // coincides with the previous cut
                let prev = refined.edge(piece).u;
                placed.insert((e, offset.to_bits()), prev);
                continue;
            }
            let (next, w) = subdivide(&refined, PointOnEdge { edge: piece, offset: local })?;
            refined = next;
            placed.insert((e, offset.to_bits()), w);
            piece = EdgeId(refined.edge_count() - 1);
            consumed = offset;
        }
    }
    let ids = points
        .iter()
        .zip(resolved)
        .map(|(point, done)| match (done, point) {
            (Some(v), _) => v,
            (None, Point::OnEdge(p)) => placed[&(p.edge, p.offset.to_bits())],
            (None, Point::Vertex(_)) => unreachable!("vertices resolve directly"),
        })
        .collect();
    Ok((refined, ids))
}

/// Where an edge of `G` ended up in `G/e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeImage {
    /// The contracted edge itself.
    Contracted,
    Edge(EdgeId),
    /// An edge parallel to the contracted one, now a loop, split at its
    /// midpoint into two halves oriented around the loop.
    Split(EdgeId, EdgeId),
}

/// Result of [`contract_edge`]: the model `G/e` with the canonical maps from `G`.
#[derive(Debug, Clone)]
pub struct Contraction {
    pub graph: WeightedGraph,
    pub contracted: EdgeId,
    /// The vertex `e⁻` and `e⁺` were merged into.
    pub merged: VertexId,
    pub vertex_map: Vec<VertexId>,
    pub edge_map: Vec<EdgeImage>,
}

impl Contraction {
    pub fn map_vertex(&self, v: VertexId) -> VertexId {
        self.vertex_map[v.0]
    }

    pub fn map_point(&self, p: Point) -> Point {
        match p {
            Point::Vertex(v) => Point::Vertex(self.map_vertex(v)),
            Point::OnEdge(p) => match self.edge_map[p.edge.0] {
                EdgeImage::Contracted => Point::Vertex(self.merged),
                EdgeImage::Edge(f) => Point::OnEdge(PointOnEdge { edge: f, offset: p.offset }),
                EdgeImage::Split(a, b) => {
                    let half = self.graph.length(a);
                    if p.offset <= half {
                        Point::OnEdge(PointOnEdge { edge: a, offset: p.offset })
                    } else {
                        Point::OnEdge(PointOnEdge { edge: b, offset: p.offset - half })
                    }
                }
            },
        }
    }

    /// Pushes a chain of `G` (in `orientation`) forward to `G/e`, written in
    /// the contracted graph's default orientation.
    pub fn push_chain(&self, orientation: &Orientation, chain: &OneChain) -> OneChain {
        let mut out = OneChain::zero(self.graph.edge_count());
        for (i, image) in self.edge_map.iter().enumerate() {
            let c = chain.coeff(EdgeId(i)) * orientation.sign(EdgeId(i));
            match *image {
                EdgeImage::Contracted => {}
                EdgeImage::Edge(f) => out.coeffs[f.0] += c,
                EdgeImage::Split(a, b) => {
                    out.coeffs[a.0] += c;
                    out.coeffs[b.0] += c;
                }
            }
        }
        out
    }
}

/// Short-circuits `e`: its endpoints become one vertex (at `e⁻`'s position)
/// and every other edge keeps its relative order. Edges parallel to `e`
/// would become loops, so each is split at its midpoint first; the second
/// halves and the midpoint vertices are appended.
pub fn contract_edge(graph: &WeightedGraph, e: EdgeId) -> Result<Contraction> {
    graph.check_edge(e)?;
    let target = graph.edge(e).clone();
    let (keep, drop) = (target.u, target.v);

    let mut vertex_map = Vec::with_capacity(graph.vertex_count());
    let mut vertices = Vec::with_capacity(graph.vertex_count());
    let none = HashSet::new();
    for v in graph.vertex_ids() {
        if v == drop {
            vertex_map.push(VertexId(usize::MAX));
            continue;
        }
        vertex_map.push(VertexId(vertices.len()));
        if v == keep {
            let label = format!("{}/{}", graph.vertex_label(keep), graph.vertex_label(drop));
            vertices.push(graph.fresh_vertex_label(label, &none));
        } else {
            vertices.push(graph.vertex_label(v).to_string());
        }
    }
    let merged = vertex_map[keep.0];
    vertex_map[drop.0] = merged;

    let mut taken_edges = HashSet::new();
    let mut taken_vertices: HashSet<String> = vertices.iter().cloned().collect();
    let mut edges = Vec::with_capacity(graph.edge_count() + 1);
    let mut deferred = Vec::new();
    let mut edge_map = Vec::with_capacity(graph.edge_count());
    for f in graph.edge_ids() {
        if f == e {
            edge_map.push(EdgeImage::Contracted);
            continue;
        }
        let edge = graph.edge(f);
        if edge.joins(keep, drop) {
            let mid_label = graph.fresh_vertex_label(format!("{}@mid", edge.label), &taken_vertices);
            taken_vertices.insert(mid_label.clone());
            let mid = VertexId(vertices.len());
            vertices.push(mid_label);
            let a = graph.fresh_edge_label(format!("{}:a", edge.label), &taken_edges);
            taken_edges.insert(a.clone());
            let b = graph.fresh_edge_label(format!("{}:b", edge.label), &taken_edges);
            taken_edges.insert(b.clone());
            let half = edge.length / 2.0;
            let a_id = EdgeId(edges.len());
            edges.push(Edge { label: a, u: merged, v: mid, length: half });
            deferred.push((f, Edge { label: b, u: mid, v: merged, length: half }));
            edge_map.push(EdgeImage::Split(a_id, EdgeId(usize::MAX)));
        } else {
            let id = EdgeId(edges.len());
            edges.push(Edge {
                label: edge.label.clone(),
                u: vertex_map[edge.u.0],
                v: vertex_map[edge.v.0],
                length: edge.length,
            });
            edge_map.push(EdgeImage::Edge(id));
        }
    }
    for (f, edge) in deferred {
        let b_id = EdgeId(edges.len());
        edges.push(edge);
        if let EdgeImage::Split(a, _) = edge_map[f.0] {
            edge_map[f.0] = EdgeImage::Split(a, b_id);
        }
    }
    let graph = WeightedGraph::from_parts(vertices, edges)?;
    Ok(Contraction {
        graph,
        contracted: e,
        merged,
        vertex_map,
        edge_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn k2() -> WeightedGraph {
        fixtures::k2(5.0)
    }

    #[test]
    fn validate_minimal_and_broken_graphs() {
        assert!(validate(&k2().to_spec()).is_ok());
        let looped = WeightedGraph::builder().vertices(["u", "v"]).edge("e", "u", "u", 1.0).edge("f", "u", "v", 1.0).spec();
        assert_eq!(validate(&looped), Err(Error::SelfLoop("e".into())));
        let split = WeightedGraph::builder()
            .vertices(["a", "b", "c", "d"])
            .edge("e1", "a", "b", 1.0)
            .edge("e2", "c", "d", 1.0)
            .spec();
        assert_eq!(validate(&split), Err(Error::Disconnected));
        let single = WeightedGraph::builder().vertex("a").spec();
        assert_eq!(validate(&single), Err(Error::TooFewVertices));
        let tiny = WeightedGraph::builder().vertices(["a", "b"]).edge("e", "a", "b", 1e-13).spec();
        assert!(matches!(validate(&tiny), Err(Error::NonpositiveLength { .. })));
        let negative = WeightedGraph::builder().vertices(["a", "b"]).edge("e", "a", "b", -1.0).spec();
        assert!(matches!(validate(&negative), Err(Error::NonpositiveLength { .. })));
        let dup = WeightedGraph::builder().vertices(["a", "b"]).edge("e", "a", "b", 1.0).edge("e", "a", "b", 2.0).spec();
        assert_eq!(validate(&dup), Err(Error::DuplicateEdge("e".into())));
        let unknown = WeightedGraph::builder().vertices(["a", "b"]).edge("e", "a", "z", 1.0).spec();
        assert_eq!(validate(&unknown), Err(Error::UnknownVertex("z".into())));
    }

    #[test]
    fn json_round_trip() {
        let g = fixtures::square_with_diagonal();
        let text = g.to_spec().to_json();
        assert_eq!(WeightedGraph::from_json(&text).unwrap(), g);
        assert!(matches!(WeightedGraph::from_json("{\"vertices\": 3}"), Err(Error::Parse(_))));
    }

    #[test]
    fn subdivide_k2() {
        let g = k2();
        let (h, w) = subdivide(&g, PointOnEdge { edge: EdgeId(0), offset: 2.0 }).unwrap();
        assert_eq!(h.vertex_count(), 3);
        assert_eq!(h.edge_count(), 2);
        assert_eq!(h.length(EdgeId(0)), 2.0);
        assert_eq!(h.length(EdgeId(1)), 3.0);
        assert_eq!(h.edge(EdgeId(0)).v, w);
        assert_eq!(h.edge(EdgeId(1)).u, w);
        let end = subdivide(&g, PointOnEdge { edge: EdgeId(0), offset: 5.0 });
        assert!(matches!(end, Err(Error::OffsetOutOfRange { .. })));
        let start = subdivide(&g, PointOnEdge { edge: EdgeId(0), offset: 0.0 });
        assert!(matches!(start, Err(Error::OffsetOutOfRange { .. })));
    }

    #[test]
    fn refine_several_points_on_one_edge() {
        let g = k2();
        let pts = [
            Point::OnEdge(PointOnEdge { edge: EdgeId(0), offset: 4.0 }),
            Point::OnEdge(PointOnEdge { edge: EdgeId(0), offset: 1.0 }),
            Point::OnEdge(PointOnEdge { edge: EdgeId(0), offset: 0.0 }),
            Point::OnEdge(PointOnEdge { edge: EdgeId(0), offset: 1.0 }),
            Point::Vertex(VertexId(1)),
        ];
        let (h, ids) = refine(&g, &pts).unwrap();
        assert_eq!(h.vertex_count(), 4);
        assert_eq!(h.edge_count(), 3);
        assert_eq!(ids[0], VertexId(3));
        assert_eq!(ids[1], VertexId(2));
        assert_eq!(ids[2], VertexId(0));
        assert_eq!(ids[3], ids[1]);
        assert_eq!(ids[4], VertexId(1));
        let mut lengths: Vec<f64> = h.edges().iter().map(|e| e.length).collect();
        lengths.sort_by(f64::total_cmp);
        assert_eq!(lengths, vec![1.0, 1.0, 3.0]);
    }

    #[test]
    fn contract_k2_is_degenerate() {
        assert_eq!(contract_edge(&k2(), EdgeId(0)).unwrap_err(), Error::TooFewVertices);
    }

    #[test]
    fn contract_square_diagonal() {
        let g = fixtures::square_with_diagonal();
        let diag = g.edge_by_label("e5").unwrap();
        let c = contract_edge(&g, diag).unwrap();
        assert_eq!(c.graph.vertex_count(), 3);
        assert_eq!(c.graph.edge_count(), 4);
        assert!(c.graph.edges().iter().all(|e| e.length == 2.0));
        let d = g.vertex("D").unwrap();
        let b = g.vertex("B").unwrap();
        assert_eq!(c.map_vertex(d), c.map_vertex(b));
        assert_eq!(c.map_vertex(d), c.merged);
        let labels: HashSet<&str> = c.graph.vertex_labels().iter().map(String::as_str).collect();
        assert!(labels.contains("A") && labels.contains("C"));
    }

    #[test]
    fn contract_parallel_pair_splits_the_other_edge() {
        let g = fixtures::parallel_pair(1.0, 2.0);
        let c = contract_edge(&g, EdgeId(0)).unwrap();
        assert_eq!(c.graph.vertex_count(), 2);
        assert_eq!(c.graph.edge_count(), 2);
        assert!(c.graph.edges().iter().all(|e| e.length == 1.0));
        let EdgeImage::Split(a, b) = c.edge_map[1] else { panic!("expected split") };
        let o = c.graph.default_orientation();
        let chain = c.push_chain(&g.default_orientation(), &OneChain::edge(2, EdgeId(1), 1.0));
        assert_eq!(chain.coeff(a), 1.0);
        assert_eq!(chain.coeff(b), 1.0);
        assert!(boundary(&c.graph, &o, &chain).is_zero());
    }

    #[test]
    fn boundary_examples() {
        let g = fixtures::triangle(1.0, 1.0, 1.0);
        let o = g.default_orientation();
        let single = boundary(&g, &o, &OneChain::edge(3, EdgeId(0), 1.0));
        assert_eq!(single.masses(), &[-1.0, 1.0, 0.0]);
        let lin = boundary(&g, &o, &OneChain::from_coeffs(vec![2.0, -3.0, 0.0]));
        // e1: a->b, e2: b->c
        assert_eq!(lin.masses(), &[-2.0, 2.0 + 3.0, -3.0]);
        let path = PathSpec {
            vertices: vec![VertexId(0), VertexId(1), VertexId(2), VertexId(0)],
            edges: vec![EdgeId(0), EdgeId(1), EdgeId(2)],
        };
        let cycle = chain_of_path(&g, &o, &path).unwrap();
        assert!(boundary(&g, &o, &cycle).is_zero());
    }

    #[test]
    fn chain_of_path_examples() {
        let g = k2();
        let o = g.default_orientation();
        let forward = PathSpec { vertices: vec![VertexId(0), VertexId(1)], edges: vec![EdgeId(0)] };
        assert_eq!(chain_of_path(&g, &o, &forward).unwrap().coeffs(), &[1.0]);
        let back_and_forth = PathSpec {
            vertices: vec![VertexId(0), VertexId(1), VertexId(0)],
            edges: vec![EdgeId(0), EdgeId(0)],
        };
        assert!(chain_of_path(&g, &o, &back_and_forth).unwrap().is_zero());
        let t = fixtures::triangle(1.0, 1.0, 1.0);
        let broken = PathSpec { vertices: vec![VertexId(0), VertexId(1)], edges: vec![EdgeId(1)] };
        assert_eq!(chain_of_path(&t, &t.default_orientation(), &broken), Err(Error::BrokenPath { step: 0 }));
    }

    #[test]
    fn chain_for_divisor_examples() {
        let tol = Tolerance::default();
        let g = k2();
        let o = g.default_orientation();
        assert!(chain_for_divisor(&g, &o, &ZeroDivisor::zero(2), VertexId(0)).is_zero());
        let nu = ZeroDivisor::dipole(2, VertexId(1), VertexId(0));
        assert_eq!(chain_for_divisor(&g, &o, &nu, VertexId(0)).coeffs(), &[1.0]);

        let sq = fixtures::square_with_diagonal();
        let o = sq.default_orientation();
        let nu = ZeroDivisor::from_labels(&sq, &[("B", 1.0), ("D", -1.0)], &tol).unwrap();
        for q in sq.vertex_ids() {
            let gamma = chain_for_divisor(&sq, &o, &nu, q);
            assert_eq!(boundary(&sq, &o, &gamma), nu);
        }
    }

    #[test]
    fn zero_divisor_rejects_mass() {
        let tol = Tolerance::default();
        assert!(matches!(ZeroDivisor::new(vec![1.0, 0.5], &tol), Err(Error::MassNotZero { .. })));
    }

    #[test]
    fn parse_points() {
        let g = fixtures::square_with_diagonal();
        assert_eq!(g.parse_point("A").unwrap(), Point::Vertex(g.vertex("A").unwrap()));
        let p = g.parse_point("e3@1.5").unwrap();
        assert_eq!(p, Point::OnEdge(PointOnEdge { edge: g.edge_by_label("e3").unwrap(), offset: 1.5 }));
        assert!(g.parse_point("nope").is_err());
        assert!(g.parse_point("e9@1").is_err());
    }
}
