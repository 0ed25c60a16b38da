//! Orthogonal projections of the 1-chains onto the cycle space `H₁` and onto
//! its complement `H₁⊥` (w.r.t. `[e, f] = δ_ef ℓ(e)`), the Kirchhoff problem,
//! and pairings evaluated through the projections.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::graph::{
    boundary, chain_of_path, EdgeId, OneChain, Orientation, VertexId, WeightedGraph,
};
use crate::laplacian::solve_dirichlet;
use crate::potentials::{CrossRatioMatrix, Potentials};

/// Matrices of `π` (onto cycles) and `π′` (onto cocycles) in an orientation's
/// basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionPair {
    pub cycle: DMatrix<f64>,
    pub cocycle: DMatrix<f64>,
}

impl ProjectionPair {
    /// `π′ = D⁻¹Ξ`, `π = I − D⁻¹Ξ`.
    pub fn from_xi(graph: &WeightedGraph, xi: &CrossRatioMatrix) -> Self {
        let mut cocycle = xi.matrix.clone();
        for (e, mut row) in cocycle.row_iter_mut().enumerate() {
            row /= graph.length(EdgeId(e));
        }
        let m = cocycle.nrows();
        let cycle = DMatrix::identity(m, m) - &cocycle;
        Self { cycle, cocycle }
    }

    pub fn project_cocycle(&self, chain: &OneChain) -> OneChain {
        let v = &self.cocycle * DVector::from_column_slice(chain.coeffs());
        OneChain::from_coeffs(v.as_slice().to_vec())
    }

    pub fn project_cycle(&self, chain: &OneChain) -> OneChain {
        let v = &self.cycle * DVector::from_column_slice(chain.coeffs());
        OneChain::from_coeffs(v.as_slice().to_vec())
    }
}

pub fn projection_matrices(graph: &WeightedGraph, orientation: &Orientation) -> Result<ProjectionPair> {
    let xi = Potentials::new(graph)?.xi_matrix(orientation);
    Ok(ProjectionPair::from_xi(graph, &xi))
}

/// `𝖥(e) = 1 − r(e⁻, e⁺)/ℓ(e)`, the probability that a weighted uniform
/// spanning tree avoids `e`.
pub fn foster_coefficient(graph: &WeightedGraph, e: EdgeId) -> Result<f64> {
    graph.check_edge(e)?;
    let pot = Potentials::new(graph)?;
    let edge = graph.edge(e);
    Ok(1.0 - pot.resistance(edge.u, edge.v) / edge.length)
}

/// Foster coefficients of every edge from one factorization.
pub fn foster_coefficients(graph: &WeightedGraph) -> Result<Vec<f64>> {
    let pot = Potentials::new(graph)?;
    Ok(graph
        .edges()
        .iter()
        .map(|edge| 1.0 - pot.resistance(edge.u, edge.v) / edge.length)
        .collect())
}

/// Solution of the Kirchhoff problem for an external source `c`.
///
/// Signs follow the chain convention `∂e = e⁺ − e⁻`: the potential solves
/// `Δψ = ∂c`, the voltage across `e` is `ψ(e⁺) − ψ(e⁻) = ℓ(e)·i(e)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KirchhoffSolution {
    /// `i = π′(c)`, amperes.
    pub internal_current: OneChain,
    /// Volts, by edge.
    pub edge_voltages: Vec<f64>,
    /// Volts, by vertex, zero at the ground.
    pub potential: Vec<f64>,
    pub ground: VertexId,
}

pub fn solve_kirchhoff(
    graph: &WeightedGraph,
    orientation: &Orientation,
    source: &OneChain,
    ground: VertexId,
) -> Result<KirchhoffSolution> {
    let pair = projection_matrices(graph, orientation)?;
    let internal_current = pair.project_cocycle(source);
    let edge_voltages = graph
        .edge_ids()
        .map(|e| graph.length(e) * internal_current.coeff(e))
        .collect();
    let potential = solve_dirichlet(graph, &boundary(graph, orientation, source), ground)?;
    Ok(KirchhoffSolution {
        internal_current,
        edge_voltages,
        potential,
        ground,
    })
}

/// `[γ₁, π′(γ₂)] = [γ₁]ᵀ D D⁻¹Ξ [γ₂]`, the energy pairing of the boundaries.
pub fn energy_via_projection(
    graph: &WeightedGraph,
    orientation: &Orientation,
    gamma1: &OneChain,
    gamma2: &OneChain,
) -> Result<f64> {
    let pair = projection_matrices(graph, orientation)?;
    Ok(gamma1.inner(&pair.project_cocycle(gamma2), graph))
}

/// Thomson's principle: `r(x, y) = ‖π′(γ_{yx})‖²` for any path `y → x`.
pub fn resistance_via_thomson(
    graph: &WeightedGraph,
    orientation: &Orientation,
    x: VertexId,
    y: VertexId,
) -> Result<f64> {
    let pair = projection_matrices(graph, orientation)?;
    let gamma = chain_of_path(graph, orientation, &graph.shortest_path(y, x))?;
    let projected = pair.project_cocycle(&gamma);
    Ok(projected.inner(&projected, graph))
}

/// Fundamental circuits of the breadth-first tree at the first vertex, a
/// basis of `H₁`.
pub fn cycle_basis(graph: &WeightedGraph, orientation: &Orientation) -> Vec<OneChain> {
    let root = VertexId(0);
    let mut in_tree = vec![false; graph.edge_count()];
    for v in graph.vertex_ids() {
        for e in graph.shortest_path(root, v).edges {
            in_tree[e.0] = true;
        }
    }
    graph
        .edge_ids()
        .filter(|e| !in_tree[e.0])
        .map(|e| {
            let (tail, head) = (orientation.tail(graph, e), orientation.head(graph, e));
            // root → tail, then e, then head → root
            let mut chain = chain_of_path(graph, orientation, &graph.shortest_path(root, tail))
                .expect("tree path");
            chain.add_scaled(&OneChain::edge(graph.edge_count(), e, 1.0), 1.0);
            let back = chain_of_path(graph, orientation, &graph.shortest_path(head, root)).expect("tree path");
            chain.add_scaled(&back, 1.0);
            chain
        })
        .collect()
}
