//! Potential kernel `j`, effective resistance, Gromov products, cross ratios,
//! the cross-ratio matrix `Ξ`, and the energy and Dirichlet pairings.
//!
//! Everything is read off a single grounded inverse `L_q`:
//!
//! ```text
//! ξ(x,y,z,w) = L[x,z] + L[y,w] − L[x,w] − L[y,z]
//! j_z(x,y)   = ξ(x,z,y,z)
//! r(x,y)     = ξ(x,y,x,y)
//! ```
//!
//! and none of these depend on which ground vertex was used. Points on edges
//! are handled by refining the model so that every queried point is a vertex.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{refine, Orientation, Point, VertexId, WeightedGraph, ZeroDivisor};
use crate::laplacian::{grounded_inverse, laplacian_matrix, GeneralizedInverse};
use crate::tolerance::Tolerance;

/// Batch evaluator backed by one grounded inverse.
#[derive(Debug, Clone)]
pub struct Potentials<'g> {
    graph: &'g WeightedGraph,
    inverse: GeneralizedInverse,
}

impl<'g> Potentials<'g> {
    /// Grounded at the first vertex.
    pub fn new(graph: &'g WeightedGraph) -> Result<Self> {
        Self::grounded_at(graph, VertexId(0))
    }

    pub fn grounded_at(graph: &'g WeightedGraph, q: VertexId) -> Result<Self> {
        Ok(Self {
            graph,
            inverse: grounded_inverse(graph, q)?,
        })
    }

    /// Uses any generalized inverse of the Laplacian.
    pub fn from_inverse(graph: &'g WeightedGraph, inverse: GeneralizedInverse) -> Self {
        Self { graph, inverse }
    }

    pub fn graph(&self) -> &'g WeightedGraph {
        self.graph
    }

    pub fn inverse(&self) -> &GeneralizedInverse {
        &self.inverse
    }

    fn l(&self, a: VertexId, b: VertexId) -> f64 {
        self.inverse.matrix[(a.0, b.0)]
    }

    pub fn cross_ratio(&self, x: VertexId, y: VertexId, z: VertexId, w: VertexId) -> f64 {
        self.l(x, z) + self.l(y, w) - self.l(x, w) - self.l(y, z)
    }

    pub fn j(&self, z: VertexId, x: VertexId, y: VertexId) -> f64 {
        self.cross_ratio(x, z, y, z)
    }

    pub fn resistance(&self, x: VertexId, y: VertexId) -> f64 {
        self.cross_ratio(x, y, x, y)
    }

    pub fn energy(&self, nu1: &ZeroDivisor, nu2: &ZeroDivisor) -> f64 {
        self.inverse.pair(nu1, nu2)
    }

    /// `⟨ν, δ_a − δ_b⟩` without materialising the dipole.
    pub fn energy_against_dipole(&self, nu: &ZeroDivisor, a: VertexId, b: VertexId) -> f64 {
        nu.masses()
            .iter()
            .enumerate()
            .map(|(p, m)| m * (self.inverse.matrix[(p, a.0)] - self.inverse.matrix[(p, b.0)]))
            .sum()
    }

    /// All-pairs effective resistance, `n × n`.
    pub fn resistance_matrix(&self) -> DMatrix<f64> {
        let n = self.graph.vertex_count();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else {
                self.resistance(VertexId(i), VertexId(j))
            }
        })
    }

    /// `Ξ = Bᵀ L B`, gathered entrywise from `L` in `O(nm + m²)`.
    pub fn xi_matrix(&self, orientation: &Orientation) -> CrossRatioMatrix {
        let g = self.graph;
        let (n, m) = (g.vertex_count(), g.edge_count());
        let heads: Vec<usize> = g.edge_ids().map(|e| orientation.head(g, e).0).collect();
        let tails: Vec<usize> = g.edge_ids().map(|e| orientation.tail(g, e).0).collect();
        let l = &self.inverse.matrix;
        // L·B, column f = L[:, f⁺] − L[:, f⁻]
        let lb = DMatrix::from_fn(n, m, |p, f| l[(p, heads[f])] - l[(p, tails[f])]);
        let xi = DMatrix::from_fn(m, m, |e, f| lb[(heads[e], f)] - lb[(tails[e], f)]);
        CrossRatioMatrix {
            matrix: (&xi + xi.transpose()) * 0.5,
            orientation: orientation.clone(),
        }
    }
}

/// `Ξ = (ξ(e⁻, e⁺, f⁻, f⁺))_{e,f}` in the basis of an orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossRatioMatrix {
    pub matrix: DMatrix<f64>,
    pub orientation: Orientation,
}

/// Thread-safe memo of grounded inverses for one graph.
#[derive(Debug)]
pub struct GroundedCache<'g> {
    graph: &'g WeightedGraph,
    entries: RwLock<HashMap<VertexId, Arc<GeneralizedInverse>>>,
}

impl<'g> GroundedCache<'g> {
    pub fn new(graph: &'g WeightedGraph) -> Self {
        Self {
            graph,
            entries: RwLock::new(HashMap::new()),
        }
    }

    pub fn get(&self, q: VertexId) -> Result<Arc<GeneralizedInverse>> {
        if let Some(hit) = self.entries.read().expect("cache lock").get(&q) {
            return Ok(Arc::clone(hit));
        }
        let computed = Arc::new(grounded_inverse(self.graph, q)?);
        let mut entries = self.entries.write().expect("cache lock");
        Ok(Arc::clone(entries.entry(q).or_insert(computed)))
    }

    /// `j_q(x, y) = (L_q)_{xy}`.
    pub fn j(&self, q: VertexId, x: VertexId, y: VertexId) -> Result<f64> {
        Ok(self.get(q)?.entry(x, y))
    }

    /// `ξ_q(x,y,z,w)` evaluated with ground `q`.
    pub fn cross_ratio(&self, q: VertexId, x: VertexId, y: VertexId, z: VertexId, w: VertexId) -> Result<f64> {
        let l = self.get(q)?;
        Ok(l.entry(x, z) + l.entry(y, w) - l.entry(x, w) - l.entry(y, z))
    }
}

/// `j_q(x, y)`: potential at `x` when a unit current enters at `y` and
/// leaves at the grounded point `q`.
pub fn j_function(graph: &WeightedGraph, q: Point, x: Point, y: Point) -> Result<f64> {
    let (refined, ids) = refine(graph, &[q, x, y])?;
    Ok(grounded_inverse(&refined, ids[0])?.entry(ids[1], ids[2]))
}

/// `r(x, y) = j_y(x, x)`.
pub fn effective_resistance(graph: &WeightedGraph, x: Point, y: Point) -> Result<f64> {
    let (refined, ids) = refine(graph, &[x, y])?;
    if ids[0] == ids[1] {
        return Ok(0.0);
    }
    Ok(grounded_inverse(&refined, ids[1])?.entry(ids[0], ids[0]))
}

/// `(x|y)_z = ½ (r(x,z) + r(y,z) − r(x,y))`, computed from resistances.
pub fn gromov_product(graph: &WeightedGraph, x: Point, y: Point, z: Point) -> Result<f64> {
    let (refined, ids) = refine(graph, &[x, y, z])?;
    let pot = Potentials::new(&refined)?;
    let (x, y, z) = (ids[0], ids[1], ids[2]);
    Ok(0.5 * (pot.resistance(x, z) + pot.resistance(y, z) - pot.resistance(x, y)))
}

/// `ξ(x,y,z,w) = j_q(x,z) + j_q(y,w) − j_q(x,w) − j_q(y,z)`, ground `q` the
/// first vertex. Antisymmetric in each pair, so its sign depends on the
/// order in which the caller lists the points.
pub fn cross_ratio(graph: &WeightedGraph, x: Point, y: Point, z: Point, w: Point) -> Result<f64> {
    let (refined, ids) = refine(graph, &[x, y, z, w])?;
    Ok(Potentials::new(&refined)?.cross_ratio(ids[0], ids[1], ids[2], ids[3]))
}

pub fn xi_matrix(graph: &WeightedGraph, orientation: &Orientation) -> Result<CrossRatioMatrix> {
    Ok(Potentials::new(graph)?.xi_matrix(orientation))
}

fn check_divisor(graph: &WeightedGraph, nu: &ZeroDivisor) -> Result<()> {
    if nu.len() != graph.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.vertex_count(),
            got: nu.len(),
        });
    }
    Ok(())
}

/// `⟨ν₁, ν₂⟩ = [ν₁]ᵀ L_q [ν₂]`.
pub fn energy_pairing(graph: &WeightedGraph, nu1: &ZeroDivisor, nu2: &ZeroDivisor) -> Result<f64> {
    check_divisor(graph, nu1)?;
    check_divisor(graph, nu2)?;
    Ok(Potentials::new(graph)?.energy(nu1, nu2))
}

/// Energy pairing of two mass-zero measures supported on arbitrary points.
pub fn energy_pairing_at_points(
    graph: &WeightedGraph,
    nu1: &[(Point, f64)],
    nu2: &[(Point, f64)],
    tol: &Tolerance,
) -> Result<f64> {
    let points: Vec<Point> = nu1.iter().chain(nu2).map(|(p, _)| *p).collect();
    let (refined, ids) = refine(graph, &points)?;
    let n = refined.vertex_count();
    let collect = |items: &[(Point, f64)], ids: &[VertexId]| {
        let mut masses = vec![0.0; n];
        for ((_, a), v) in items.iter().zip(ids) {
            masses[v.0] += a;
        }
        ZeroDivisor::new(masses, tol)
    };
    let first = collect(nu1, &ids[..nu1.len()])?;
    let second = collect(nu2, &ids[nu1.len()..])?;
    Ok(Potentials::new(&refined)?.energy(&first, &second))
}

/// `[ψ₁]ᵀ Q [ψ₂]`.
pub fn dirichlet_pairing(graph: &WeightedGraph, psi1: &[f64], psi2: &[f64]) -> Result<f64> {
    let n = graph.vertex_count();
    for psi in [psi1, psi2] {
        if psi.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: psi.len() });
        }
    }
    let q = laplacian_matrix(graph).into_inner();
    let a = DVector::from_column_slice(psi1);
    let b = DVector::from_column_slice(psi2);
    Ok(a.dot(&(q * b)))
}
