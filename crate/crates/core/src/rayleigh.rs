//! Effect of short-circuiting an edge, computed from the uncontracted
//! network by rank-one corrections instead of rebuilding `G/e`.
//!
//! With `d = δ_{e⁺} − δ_{e⁻}` and `r = r(e⁻, e⁺)`, every pairing changes by
//! `⟨ν₁,ν₂⟩ ↦ ⟨ν₁,ν₂⟩ − ⟨ν₁,d⟩⟨d,ν₂⟩ / r`. The correction is a product of two
//! terms that both flip with the orientation of `e`, so it does not depend
//! on it.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{
    chain_of_path, refine, EdgeId, OneChain, Orientation, Point, PointOnEdge, VertexId, WeightedGraph,
    ZeroDivisor,
};
use crate::laplacian::edge_gram;
use crate::potentials::Potentials;

/// Pivots below this are treated as an already-shorted edge.
pub const MIN_PIVOT: f64 = 1e-12;

/// Rank-one update data for one edge of a fixed network.
pub struct RayleighContext<'g> {
    potentials: Potentials<'g>,
    tail: VertexId,
    head: VertexId,
    pivot: f64,
}

impl<'g> RayleighContext<'g> {
    pub fn new(graph: &'g WeightedGraph, e: EdgeId) -> Result<Self> {
        graph.check_edge(e)?;
        Self::with_potentials(Potentials::new(graph)?, e)
    }

    pub fn with_potentials(potentials: Potentials<'g>, e: EdgeId) -> Result<Self> {
        let edge = potentials.graph().edge(e);
        let (tail, head) = (edge.u, edge.v);
        let pivot = potentials.resistance(tail, head);
        if pivot < MIN_PIVOT {
            return Err(Error::DegeneratePivot {
                edge: edge.label.clone(),
                resistance: pivot,
            });
        }
        Ok(Self { potentials, tail, head, pivot })
    }

    pub fn potentials(&self) -> &Potentials<'g> {
        &self.potentials
    }

    /// `r(e⁻, e⁺)` before contraction.
    pub fn pivot(&self) -> f64 {
        self.pivot
    }

    /// `ξ(x, y, e⁻, e⁺)`.
    fn against_edge(&self, x: VertexId, y: VertexId) -> f64 {
        self.potentials.cross_ratio(x, y, self.tail, self.head)
    }

    pub fn energy(&self, nu1: &ZeroDivisor, nu2: &ZeroDivisor) -> f64 {
        let a = self.potentials.energy_against_dipole(nu1, self.head, self.tail);
        let b = self.potentials.energy_against_dipole(nu2, self.head, self.tail);
        self.potentials.energy(nu1, nu2) - a * b / self.pivot
    }

    pub fn cross_ratio(&self, x: VertexId, y: VertexId, z: VertexId, w: VertexId) -> f64 {
        self.potentials.cross_ratio(x, y, z, w) - self.against_edge(x, y) * self.against_edge(z, w) / self.pivot
    }

    pub fn j(&self, z: VertexId, x: VertexId, y: VertexId) -> f64 {
        self.potentials.j(z, x, y) - self.against_edge(x, z) * self.against_edge(y, z) / self.pivot
    }

    pub fn resistance(&self, x: VertexId, y: VertexId) -> f64 {
        let c = self.against_edge(x, y);
        // exact cancellation matters when {x, y} = {e⁻, e⁺}
        (self.potentials.resistance(x, y) - c * c / self.pivot).max(0.0)
    }
}

/// Points inside `e` all become the merged point, as does `e⁻`.
fn resolve(graph: &WeightedGraph, e: EdgeId, p: Point) -> Point {
    match p {
        Point::OnEdge(PointOnEdge { edge, .. }) if edge == e => Point::Vertex(graph.edge(e).u),
        other => other,
    }
}

/// Refines `graph` at the query points (with those on `e` moved to `e⁻`),
/// then evaluates `f` on the refined network. Refinement keeps `e` intact.
fn at_points<T>(
    graph: &WeightedGraph,
    e: EdgeId,
    points: &[Point],
    f: impl FnOnce(&RayleighContext<'_>, &[VertexId]) -> T,
) -> Result<T> {
    graph.check_edge(e)?;
    let points: Vec<Point> = points.iter().map(|&p| resolve(graph, e, p)).collect();
    let (refined, ids) = refine(graph, &points)?;
    let ctx = RayleighContext::new(&refined, e)?;
    Ok(f(&ctx, &ids))
}

/// `⟨ν₁, ν₂⟩` on `Γ/e` from pairings on `Γ`.
pub fn contracted_energy_pairing(
    graph: &WeightedGraph,
    e: EdgeId,
    nu1: &ZeroDivisor,
    nu2: &ZeroDivisor,
) -> Result<f64> {
    for nu in [nu1, nu2] {
        if nu.len() != graph.vertex_count() {
            return Err(Error::DimensionMismatch { expected: graph.vertex_count(), got: nu.len() });
        }
    }
    Ok(RayleighContext::new(graph, e)?.energy(nu1, nu2))
}

pub fn contracted_cross_ratio(graph: &WeightedGraph, e: EdgeId, x: Point, y: Point, z: Point, w: Point) -> Result<f64> {
    at_points(graph, e, &[x, y, z, w], |ctx, v| ctx.cross_ratio(v[0], v[1], v[2], v[3]))
}

pub fn contracted_j(graph: &WeightedGraph, e: EdgeId, z: Point, x: Point, y: Point) -> Result<f64> {
    at_points(graph, e, &[z, x, y], |ctx, v| ctx.j(v[0], v[1], v[2]))
}

pub fn contracted_resistance(graph: &WeightedGraph, e: EdgeId, x: Point, y: Point) -> Result<f64> {
    at_points(graph, e, &[x, y], |ctx, v| ctx.resistance(v[0], v[1]))
}

/// `Ξ′ = Ξ − (Ξ[e])(Ξ[e])ᵀ / Ξ_ee`, kept exactly symmetric.
fn rank_one_downdate(xi: &DMatrix<f64>, e: usize) -> (DMatrix<f64>, DVector<f64>, f64) {
    let column = xi.column(e).into_owned();
    let pivot = xi[(e, e)];
    let mut updated = xi - &column * column.transpose() / pivot;
    let sym = (&updated + updated.transpose()) * 0.5;
    updated.copy_from(&sym);
    (updated, column, pivot)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionUpdate {
    pub contracted_edge: EdgeId,
    /// `r(e⁻, e⁺)` before contraction.
    pub pivot_resistance: f64,
    /// `Ξ[e]`.
    pub correction: DVector<f64>,
    /// `S = D⁻¹Ξ − (1/r) D⁻¹ (Ξ[e])(Ξ[e])ᵀ`.
    pub updated: DMatrix<f64>,
    /// `D·S`, i.e. `Ξ` after the rank-one downdate.
    pub xi: DMatrix<f64>,
}

impl ContractionUpdate {
    /// `D·S` with the row and column of the contracted edge removed.
    pub fn surviving_block(&self) -> DMatrix<f64> {
        self.xi.clone().remove_row(self.contracted_edge.0).remove_column(self.contracted_edge.0)
    }
}

pub fn contracted_xi_matrix(graph: &WeightedGraph, orientation: &Orientation, e: EdgeId) -> Result<ContractionUpdate> {
    graph.check_edge(e)?;
    let xi = Potentials::new(graph)?.xi_matrix(orientation).matrix;
    let (updated_xi, correction, pivot) = rank_one_downdate(&xi, e.0);
    if pivot < MIN_PIVOT {
        return Err(Error::DegeneratePivot {
            edge: graph.edge_label(e).to_string(),
            resistance: pivot,
        });
    }
    let mut s = updated_xi.clone();
    for (i, mut row) in s.row_iter_mut().enumerate() {
        row /= graph.length(EdgeId(i));
    }
    Ok(ContractionUpdate {
        contracted_edge: e,
        pivot_resistance: pivot,
        correction,
        updated: s,
        xi: updated_xi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Query {
    Resistance(VertexId, VertexId),
    CrossRatio(VertexId, VertexId, VertexId, VertexId),
    /// `j_z(x, y)` as `(z, x, y)`.
    J(VertexId, VertexId, VertexId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceResult {
    pub edges: Vec<EdgeId>,
    /// `r(e⁻, e⁺)` at the moment each edge was contracted.
    pub pivots: Vec<f64>,
    /// Row 0 is the uncontracted network; row `k` follows the `k`-th contraction.
    pub answers: Vec<Vec<f64>>,
}

impl SequenceResult {
    pub fn final_answers(&self) -> &[f64] {
        self.answers.last().expect("base row is always present")
    }
}

/// Contracts `edges` in order by repeated downdates of `Ξ` in the original
/// basis, answering every query after each step. Queries are evaluated as
/// `γ₁ᵀ Ξ γ₂` for paths `γ` of the original graph, which is what the
/// downdated form pairs on the contracted network.
pub fn contraction_sequence(graph: &WeightedGraph, edges: &[EdgeId], queries: &[Query]) -> Result<SequenceResult> {
    for &e in edges {
        graph.check_edge(e)?;
    }
    for q in queries {
        let vs: &[VertexId] = match q {
            Query::Resistance(x, y) => &[*x, *y],
            Query::CrossRatio(x, y, z, w) => &[*x, *y, *z, *w],
            Query::J(z, x, y) => &[*z, *x, *y],
        };
        for &v in vs {
            graph.check_vertex(v)?;
        }
    }
    let orientation = graph.default_orientation();
    let mut xi = Potentials::new(graph)?.xi_matrix(&orientation).matrix;

    // chain with boundary δ_to − δ_from
    let path_chain = |from: VertexId, to: VertexId| -> DVector<f64> {
        let chain = chain_of_path(graph, &orientation, &graph.shortest_path(from, to)).expect("connected");
        DVector::from_column_slice(chain.coeffs())
    };
    let pair = |xi: &DMatrix<f64>, x: VertexId, y: VertexId, z: VertexId, w: VertexId| {
        path_chain(y, x).dot(&(xi * path_chain(w, z)))
    };
    let answer = |xi: &DMatrix<f64>| -> Vec<f64> {
        queries
            .iter()
            .map(|q| match *q {
                Query::Resistance(x, y) => pair(xi, x, y, x, y).max(0.0),
                Query::CrossRatio(x, y, z, w) => pair(xi, x, y, z, w),
                Query::J(z, x, y) => pair(xi, x, z, y, z),
            })
            .collect()
    };

    let mut merged: Vec<usize> = (0..graph.vertex_count()).collect();
    let mut contracted = vec![false; graph.edge_count()];
    let mut answers = vec![answer(&xi)];
    let mut pivots = Vec::with_capacity(edges.len());
    for &e in edges {
        let (next, _, pivot) = rank_one_downdate(&xi, e.0);
        if pivot < MIN_PIVOT {
            return Err(Error::DegeneratePivot {
                edge: graph.edge_label(e).to_string(),
                resistance: pivot,
            });
        }
        let edge = graph.edge(e);
        let (from, to) = (merged[edge.v.0], merged[edge.u.0]);
        for m in merged.iter_mut() {
            if *m == from {
                *m = to;
            }
        }
        contracted[e.0] = true;
        let collapsed = merged.iter().all(|&m| m == merged[0]);
        if collapsed && contracted.iter().all(|&c| c) {
            return Err(Error::TooFewVertices);
        }
        xi = next;
        pivots.push(pivot);
        answers.push(answer(&xi));
    }
    Ok(SequenceResult { edges: edges.to_vec(), pivots, answers })
}

/// `D⁻¹ Ξ` without the update, for comparison with [`ContractionUpdate::updated`].
pub fn cocycle_matrix(graph: &WeightedGraph, orientation: &Orientation) -> Result<DMatrix<f64>> {
    let xi = Potentials::new(graph)?.xi_matrix(orientation).matrix;
    Ok(edge_gram(graph, orientation).inverse_matrix() * xi)
}

/// Image in `G/e` of each oriented edge of `G`, as columns.
pub fn pushforward_matrix(
    contraction: &crate::graph::Contraction,
    graph: &WeightedGraph,
    orientation: &Orientation,
) -> DMatrix<f64> {
    let m = graph.edge_count();
    let mut out = DMatrix::zeros(contraction.graph.edge_count(), m);
    for i in 0..m {
        let image = contraction.push_chain(orientation, &OneChain::edge(m, EdgeId(i), 1.0));
        out.set_column(i, &DVector::from_column_slice(image.coeffs()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::contract_edge;
    use crate::laplacian::max_abs;
    use crate::potentials::{cross_ratio, effective_resistance, j_function, xi_matrix};

    fn v(g: &WeightedGraph, label: &str) -> VertexId {
        g.vertex(label).unwrap()
    }

    fn p(g: &WeightedGraph, label: &str) -> Point {
        Point::Vertex(v(g, label))
    }

    #[test]
    fn energy_examples() {
        let sq = fixtures::square_with_diagonal();
        let diag = sq.edge_by_label("e5").unwrap();
        let (d, b, a, c) = (v(&sq, "D"), v(&sq, "B"), v(&sq, "A"), v(&sq, "C"));
        let n = sq.vertex_count();
        let dipole = ZeroDivisor::dipole(n, b, d);
        assert!(contracted_energy_pairing(&sq, diag, &dipole, &dipole).unwrap().abs() < 1e-12);
        let ac = ZeroDivisor::dipole(n, a, c);
        assert!((contracted_energy_pairing(&sq, diag, &ac, &ac).unwrap() - 2.0).abs() < 1e-12);
        let short = ZeroDivisor::zero(2);
        assert!(matches!(
            contracted_energy_pairing(&sq, diag, &short, &ac),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cross_ratio_examples() {
        let sq = fixtures::square_with_diagonal();
        let diag = sq.edge_by_label("e5").unwrap();
        let (d, b, a, c) = (p(&sq, "D"), p(&sq, "B"), p(&sq, "A"), p(&sq, "C"));
        assert!((contracted_cross_ratio(&sq, diag, a, c, a, c).unwrap() - 2.0).abs() < 1e-12);
        for (z, w) in [(a, c), (a, b), (c, d)] {
            assert!(contracted_cross_ratio(&sq, diag, d, b, z, w).unwrap().abs() < 1e-12);
        }
        let model = contract_edge(&sq, diag).unwrap();
        let direct = cross_ratio(&model.graph, model.map_point(a), model.map_point(d), model.map_point(c), model.map_point(b)).unwrap();
        assert!((contracted_cross_ratio(&sq, diag, a, d, c, b).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn j_examples() {
        let sq = fixtures::square_with_diagonal();
        let diag = sq.edge_by_label("e5").unwrap();
        let (d, a, c) = (p(&sq, "D"), p(&sq, "A"), p(&sq, "C"));
        assert!(contracted_j(&sq, diag, a, a, c).unwrap().abs() < 1e-12);
        let model = contract_edge(&sq, diag).unwrap();
        let direct = j_function(&model.graph, model.map_point(d), model.map_point(a), model.map_point(c)).unwrap();
        assert!((contracted_j(&sq, diag, d, a, c).unwrap() - direct).abs() < 1e-12);

        // contracting the leaf edge o–x of the tripod
        let t = fixtures::tripod(1.0, 2.0, 3.0);
        let leaf = t.edge_by_label("a").unwrap();
        let (x, y, z) = (p(&t, "x"), p(&t, "y"), p(&t, "z"));
        assert!((contracted_resistance(&t, leaf, x, y).unwrap() - 2.0).abs() < 1e-12);
        assert!((contracted_j(&t, leaf, z, x, y).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn resistance_examples() {
        let sq = fixtures::square_with_diagonal();
        let diag = sq.edge_by_label("e5").unwrap();
        assert!(contracted_resistance(&sq, diag, p(&sq, "D"), p(&sq, "B")).unwrap().abs() < 1e-12);
        assert!((contracted_resistance(&sq, diag, p(&sq, "A"), p(&sq, "C")).unwrap() - 2.0).abs() < 1e-12);

        let series = fixtures::path(&[1.5, 2.5]);
        let (x, y) = (p(&series, "p0"), p(&series, "p2"));
        assert!((contracted_resistance(&series, EdgeId(0), x, y).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn points_inside_the_contracted_edge() {
        let sq = fixtures::square_with_diagonal();
        let diag = sq.edge_by_label("e5").unwrap();
        let mid = Point::OnEdge(PointOnEdge { edge: diag, offset: 0.3 });
        let a = p(&sq, "A");
        let expected = contracted_resistance(&sq, diag, p(&sq, "D"), a).unwrap();
        assert!((contracted_resistance(&sq, diag, mid, a).unwrap() - expected).abs() < 1e-12);
        // points on other edges survive contraction unchanged in position
        let side = Point::OnEdge(PointOnEdge { edge: sq.edge_by_label("e2").unwrap(), offset: 0.5 });
        let model = contract_edge(&sq, diag).unwrap();
        let direct = effective_resistance(&model.graph, model.map_point(side), model.map_point(a)).unwrap();
        assert!((contracted_resistance(&sq, diag, side, a).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn orientation_does_not_matter() {
        let sq = fixtures::square_with_diagonal();
        let flipped = Orientation::from_flips(vec![true; 5]);
        for e in sq.edge_ids() {
            let a = contracted_xi_matrix(&sq, &sq.default_orientation(), e).unwrap();
            let b = contracted_xi_matrix(&sq, &flipped, e).unwrap();
            // every entry flips twice
            assert!(max_abs(&(&a.xi - &b.xi)) < 1e-12);
        }
    }

    fn check_against_rebuild(g: &WeightedGraph, o: &Orientation, e: EdgeId) {
        let update = contracted_xi_matrix(g, o, e).unwrap();
        let model = contract_edge(g, e).unwrap();
        let rebuilt = xi_matrix(&model.graph, &model.graph.default_orientation()).unwrap().matrix;
        let push = pushforward_matrix(&model, g, o);
        let pulled = push.transpose() * rebuilt * &push;
        assert!(max_abs(&(&update.xi - &pulled)) < 1e-9, "{}", update.xi.clone() - pulled);
        assert!(update.xi.row(e.0).iter().all(|x| x.abs() < 1e-12));
        assert!(max_abs(&(&update.updated * &update.updated - &update.updated)) < 1e-9);
        let rank = |m: &DMatrix<f64>| m.clone().svd(false, false).singular_values.iter().filter(|s| **s > 1e-9).count();
        let before = xi_matrix(g, o).unwrap().matrix;
        assert_eq!(rank(&update.xi) + 1, rank(&before));
    }

    #[test]
    fn xi_update_matches_rebuild() {
        let sq = fixtures::square_with_diagonal();
        for e in sq.edge_ids() {
            check_against_rebuild(&sq, &sq.default_orientation(), e);
            check_against_rebuild(&sq, &Orientation::from_flips(vec![false, true, true, false, true]), e);
        }
        let pair = fixtures::parallel_pair(1.0, 2.0);
        check_against_rebuild(&pair, &pair.default_orientation(), EdgeId(0));
        let update = contracted_xi_matrix(&pair, &pair.default_orientation(), EdgeId(0)).unwrap();
        // the surviving edge is now a loop of length 2: no cross ratio left
        assert!(update.surviving_block()[(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn degenerate_pivot_after_shorting() {
        let pair = fixtures::parallel_pair(1.0, 2.0);
        let err = contraction_sequence(&pair, &[EdgeId(0), EdgeId(1)], &[]).unwrap_err();
        assert!(matches!(err, Error::DegeneratePivot { .. }));
    }

    #[test]
    fn sequences() {
        let sq = fixtures::square_with_diagonal();
        let (a, b, c, d) = (v(&sq, "A"), v(&sq, "B"), v(&sq, "C"), v(&sq, "D"));
        let queries = [Query::Resistance(a, c), Query::Resistance(d, b), Query::J(d, a, c), Query::CrossRatio(a, b, c, d)];
        let base = contraction_sequence(&sq, &[], &queries).unwrap();
        assert_eq!(base.answers.len(), 1);
        assert!((base.final_answers()[0] - 2.0).abs() < 1e-12);
        assert!((base.final_answers()[1] - 2.0 / 3.0).abs() < 1e-12);

        let diag = sq.edge_by_label("e5").unwrap();
        let side = sq.edge_by_label("e1").unwrap();
        let run = contraction_sequence(&sq, &[diag, side], &queries).unwrap();
        let first = contract_edge(&sq, diag).unwrap();
        let side_after = surviving(&first, side);
        let second = contract_edge(&first.graph, side_after).unwrap();
        let map = |x: VertexId| second.map_vertex(first.map_vertex(x));
        let pot = Potentials::new(&second.graph).unwrap();
        let expected = [
            pot.resistance(map(a), map(c)),
            pot.resistance(map(d), map(b)),
            pot.j(map(d), map(a), map(c)),
            pot.cross_ratio(map(a), map(b), map(c), map(d)),
        ];
        for (got, want) in run.final_answers().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }

        // contracting a spanning tree of a graph with cycles identifies everything
        let tree = [sq.edge_by_label("e1").unwrap(), sq.edge_by_label("e2").unwrap(), sq.edge_by_label("e3").unwrap()];
        let run = contraction_sequence(&sq, &tree, &queries[..2]).unwrap();
        assert!(run.final_answers().iter().all(|r| r.abs() < 1e-12));

        // a tree network collapses to a single point with nothing left
        let path = fixtures::path(&[1.0, 1.0]);
        assert_eq!(contraction_sequence(&path, &[EdgeId(0), EdgeId(1)], &[]), Err(Error::TooFewVertices));
    }

    fn surviving(c: &crate::graph::Contraction, e: EdgeId) -> EdgeId {
        match c.edge_map[e.0] {
            crate::graph::EdgeImage::Edge(f) => f,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn monotone() {
        let sq = fixtures::square_with_diagonal();
        let pot = Potentials::new(&sq).unwrap();
        for e in sq.edge_ids() {
            let ctx = RayleighContext::new(&sq, e).unwrap();
            for x in sq.vertex_ids() {
                for y in sq.vertex_ids() {
                    assert!(ctx.resistance(x, y) <= pot.resistance(x, y) + 1e-12);
                }
            }
        }
        let _ = cocycle_matrix(&sq, &sq.default_orientation()).unwrap();
    }
}
