//! Laplacian, incidence and edge-Gram matrices, generalized inverses of the
//! Laplacian and the discrete Dirichlet problem.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::graph::{Orientation, VertexId, WeightedGraph, ZeroDivisor};

/// Condition estimates of `Q_q` above this are reported with results.
pub const ILL_CONDITIONED: f64 = 1e12;

/// `n × n` Laplacian `Q`: `q_ij = −Σ 1/ℓ(e)` over edges joining `v_i, v_j`,
/// diagonal chosen so rows sum to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix(DMatrix<f64>);

/// `n × m` incidence matrix: `+1` at `e⁺`, `−1` at `e⁻`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix(DMatrix<f64>);

/// Diagonal `D = diag(ℓ(e₁), …, ℓ(e_m))`, the Gram matrix of `[·,·]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeGram(DVector<f64>);

macro_rules! matrix_newtype {
    ($name:ident) => {
        impl $name {
            pub fn matrix(&self) -> &DMatrix<f64> {
                &self.0
            }

            pub fn into_inner(self) -> DMatrix<f64> {
                self.0
            }
        }
    };
}

matrix_newtype!(LaplacianMatrix);
matrix_newtype!(IncidenceMatrix);

impl EdgeGram {
    pub fn lengths(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.0)
    }

    pub fn inverse_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.0.map(|l| 1.0 / l))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InverseKind {
    /// `L_q`: inverse of the reduced Laplacian padded with zeros at `q`.
    Grounded(VertexId),
    /// Average of all grounded inverses.
    Averaged,
    /// The Moore–Penrose pseudoinverse `Q⁺`.
    MoorePenrose,
}

/// An `L` with `Q·L·Q = Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedInverse {
    pub matrix: DMatrix<f64>,
    pub kind: InverseKind,
    /// 1-norm condition estimate of the reduced Laplacian(s) involved.
    pub condition: f64,
}

impl GeneralizedInverse {
    pub fn ill_conditioned(&self) -> bool {
        self.condition > ILL_CONDITIONED
    }

    pub fn entry(&self, p: VertexId, v: VertexId) -> f64 {
        self.matrix[(p.0, v.0)]
    }

    /// `[ν₁]ᵀ · L · [ν₂]`.
    pub fn pair(&self, nu1: &ZeroDivisor, nu2: &ZeroDivisor) -> f64 {
        let a = DVector::from_column_slice(nu1.masses());
        let b = DVector::from_column_slice(nu2.masses());
        a.dot(&(&self.matrix * b))
    }
}

pub fn laplacian_matrix(graph: &WeightedGraph) -> LaplacianMatrix {
    let n = graph.vertex_count();
    let mut q = DMatrix::zeros(n, n);
    for edge in graph.edges() {
        let c = 1.0 / edge.length;
        let (i, j) = (edge.u.0, edge.v.0);
        q[(i, j)] -= c;
        q[(j, i)] -= c;
        q[(i, i)] += c;
        q[(j, j)] += c;
    }
    LaplacianMatrix(q)
}

pub fn incidence_matrix(graph: &WeightedGraph, orientation: &Orientation) -> IncidenceMatrix {
    let mut b = DMatrix::zeros(graph.vertex_count(), graph.edge_count());
    for e in graph.edge_ids() {
        b[(orientation.head(graph, e).0, e.0)] = 1.0;
        b[(orientation.tail(graph, e).0, e.0)] = -1.0;
    }
    IncidenceMatrix(b)
}

/// Edge lengths in edge order; independent of the orientation.
pub fn edge_gram(graph: &WeightedGraph, _orientation: &Orientation) -> EdgeGram {
    EdgeGram(DVector::from_iterator(
        graph.edge_count(),
        graph.edges().iter().map(|e| e.length),
    ))
}

/// Cholesky factor of the reduced Laplacian `Q_q`.
pub struct ReducedLaplacian {
    ground: VertexId,
    reduced: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
}

impl ReducedLaplacian {
    pub fn new(graph: &WeightedGraph, q: VertexId) -> Result<Self> {
        graph.check_vertex(q)?;
        let reduced = laplacian_matrix(graph)
            .into_inner()
            .remove_row(q.0)
            .remove_column(q.0);
        let factor = Cholesky::new(reduced.clone()).ok_or(Error::SingularReducedLaplacian)?;
        Ok(Self {
            ground: q,
            reduced,
            factor,
        })
    }

    pub fn ground(&self) -> VertexId {
        self.ground
    }

    /// `det(Q_q)`.
    pub fn determinant(&self) -> f64 {
        self.factor.determinant()
    }

    /// Solves `Q ψ = ν` with `ψ(q) = 0`.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let q = self.ground.0;
        let reduced_rhs = DVector::from_iterator(
            rhs.len() - 1,
            rhs.iter().enumerate().filter(|(i, _)| *i != q).map(|(_, v)| *v),
        );
        let x = self.factor.solve(&reduced_rhs);
        let mut out = Vec::with_capacity(rhs.len());
        out.extend(x.iter().take(q).copied());
        out.push(0.0);
        out.extend(x.iter().skip(q).copied());
        out
    }

    pub fn grounded_inverse(&self) -> GeneralizedInverse {
        let q = self.ground.0;
        let inv = self.factor.inverse();
        let condition = one_norm(&self.reduced) * one_norm(&inv);
        let inv = (&inv + inv.transpose()) * 0.5;
        let n = inv.nrows() + 1;
        let matrix = DMatrix::from_fn(n, n, |i, j| {
            if i == q || j == q {
                0.0
            } else {
                inv[(i - usize::from(i > q), j - usize::from(j > q))]
            }
        });
        GeneralizedInverse {
            matrix,
            kind: InverseKind::Grounded(self.ground),
            condition,
        }
    }
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `L_q`, whose entries are `j_q(p, v)`.
pub fn grounded_inverse(graph: &WeightedGraph, q: VertexId) -> Result<GeneralizedInverse> {
    Ok(ReducedLaplacian::new(graph, q)?.grounded_inverse())
}

/// `(1/n) Σ_q L_q`.
///
/// This is a generalized inverse, but not the Moore–Penrose inverse: its rows
/// do not sum to zero. [`moore_penrose_inverse`] gives `Q⁺`.
pub fn pseudo_inverse(graph: &WeightedGraph) -> Result<GeneralizedInverse> {
    let n = graph.vertex_count();
    let mut sum = DMatrix::zeros(n, n);
    let mut condition: f64 = 0.0;
    for q in graph.vertex_ids() {
        let lq = grounded_inverse(graph, q)?;
        condition = condition.max(lq.condition);
        sum += lq.matrix;
    }
    Ok(GeneralizedInverse {
        matrix: sum / n as f64,
        kind: InverseKind::Averaged,
        condition,
    })
}

/// `Q⁺ = Π L_q Π` with `Π = I − J/n` the projection onto mass-zero vectors.
pub fn moore_penrose_inverse(graph: &WeightedGraph) -> Result<GeneralizedInverse> {
    let n = graph.vertex_count();
    let lq = grounded_inverse(graph, VertexId(0))?;
    let centre = DMatrix::from_fn(n, n, |i, j| f64::from(u8::from(i == j)) - 1.0 / n as f64);
    let matrix = &centre * &lq.matrix * &centre;
    Ok(GeneralizedInverse {
        matrix: (&matrix + matrix.transpose()) * 0.5,
        kind: InverseKind::MoorePenrose,
        condition: lq.condition,
    })
}

/// `ψ` with `Δψ = ν` and `ψ(q) = 0`, i.e. `ψ = Σ a_v j_q(·, v)`.
pub fn solve_dirichlet(graph: &WeightedGraph, nu: &ZeroDivisor, q: VertexId) -> Result<Vec<f64>> {
    if nu.len() != graph.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.vertex_count(),
            got: nu.len(),
        });
    }
    Ok(ReducedLaplacian::new(graph, q)?.solve(nu.masses()))
}

/// `ψ ↦ Q[ψ]`, the combinatorial Laplacian of a vertex function.
pub fn apply_laplacian(graph: &WeightedGraph, psi: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; graph.vertex_count()];
    for edge in graph.edges() {
        let flow = (psi[edge.u.0] - psi[edge.v.0]) / edge.length;
        out[edge.u.0] += flow;
        out[edge.v.0] -= flow;
    }
    out
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::tolerance::Tolerance;

    fn assert_matrix(actual: &DMatrix<f64>, expected: &[&[f64]], tol: f64) {
        assert_eq!(actual.nrows(), expected.len());
        for (i, row) in expected.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert!((actual[(i, j)] - v).abs() <= tol, "({i},{j}): {} vs {v}", actual[(i, j)]);
            }
        }
    }

    #[test]
    fn laplacian_examples() {
        assert_matrix(laplacian_matrix(&fixtures::k2(5.0)).matrix(), &[&[0.2, -0.2], &[-0.2, 0.2]], 1e-15);
        assert_matrix(
            laplacian_matrix(&fixtures::parallel_pair(1.0, 2.0)).matrix(),
            &[&[1.5, -1.5], &[-1.5, 1.5]],
            1e-15,
        );
        let g = fixtures::square_with_diagonal();
        let q = laplacian_matrix(&g).into_inner();
        let (a, b, c, d) = (0, 1, 2, 3);
        assert_eq!(q[(d, b)], -1.0);
        assert_eq!(q[(a, b)], -0.5);
        assert_eq!(q[(a, c)], 0.0);
        assert_eq!(q[(d, d)], 2.0);
        assert_eq!(q[(a, a)], 1.0);
        for row in q.row_iter() {
            assert!(row.sum().abs() < 1e-15);
        }
    }

    #[test]
    fn incidence_factorizes_laplacian() {
        let k2 = fixtures::k2(5.0);
        let b = incidence_matrix(&k2, &k2.default_orientation());
        assert_matrix(b.matrix(), &[&[-1.0], &[1.0]], 0.0);
        for g in [fixtures::triangle(1.0, 2.0, 3.0), fixtures::square_with_diagonal()] {
            let o = g.default_orientation();
            let b = incidence_matrix(&g, &o).into_inner();
            for col in b.column_iter() {
                assert_eq!(col.iter().filter(|&&x| x == 1.0).count(), 1);
                assert_eq!(col.iter().filter(|&&x| x == -1.0).count(), 1);
            }
            let d_inv = edge_gram(&g, &o).inverse_matrix();
            let q = laplacian_matrix(&g).into_inner();
            assert!(max_abs(&(&b * d_inv * b.transpose() - q)) < 1e-12);
        }
    }

    #[test]
    fn edge_gram_examples() {
        let g = fixtures::square_with_diagonal();
        let d = edge_gram(&g, &g.default_orientation());
        assert_eq!(d.lengths().as_slice(), &[2.0, 2.0, 2.0, 2.0, 1.0]);
        let t = fixtures::triangle(1.0, 1.0, 1.0);
        assert_eq!(edge_gram(&t, &t.default_orientation()).to_matrix(), DMatrix::identity(3, 3));
    }

    #[test]
    fn grounded_inverse_examples() {
        let k2 = fixtures::k2(5.0);
        let l = grounded_inverse(&k2, VertexId(0)).unwrap();
        assert_matrix(&l.matrix, &[&[0.0, 0.0], &[0.0, 5.0]], 1e-12);

        let tri = fixtures::tripod(1.0, 2.0, 3.0);
        let z = tri.vertex("z").unwrap();
        let l = grounded_inverse(&tri, z).unwrap();
        let (x, y) = (tri.vertex("x").unwrap(), tri.vertex("y").unwrap());
        assert!((l.entry(x, y) - 3.0).abs() < 1e-12);

        let sq = fixtures::square_with_diagonal();
        let (b, d) = (sq.vertex("B").unwrap(), sq.vertex("D").unwrap());
        let l = grounded_inverse(&sq, d).unwrap();
        assert!((l.entry(b, b) - 2.0 / 3.0).abs() < 1e-12);
        assert!(!l.ill_conditioned());
    }

    #[test]
    fn grounded_inverse_identities() {
        let g = fixtures::square_with_diagonal();
        let q = laplacian_matrix(&g).into_inner();
        let n = g.vertex_count();
        for ground in g.vertex_ids() {
            let l = grounded_inverse(&g, ground).unwrap().matrix;
            // Q L_q = I + R_q, R_q = −1 across row q
            let mut expected = DMatrix::identity(n, n);
            for j in 0..n {
                expected[(ground.0, j)] -= 1.0;
            }
            assert!(max_abs(&(&q * &l - expected)) < 1e-12);
            assert!(max_abs(&(&q * &l * &q - &q)) < 1e-12);
            for p in 0..n {
                for v in 0..n {
                    assert_eq!(l[(p, v)], l[(v, p)]);
                    assert!(l[(p, v)] >= -1e-12 && l[(p, v)] <= l[(p, p)] + 1e-12);
                }
            }
        }
    }

    #[test]
    fn averaged_inverse_is_generalized_but_not_moore_penrose() {
        let k2 = fixtures::k2(1.0);
        let q = laplacian_matrix(&k2).into_inner();
        let avg = pseudo_inverse(&k2).unwrap();
        assert!(max_abs(&(&q * &avg.matrix * &q - &q)) < 1e-12);
        assert_matrix(&avg.matrix, &[&[0.5, 0.0], &[0.0, 0.5]], 1e-12);

        let mp = moore_penrose_inverse(&k2).unwrap();
        assert_matrix(&mp.matrix, &[&[0.25, -0.25], &[-0.25, 0.25]], 1e-12);

        let g = fixtures::square_with_diagonal();
        let q = laplacian_matrix(&g).into_inner();
        let avg = pseudo_inverse(&g).unwrap().matrix;
        assert_eq!(avg, avg.transpose());
        let mp = moore_penrose_inverse(&g).unwrap().matrix;
        // the four Penrose conditions
        assert!(max_abs(&(&q * &mp * &q - &q)) < 1e-12);
        assert!(max_abs(&(&mp * &q * &mp - &mp)) < 1e-12);
        assert!(max_abs(&((&q * &mp) - (&q * &mp).transpose())) < 1e-12);
        assert!(max_abs(&((&mp * &q) - (&mp * &q).transpose())) < 1e-12);
    }

    #[test]
    fn dirichlet_examples() {
        let tol = Tolerance::default();
        let k2 = fixtures::k2(5.0);
        let psi = solve_dirichlet(&k2, &ZeroDivisor::zero(2), VertexId(0)).unwrap();
        assert_eq!(psi, vec![0.0, 0.0]);
        let nu = ZeroDivisor::dipole(2, VertexId(1), VertexId(0));
        let psi = solve_dirichlet(&k2, &nu, VertexId(0)).unwrap();
        assert_eq!(psi[0], 0.0);
        assert!((psi[1] - 5.0).abs() < 1e-12);

        let sq = fixtures::square_with_diagonal();
        let nu = ZeroDivisor::from_labels(&sq, &[("B", 1.0), ("D", -1.0)], &tol).unwrap();
        let d = sq.vertex("D").unwrap();
        let psi = solve_dirichlet(&sq, &nu, d).unwrap();
        assert!((psi[sq.vertex("B").unwrap().0] - 2.0 / 3.0).abs() < 1e-12);
        let residual = apply_laplacian(&sq, &psi);
        for (r, a) in residual.iter().zip(nu.masses()) {
            assert!((r - a).abs() < 1e-9);
        }
        assert!(solve_dirichlet(&sq, &ZeroDivisor::zero(3), d).is_err());
    }

    #[test]
    fn matrix_tree_determinant_small() {
        let r = ReducedLaplacian::new(&fixtures::triangle(1.0, 1.0, 1.0), VertexId(2)).unwrap();
        assert!((r.determinant() - 3.0).abs() < 1e-12);
        let r = ReducedLaplacian::new(&fixtures::k2(5.0), VertexId(0)).unwrap();
        assert!((r.determinant() - 0.2).abs() < 1e-15);
    }
}
