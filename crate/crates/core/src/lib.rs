//! Finite metric graphs treated as resistive networks.
//!
//! A [`WeightedGraph`] with edge lengths is read as a network of resistors
//! (length = resistance). From its Laplacian the crate computes potential
//! kernels `j_q(x, y)`, effective resistances, cross ratios and energy
//! pairings; the orthogonal projections of 1-chains onto cycles and cocycles;
//! exact rank-one updates for contracting an edge; and, for small graphs, an
//! exhaustive spanning-tree reference to check all of the above against.

pub mod error;
pub mod fixtures;
pub mod graph;
pub mod laplacian;
pub mod potentials;
pub mod projections;
pub mod random;
pub mod rayleigh;
pub mod spanning;
pub mod tolerance;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{
    boundary, chain_of_path, contract_edge, refine, subdivide, Contraction, Edge, EdgeId, EdgeImage, GraphSpec,
    OneChain, Orientation, PathSpec, Point, PointOnEdge, VertexId, WeightedGraph, ZeroDivisor, MIN_LENGTH,
};
pub use laplacian::{GeneralizedInverse, InverseKind};
pub use potentials::{
    cross_ratio, effective_resistance, energy_pairing, j_function, xi_matrix, CrossRatioMatrix, Potentials,
};
pub use projections::{projection_matrices, KirchhoffSolution, ProjectionPair};
pub use spanning::{enumerate_spanning_trees, SpanningTree, TreeEnsemble};
pub use tolerance::Tolerance;
