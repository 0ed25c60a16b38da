use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("graph is disconnected")]
    Disconnected,
    #[error("edge `{0}` is a self-loop")]
    SelfLoop(String),
    #[error("edge `{edge}` has length {length}, lengths must be at least {min}", min = crate::MIN_LENGTH)]
    NonpositiveLength { edge: String, length: f64 },
    #[error("a weighted graph needs at least two vertices and one edge")]
    TooFewVertices,
    #[error("duplicate vertex id `{0}`")]
    DuplicateVertex(String),
    #[error("duplicate edge id `{0}`")]
    DuplicateEdge(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("offset {offset} is not strictly inside edge `{edge}` of length {length}")]
    OffsetOutOfRange { edge: String, offset: f64, length: f64 },
    #[error("path breaks at step {step}: edge does not start where the previous one ended")]
    BrokenPath { step: usize },
    #[error("divisor has total mass {total}, expected zero")]
    MassNotZero { total: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("reduced Laplacian is singular")]
    SingularReducedLaplacian,
    #[error("graph has about {estimate:.3e} spanning trees, above the enumeration cap of {cap}")]
    TooManyTrees { estimate: f64, cap: usize },
    #[error("tree probability ratios disagree: w(T)/w(G) = {by_weight}, w'(T)/w'(G) = {by_coweight}")]
    RatioMismatch { by_weight: f64, by_coweight: f64 },
    #[error("edge set is not a spanning tree")]
    NotASpanningTree,
    #[error("edge `{edge}` has effective resistance {resistance:e} across it; rebuild the contracted graph instead")]
    DegeneratePivot { edge: String, resistance: f64 },
    #[error("malformed input: {0}")]
    Parse(String),
}
