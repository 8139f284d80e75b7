use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid convex function: {0}")]
    InvalidConvex(String),

    #[error("empty dual grid")]
    EmptyGrid,

    #[error("boundary subdifferential unavailable at {0:?}")]
    BoundarySubdifferential(Vec<f64>),

    #[error("conjugate lacks minimal linear growth at slope {0}")]
    NoLinearGrowth(f64),

    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("non-ergodic transition matrix")]
    NonErgodic,

    #[error("alphabet mismatch: {0} vs {1} symbols")]
    AlphabetMismatch(usize, usize),

    #[error("word of length {len} is shorter than potential memory {memory}")]
    WordTooShort { len: usize, memory: usize },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("no self-consistent optimizer found: {0}")]
    NoSelfConsistentOptimizer(String),

    #[error("multivalued decision rule at y+ = {0:?}")]
    MultivaluedDecision(Vec<f64>),

    #[error("Δ-functional requires explicit ergodic decomposition")]
    NonErgodicComponent,

    #[error("enumeration cap exceeded: {0} words")]
    EnumerationCap(u128),

    #[error("order parameters require differentiable g")]
    NotDifferentiable,

    #[error("infeasible z {0:?}: outside the reachable set")]
    InfeasibleZ(Vec<f64>),

    #[error("resolution {0} too coarse (need at least 11)")]
    ResolutionTooCoarse(usize),

    #[error("transport: {0}")]
    Transport(String),
}

pub type Result<T> = std::result::Result<T, Error>;
