use thiserror::Error;

/// Every failure mode of the geometry, orbit and measure routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("points are not collinear")]
    NonCollinear,
    #[error("degenerate quadruple: a boundary point coincides with an inner point")]
    DegenerateQuadruple,
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("affine chart is undefined at this point")]
    ChartUndefined,
    #[error("points coincide")]
    CoincidentPoints,
    #[error("point is not in the interior of the domain")]
    NotInterior,
    #[error("point is not on the boundary of the domain")]
    NotOnBoundary,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("limit set hull is not full-dimensional")]
    DegenerateLimitSet,
    #[error("no element with a simple dominant eigenvalue")]
    NoDominantEigenvalue,
    #[error("boundary point is not proper and extremal")]
    NotProperExtremal,
    #[error("incidence construction is degenerate")]
    IncidenceDegenerate,
    #[error("no sign change found along the line")]
    NoBracket,
    #[error("transformation does not preserve the domain")]
    DomainNotPreserved,
    #[error("orbit enumeration exceeded the entry cap of {0}")]
    FrontierOverflow(usize),
    #[error("radius {requested} exceeds the complete radius {complete}")]
    IncompleteRadius { requested: f64, complete: f64 },
    #[error("degenerate window: {0}")]
    DegenerateWindow(String),
    #[error("orbit ball is empty")]
    EmptyBall,
    #[error("cell carries no atomic mass")]
    EmptyCell,
    #[error("cells cannot be joined by lines through the interior")]
    NoTransversal,
    #[error("sampling too coarse: spacing {spacing} exceeds {limit}")]
    UnderResolved { spacing: f64, limit: f64 },
    #[error("translations are linearly dependent or do not cover a fundamental domain")]
    DegenerateLattice,
    #[error("at least two samples are required")]
    DegenerateSample,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
