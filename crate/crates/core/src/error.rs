use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("origin is not strictly interior: supporting hyperplane {normal} has offset {offset}")]
    OriginNotInterior { normal: String, offset: String },
    #[error("facet system is unbounded: {0}")]
    Unbounded(String),
    #[error("dimension {0} is not supported by this constructor (exact hull needs n <= 3; give both vertices and facet normals)")]
    UnsupportedDimension(usize),
    #[error("matrix is not unimodular (determinant {0})")]
    NotUnimodular(String),
    #[error("vertex and facet representations disagree: {0}")]
    Inconsistent(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        Self { line, message: message.into() }
    }
}

/// Anything that can go wrong turning a file into a [`crate::LatticePolytope`].
#[derive(Debug, Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundError {
    #[error("polytope is not reflexive (failing facets: {failing_facets:?})")]
    NotReflexive { failing_facets: Vec<usize> },
    #[error("point is not strictly interior: facet {facet} gives slack {slack}")]
    InteriorityViolation { facet: usize, slack: String },
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error(
        "tail bound violated: relative tail {tail:.3e} exceeds tolerance {tolerance:.1e} at L = {box_halfwidth}; try L >= {suggested_halfwidth}"
    )]
    TailBoundViolated {
        tail: f64,
        tolerance: f64,
        box_halfwidth: f64,
        suggested_halfwidth: f64,
    },
    #[error("quadrature produced a non-finite value: {0}")]
    QuadratureNonFinite(String),
    #[error("Newton iteration diverged at t = {t}: {reason} after {iterations} iterations (residual {residual:.3e})")]
    NewtonDiverged {
        t: f64,
        iterations: usize,
        residual: f64,
        reason: String,
    },
    #[error("discrete Hessian is not positive definite at node {node:?} (t = {t})")]
    HessianNotPD { t: f64, node: Vec<usize> },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unsupported dimension {0} for this numerical routine")]
    UnsupportedDimension(usize),
    #[error(transparent)]
    Bound(#[from] BoundError),
}
