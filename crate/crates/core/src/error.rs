use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Query point is outside the tubular neighborhood where the projection is defined.
    #[error("point ({x}, {y}) has signed distance {distance}, outside tubular width {width}")]
    OutsideTubularNeighborhood {
        x: f64,
        y: f64,
        distance: f64,
        width: f64,
    },

    #[error("unsupported polynomial degree {degree} (supported: {min}..={max})")]
    UnsupportedDegree { degree: usize, min: usize, max: usize },

    #[error("no quadrature rule of degree {requested}; maximum available is {max}")]
    UnsupportedQuadrature { requested: usize, max: usize },

    /// The reference point lies on the internal face where the boundary
    /// weight vanishes, so the boundary-side point is undefined.
    #[error("reference point lies on the internal face (boundary weight is zero)")]
    SingularPoint,

    #[error("element {element}: {reason}")]
    InvalidMesh { element: usize, reason: String },

    #[error("element {element}: non-positive Jacobian {det:e}")]
    NonPositiveJacobian { element: usize, det: f64 },

    #[error("element {element}: Newton inversion failed after {iterations} iterations (residual {residual:e})")]
    InversionFailed {
        element: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("element {element}: degenerate lift, Jacobian determinant {det:e}")]
    DegenerateLift { element: usize, det: f64 },

    #[error("element {element}: degenerate boundary parametrization |γ'| = {speed:e}")]
    DegenerateEdge { element: usize, speed: f64 },

    #[error("element {element} has no edge on the boundary")]
    NotABoundaryElement { element: usize },

    #[error("solver failed to converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("convergence fit: {0}")]
    Fit(String),

    #[error("mesh file, line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("{context} level {level}: {source}")]
    AtLevel {
        context: String,
        level: usize,
        source: Box<Error>,
    },
}

impl Error {
    pub fn at_level(self, context: impl Into<String>, level: usize) -> Self {
        Error::AtLevel {
            context: context.into(),
            level,
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
