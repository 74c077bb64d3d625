use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("untagged boundary edge ({0}, {1})")]
    UntaggedBoundaryEdge(usize, usize),
    #[error("non-conforming mesh: {0}")]
    NonConforming(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("degenerate cell {0} (zero area)")]
    DegenerateCell(usize),
    #[error("unsupported gmsh element type {0} (only 1 = line and 2 = triangle are accepted)")]
    UnsupportedElement(u32),
    #[error("poisson ratio out of range: {0} (expected 0 <= nu <= 0.5)")]
    PoissonOutOfRange(f64),
    #[error("young's modulus must be positive, got {value} in subdomain {subdomain}")]
    NonPositiveYoung { subdomain: i32, value: f64 },
    #[error("unknown subdomain tag {0}")]
    UnknownSubdomain(i32),
    #[error("expression error: {0}")]
    Expression(String),
    #[error("unsupported quadrature degree {0} (supported: 1..=10)")]
    UnsupportedQuadrature(usize),
    #[error("the Dirichlet boundary is empty")]
    EmptyDirichlet,
    #[error("pressure nonunique: Stokes limit (nu = 0.5) with no Neumann boundary defines the pressure only up to a constant")]
    PressureNonUnique,
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("eigensolver did not converge: {converged} of {requested} pairs after {iterations} restarts")]
    NoConvergence {
        iterations: usize,
        converged: usize,
        requested: usize,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
