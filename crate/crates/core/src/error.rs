use std::path::PathBuf;

/// Errors surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("eigensolver did not converge: {0}")]
    Eigen(String),

    #[error("degenerate determinant sign: an eigenvalue has zero real part")]
    DegenerateSign,

    #[error("jacobian coefficients required for jsw={0} but the problem provides none")]
    MissingJacobian(u8),

    #[error("finite-difference jacobian leaves the node-adjacency pattern (max off-pattern entry {0:.3e}); the residual is nonlocal")]
    SparsityViolation(f64),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("bifurcation: {0}")]
    Bifurcation(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("corrupt file {path}: {msg}")]
    Corrupt { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
