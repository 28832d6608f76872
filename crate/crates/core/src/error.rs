use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix dimensions do not match: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("covariance is not symmetric (asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("covariance is not positive definite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("drift is not Hurwitz: eigenvalue with real part {real_part:.3e}")]
    NotHurwitz { real_part: f64 },
    #[error("rates must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quadrature did not reach tolerance {tolerance:.1e} (estimated error {estimate:.3e})")]
    QuadratureFailure { tolerance: f64, estimate: f64 },
    #[error("Cholesky factorization failed: covariance numerically singular")]
    CholeskyFailure,
    #[error("Lyapunov system is singular")]
    SingularLyapunov,
    #[error("semigroup is not normal (commutator norm {commutator:.3e} > tolerance {tolerance:.3e})")]
    NotNormal { commutator: f64, tolerance: f64 },
    #[error("model is not in diagonal or block-canonical form")]
    NotCanonical,
    #[error("root finder failed: {0}")]
    NoRoot(String),
    #[error("zero vector has no polar decomposition")]
    ZeroVector,
    #[error("unknown lemma id `{0}`")]
    UnknownLemma(String),
    #[error("sample budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("alpha {alpha:.4e} is below the large-alpha threshold {threshold:.4e}")]
    AlphaTooSmall { alpha: f64, threshold: f64 },
    #[error("grid too coarse: selected point {index} is not excluded by its own zone")]
    GridTooCoarse { index: usize },
    #[error("recursion did not terminate within {0} iterations")]
    NonTermination(usize),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && !t.is_nan() {
        Ok(())
    } else {
        Err(Error::NonPositiveTime(t))
    }
}
