use thiserror::Error;

/// Errors raised by the numerical kernels, the passivity checks and the optimizer.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum KlapError {
    #[error("matrix is not Hurwitz (spectral abscissa {abscissa:.3e} >= -{tolerance:.3e})")]
    NotHurwitz { abscissa: f64, tolerance: f64 },

    #[error("eigenvector matrix is ill-conditioned (condition estimate {condition:.3e} > {bound:.3e})")]
    IllConditioned { condition: f64, bound: f64 },

    #[error("matrix is defective or numerically non-diagonalizable (condition estimate {condition:.3e})")]
    Defective { condition: f64 },

    #[error("Lyapunov operator is singular (lambda_i + lambda_j = {min_sum:.3e})")]
    SingularOperator { min_sum: f64 },

    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("complex solve left an imaginary residue ({imaginary:.3e} vs real part {real:.3e})")]
    ImaginaryResidue { imaginary: f64, real: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("shifted matrix sI - A is singular at s = {re} + {im}i")]
    SingularShift { re: f64, im: f64 },

    #[error("D + D^T is singular")]
    SingularFeedthrough,

    #[error("Riccati equation has no solution: {0}")]
    NoSolution(String),

    #[error("eigenvalue solver failed to converge")]
    EigenSolverFailure,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, KlapError>;
