use thiserror::Error;

use crate::grid::DegeneracyClass;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coefficient a(x) must be positive on (0,1], found a({x}) = {value}")]
    NonPositiveCoefficient { x: f64, value: f64 },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("degeneracy class {0} is not supported here")]
    UnsupportedClass(DegeneracyClass),

    #[error("quadrature on [{a}, {b}] did not reach tolerance {tol:e} (error estimate {estimate:e})")]
    DivergedQuadrature { a: f64, b: f64, tol: f64, estimate: f64 },

    #[error("{what}: two evaluation routes disagree ({first} vs {second})")]
    IdentityMismatch {
        what: &'static str,
        first: f64,
        second: f64,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("factorization failed: {0}")]
    FactorizationFailure(String),

    #[error("eigensolver failed: {0}")]
    EigenSolverFailure(String),

    #[error("{n_dof} degrees of freedom exceed the dense limit of {limit}")]
    TooLarge { n_dof: usize, limit: usize },

    #[error("shift i*{lambda} is (numerically) an eigenvalue: smallest singular value {sigma_min:e}")]
    SingularShift { lambda: f64, sigma_min: f64 },

    #[error("degenerate decay-fit window: {0}")]
    DegenerateWindow(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
