//! Small structured linear-algebra kernels: symmetric tridiagonal matrices
//! with their bidiagonal Cholesky factors, banded LU with partial pivoting,
//! and a Lanczos iteration for the top of a Hermitian spectrum.

mod banded;
mod lanczos;
mod tridiag;

pub use banded::{BandedLu, Scalar};
pub use lanczos::{lanczos_max_eigenvalue, LanczosResult};
pub use tridiag::{Bidiagonal, SymTridiag};
