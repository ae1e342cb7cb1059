//! Dense linear-algebra kernels for small problems.
//!
//! Everything here is written for `n` up to a few dozen: Jacobi sweeps for
//! symmetric spectra, one-sided Jacobi for singular values, Hessenberg QR
//! for general spectra and a Kronecker solve for Lyapunov equations.

mod eig;
mod hqr;
mod lyapunov;
mod mat;
mod svd;
mod sym;

pub use eig::{SymEigen, chol, min_eig, psd_sqrt, spd_inverse, sym_eig};
pub use hqr::{Eigenvalue, eigenvalues, spectral_abscissa};
pub use lyapunov::{lyapunov_residual, solve_lyapunov};
pub use mat::Mat;
pub use svd::{numerical_rank, singular_values};
pub use sym::SymMatrix;


#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    Dimension { expected: (usize, usize), found: (usize, usize) },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is numerically singular")]
    Singular,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("Lyapunov operator is singular: two eigenvalues sum to {min_pair_sum:e}")]
    DegenerateSpectrum { min_pair_sum: f64 },
    #[error("iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
}

/// `libm` shims; `core` has no transcendental functions.
pub(crate) mod math {
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }
}
