//! Lanczos tridiagonalization of spectral measures, tridiagonal eigensolver and
//! time evolution in the Krylov basis.

mod eigen;
mod evolve;
mod lanczos;
mod tridiag;

pub use eigen::{eigendecompose, TridiagonalEigen};
pub use evolve::{evolve, KrylovState, Propagator};
pub use lanczos::{lanczos, lanczos_with, LanczosOptions, LanczosOutput, Termination};
pub use tridiag::TridiagonalOperator;
