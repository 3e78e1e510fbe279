//! Krylov complexity of deformed spectral measures and the Toda flows that
//! generate them.
//!
//! The pipeline is: build a [`SpectralMeasure`], deform it with a
//! [`Deformation`], tridiagonalize it with [`lanczos`], then evolve and measure
//! spread complexity or flow the Lanczos coefficients directly with the Toda
//! equations.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exact;
pub mod io;
pub mod krylov;
pub mod measure;
pub mod observables;
pub mod ode;
pub mod rmt;
pub mod susy;
pub mod toda;

pub use error::{Error, Result};
pub use krylov::{
    eigendecompose, evolve, lanczos, lanczos_with, KrylovState, LanczosOptions, Propagator,
    Termination, TridiagonalEigen, TridiagonalOperator,
};
pub use measure::{Deformation, Level, MeasureMeta, SpectralMeasure};
pub use toda::{flow, relanczos_path, FlowOptions, FlowResult, Variables};
