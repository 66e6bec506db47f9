//! Numerical microlocal analysis on uniform 1-D grids.
//!
//! Builds anisotropic Gabor wave front set estimates from the short-time
//! Fourier transform, Weyl quantization of phase-space symbols, Hamilton
//! flows and propagators for Schrödinger-type equations, and the glue to
//! check that singularities of evolved data move along the flow.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod flow;
pub mod geometry;
pub mod parallel;
pub mod propagators;
pub mod signal;
pub mod symbols;
pub mod transforms;
pub mod wavefront;

mod fft;
mod sum;

pub use error::{Error, Result};
pub use geometry::{AnisotropyIndex, PhasePoint};
pub use signal::{CanonicalDatum, Grid, Signal};
pub use transforms::{PhaseGridMatrix, WindowSpec};

pub type C64 = num_complex::Complex64;
