//! Holographic MIMO channel models with antenna mutual coupling.
//!
//! Lengths are in wavelengths throughout (λ = 1). Channel-facing quantities
//! are SNR-referred, so the radiation resistance, large-scale gain and noise
//! power never appear separately.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN.

pub mod capacity;
pub mod channel;
pub mod coupling;
pub mod error;
pub mod fourier;
pub mod geometry;
pub mod kernel;
pub mod linalg;
pub mod quadrature;
pub mod rng;
pub mod spectra;

pub use error::{Error, Result};
pub use faer::{c64, Mat};
