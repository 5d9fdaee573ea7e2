//! Pseudo-spectral solver and analysis toolkit for the 3D Navier-Stokes-Voight
//! equations on a periodic box.
//!
//! The crate evolves
//! `u_t + nu A u + alpha^2 A u_t + B(u, u) = f`,
//! builds the asymptotic approximation chain `v, v2, ..., vm`, measures Gevrey
//! norms and exponential spectrum decay, and evaluates the length-scale and
//! steady-state analyticity bounds.

pub mod chain;
pub mod error;
mod fit;
pub mod gevrey;
pub mod harness;
pub mod integrator;
pub mod nonlinear;
pub mod spectral;
pub mod steady;

pub use error::{NsvError, Result};
pub use spectral::{SpectralField, WaveLattice};
