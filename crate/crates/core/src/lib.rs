//! Energy functionals for thin elastic sheets in the Föppl–von Kármán
//! approximation, together with the test configurations and minimizers used
//! to probe their scaling laws.
//!
//! * [`circle`]: the 1D constrained problem `min ∫(α+α″)²` over closed
//!   curves with `∫(α′²−α²) = 2πΔ²`.
//! * [`econe`]: truncated 1-homogeneous excess-cone fields on a polar grid,
//!   their energy and the Gauss-curvature diagnostic.
//! * [`cap`]: the radially symmetric spherical-cap energy, the inversion
//!   construction, a Newton minimizer and lower-bound diagnostics.
//! * [`optim`]: gradient descent, augmented Lagrangian and banded Newton.
//! * [`grid`]: radial grids, trapezoid quadrature and difference stencils.
//!
//! The crate is `no_std` and only needs an allocator.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cap;
pub mod circle;
pub mod econe;
pub mod error;
pub mod fit;
pub mod grid;
pub mod optim;

mod math;
mod poly;
mod rng;
mod spectral;

pub use error::{Error, Result};
pub use grid::{EnergyBreakdown, ModelParams, RadialGrid};
