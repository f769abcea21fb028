//! Thin-domain compressible Navier-Stokes toolkit.
//!
//! Solves the barotropic system with density-dependent viscosity
//! `mu(rho) = mu * rho`, `lambda(rho) = 0` on the periodic unit interval and on
//! the thin box `(0, eps)^2 x (0, 1)` with full-slip side walls, and measures
//! how far the 3D solution is from the extension of the 1D one through the
//! relative entropy of the augmented `(rho, v, w)` variables.
//!
//! # Module Structure
//!
//! - [`eos`]: pressure law, pressure potential and convexity gaps
//! - [`fields`]: grids, staggered storage, discrete operators, snapshots
//! - [`solver1d`]: primitive and augmented 1D stepping
//! - [`solver3d`]: primitive 3D stepping with slab decomposition
//! - [`entropy`]: kappa-entropy, relative entropy and convergence metrics
//! - [`harness`]: configuration, initial data, sweeps, MMS, persistence

pub mod entropy;
pub mod eos;
pub mod error;
pub mod fields;
pub mod harness;
pub mod solver1d;
pub mod solver3d;
mod stencil;

pub use eos::FluidParams;
pub use error::{Error, Result};
pub use fields::{AugmentedState1D, ExtendedState, Grid1D, Grid3D, State1D, State3D};
