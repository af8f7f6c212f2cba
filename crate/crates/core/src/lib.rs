//! Shape optimization of steady viscous pipe flow.
//!
//! The crate covers geometry and meshing of axisymmetric or planar pipe
//! profiles, a Taylor-Hood discretization of the Navier-Stokes equations,
//! the adjoint problem for the dissipated energy, the wall shape gradient,
//! a volume-constrained descent loop, and post-processing checks.

pub mod adjoint;
pub mod discretization;
pub mod error;
pub mod geometry;
pub mod optimizer;
pub mod params;
pub mod quadrature;
pub mod shape_derivative;
pub mod state;
pub mod verification;

pub use error::{Error, Result};
pub use params::{FluidParams, Mode};
