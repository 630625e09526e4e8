//! Numerical convex integration for the Boussinesq–Reynolds system on the
//! periodic 3-torus.
//!
//! The crate builds high-frequency Beltrami perturbations of a relaxed
//! Boussinesq tuple `(v, p, θ, R̊, f)`, updates the stress and flux so that the
//! new tuple solves the relaxed system again, and measures how far the
//! stresses shrank. Everything is pseudo-spectral on a uniform grid.

pub mod antidiv;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod io;
pub mod partition;
pub mod runner;
pub mod scheme;
pub mod torus;

pub use error::{Error, Result};
