//! Positivity-preserving convex-splitting finite-difference solver for the
//! functionalized Cahn-Hilliard equation with a logarithmic potential.

pub mod convergence;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod grid;
pub mod potential;
pub mod scenarios;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Field, FaceField, Grid, Norm, SpectralWorkspace};
pub use potential::PhysParams;
