//! Numerical laboratory for desingularizing a transversally self-intersecting
//! special Lagrangian variety by gluing in a Lawlor neck.

pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod gluing;
pub mod lawlor;
pub mod quadrature;
pub mod report;
pub mod sampling;
pub mod spectral;
pub mod sweep;
pub mod symplectic;

pub use error::{Error, Result};
