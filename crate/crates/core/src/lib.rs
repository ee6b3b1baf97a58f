//! Inhomogeneous zero range processes on finite cubes: exact invariant
//! measures and reversible generators, spectral gap and entropy constants,
//! birth–death reductions, local limit theorems and event-driven dynamics.

pub mod bdchain;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod llt;
pub mod model;
pub mod spectral;

pub use error::{Result, ZrpError};
pub use lattice::Cube;
