//! Numerics for the lowest eigenvalue of the magnetic Robin Laplacian with a
//! negative boundary parameter in planar domains.

pub mod asymptotics;
pub mod coarea;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod numerics;
pub mod radial;
mod tridiag;

pub use error::{Error, Result};
