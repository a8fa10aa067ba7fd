//! High-order virtual element discretization of the Poisson problem on
//! polyhedral meshes.

pub mod analysis;
pub mod assembly;
pub mod dense;
pub mod elemvem;
pub mod error;
pub mod facevem;
pub mod mesh;
pub mod polybasis;
pub mod problems;
pub mod quadrature;
pub mod sparse;

pub use error::{Result, VemError};
