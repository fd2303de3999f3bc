//! Data-driven finite element solvers for scalar conductivity problems.

pub mod equilibrium;
pub mod harness;
pub mod error;
pub mod law;
pub mod linalg;
pub mod material;
pub mod mesh;
pub mod qsap;
pub mod quadrature;
pub mod solvers;
pub mod spaces;

pub use error::{Error, Result};
