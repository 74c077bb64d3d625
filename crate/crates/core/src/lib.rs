//! Adaptive mixed finite elements for the elasticity/Stokes eigenvalue problem
//! in displacement-pressure form with a spatially variable Young's modulus.

pub mod adaptive;
pub mod coefficients;
pub mod eigensolve;
pub mod error;
pub mod estimator;
pub mod exec;
pub mod fem;
pub mod mesh;
pub mod postprocess;
pub mod sparse;

pub use error::{Error, Result};
pub use exec::Execution;
