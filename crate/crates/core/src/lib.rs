//! Semi-proximal ADMM solvers for doubly nonnegative semidefinite programs.

pub mod admm;
pub mod cli;
pub mod cones;
pub mod error;
pub mod generators;
pub mod io;
pub mod linalg;
pub mod problem;
pub mod solvers;

pub use error::{Error, Result};
