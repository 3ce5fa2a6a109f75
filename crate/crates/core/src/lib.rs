pub mod banded;
pub mod config;
pub mod dispersion;
pub mod dtn;
pub mod error;
pub mod fem;
pub mod mesh;
pub mod postprocess;
pub mod quadrature;
pub mod solver;
pub mod sweep;

pub use error::{Error, Result};
