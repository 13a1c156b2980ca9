pub mod basis;
pub mod cli;
pub mod coeffs;
pub mod eigen;
pub mod integrator;
pub mod error;
pub mod linalg;
pub mod methods;
pub mod nodes;
pub mod poly;
pub mod problems;
pub mod stability;
pub mod starter;

pub use error::{Error, Result};
