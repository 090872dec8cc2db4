//! Simulation and tail asymptotics for suprema of chi-square processes with
//! polynomial trend built from self-similar Gaussian processes.

pub mod asymptotics;
pub mod chi_process;
pub mod constants;
pub mod error;
pub mod gaussian_paths;
pub mod harness;
pub mod mc;
pub mod model_params;
pub mod rng;
pub mod serde_ext;
pub mod special;

pub use error::{Error, Result};
