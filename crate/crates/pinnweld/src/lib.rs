//! Physics-informed neural-network training engine for aluminum resistance
//! spot welding: coupled heat/elasticity residuals in non-dimensional 1D and
//! axisymmetric 2D form, contact-heat models, threshold-gated training
//! strategies, and finite-difference verification oracles.

pub mod adnet;
pub mod checkpoint;
pub mod cli;
pub mod error;
pub mod material;
pub mod process;
pub mod residuals;
pub mod oracle;
pub mod sampler;
pub mod trainer;

pub use error::{Error, Result};

/// CLI entry point; returns the process exit code.
pub fn run_cli() -> i32 {
    cli::run()
}
