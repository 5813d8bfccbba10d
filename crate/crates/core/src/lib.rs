//! Discretization and stability diagnostics for a 1-D wave equation coupled
//! to a degenerate heat equation.

pub mod checks;
pub mod cli;
pub mod config;
pub mod error;
pub mod greens;
pub mod grid;
pub mod linalg;
pub mod operator;
pub mod panels;
pub mod quadrature;
pub mod rng;
pub mod samples;
pub mod spectral;
pub mod timestepper;

pub use error::{Error, Result};
