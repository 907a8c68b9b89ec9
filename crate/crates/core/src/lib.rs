//! Floquet simulation of spin transport in Heisenberg chains with rungs.

pub mod analysis;
pub mod config;
pub mod correlator;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod linalg;
pub mod model;
pub mod output;

pub use error::{Error, Result};
