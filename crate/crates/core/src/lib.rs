//! Classical simulation of entangled-measurement quantum state tomography.

pub mod engine;
pub mod error;
pub mod keyl;
pub mod lab;
pub mod partition;
pub mod rng;
pub mod schur;
pub mod split;
pub mod stats;
pub mod tensor;

pub use error::{Error, Result};
