//! Numerical laboratory for focusing Gibbs measures built on fractional
//! Gaussian free fields: field sampling, drift constructions, variational
//! constants and partition-function estimates.

pub mod csvio;
pub mod drift;
pub mod error;
pub mod optim;
pub mod params;
pub mod partition;
pub mod rng;
pub mod sampler;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use params::{Criticality, ModelParams};
pub use spectral::{GridSpec, Lattice, SpectralField};
