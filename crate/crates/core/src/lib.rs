//! Simulation and diagnostics for a two-variance mixture model of
//! high-dimensional outliers.
//!
//! The crate generates data from the model ([`model`]), computes the
//! uncentered sample covariance spectrum through the dual Gram matrix when
//! `d > n` ([`spectra`]), measures HDLSS geometry against its limits
//! ([`geometry`]), turns the PCA consistency results into finite-sample
//! checks ([`consistency`]) and runs seeded, replicated scenarios
//! ([`harness`]).

pub mod consistency;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod model;
pub mod rng;
pub mod spectra;
pub mod stats;

pub use error::{Error, Result};
pub use model::{DirectionSpec, GeneratedDataset, MixtureModelSpec};
pub use spectra::{sample_covariance_spectrum, SpectralDecomposition};
