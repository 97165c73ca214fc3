//! The q-state noisy voter model on finite graphs.
//!
//! Every vertex carries one of `q` colors and updates at rate 1: with
//! probability `1 - theta` it copies a uniformly chosen neighbor, otherwise
//! it takes a uniformly random color. The crate provides forward simulation,
//! the coalescing-walk dual with exact stationary sampling, the spectral
//! autocorrelation machinery that predicts the mixing time from the initial
//! condition, and exact small-state-space laws for cross-checking.

pub mod dual;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod mixing;
pub mod patterns;
pub mod rng;
pub mod spectral;

pub use dynamics::ModelParams;
pub use error::{Error, Result};
pub use graph::Graph;
pub use patterns::ColorConfig;
pub use rng::Estimate;
pub use spectral::{AutocorrCurve, Flavor, Spectrum};
