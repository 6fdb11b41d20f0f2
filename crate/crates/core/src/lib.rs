//! Extinction-time analysis for epidemics whose infectiousness depends on the
//! current number of cases, spreading over a weighted locality network.
//!
//! - [`graph`]: locality graphs, spectral radii and threshold matrices
//! - [`rates`]: infectiousness profiles `β(n)`, `β^int(n)`
//! - [`bdchain`]: exact and high-precision mean extinction times of the
//!   bounding birth–death chains
//! - [`regime`]: fast/slow extinction classification
//! - [`ssa`]: stochastic simulation and the mean-field flow

pub mod bdchain;
pub mod error;
pub mod graph;
pub mod precision;
pub mod rates;
pub mod regime;
pub mod ssa;

pub use error::{Error, Result};
