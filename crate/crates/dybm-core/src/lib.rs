//! Online learning engine for multivariate time series built around
//! energy-based models whose learning rules are local in time: binary,
//! Gaussian, functional, and hidden-unit dynamic Boltzmann machines, plus a
//! BPTT-trained recurrent temporal RBM baseline.

pub mod bench;
pub mod binary;
pub mod checkpoint;
pub mod config;
pub mod error;
pub mod functional;
pub mod gaussian;
pub mod hidden;
pub mod math;
pub mod rng;
pub mod rtrbm;
pub mod series;
pub mod traces;
pub mod train;

pub use error::{DybmError, Result};
