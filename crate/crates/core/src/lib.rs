//! Dynamical percolation driven by symmetric exclusion processes: lattice
//! geometry, percolation events, exclusion dynamics, exact and Monte Carlo
//! Walsh-Fourier spectral analysis, and time-correlation estimators.

pub mod error;
pub mod lattice;
pub mod rng;

pub use error::{Error, Result};
pub use rng::{Estimate, RngStream};
pub mod percolation;
pub mod dynamics;
pub mod spectral_exact;
pub mod spectral_mc;
pub mod correlations;
