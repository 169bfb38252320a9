//! Simulation and analysis of a Fourier-engineered cos(2φ) transmon.
//!
//! Energies are E/h in GHz and fluxes in units of Φ0 throughout, except inside
//! the noise formulas, which work in SI.

pub mod calibration;
pub mod circuit;
pub mod constants;
pub mod error;
pub mod fluxonium;
pub mod multilevel;
pub mod noise;
pub mod spectra;

pub use error::{Error, Result};
