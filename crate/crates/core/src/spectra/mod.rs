//! Spectroscopy observables and junction-energy fitting.

pub mod dataset;
pub mod fit;
pub mod resonator;
pub mod simplex;
pub mod sweep;

pub use dataset::{SpectroscopyDataset, SpectroscopyRow};
pub use fit::{fit_spectrum, model_f01, FitOptions, FitResult};
pub use resonator::{resonator_shift, resonator_shift_with, ResonatorParams, ResonatorShift};
pub use sweep::{transition_spectrum_sweep, LevelOrdering, SweepPoint};
