//! Effective two-loop circuit: energy-phase relations, the charge-basis
//! Hamiltonian, its eigenstates, and noise-operator matrix elements.

pub mod eigen;
pub mod epr;
pub mod flux;
pub mod fourier;
pub mod hamiltonian;
pub mod operators;

pub use eigen::{eigensystem, lowest_eigenvalues, EigenSystem};
pub use epr::{effective_arm, internal_mode_epr, small_squid, sns_epr, EffectiveArm, SmallSquid};
pub use flux::FluxBias;
pub use fourier::{fourier_decompose, Harmonic, PeriodicPotential};
pub use hamiltonian::{
    build_hamiltonian, build_hamiltonian_with, total_potential, CircuitParams, CircuitPotential,
    ControlLine, Hamiltonian, HamiltonianOptions, JunctionSet,
};
pub use operators::{operator_matrix, operator_matrix_element, OperatorContext, OperatorKind};

use crate::error::Result;

/// Build and diagonalize in one step, keeping `levels` eigenpairs.
pub fn solve(
    params: &CircuitParams,
    flux: &FluxBias,
    opts: &HamiltonianOptions,
    levels: usize,
) -> Result<(EigenSystem, Hamiltonian)> {
    let h = build_hamiltonian_with(params, flux, opts)?;
    let mut eig = eigensystem(&h.matrix, levels)?;
    eig.ng = h.ng;
    Ok((eig, h))
}

/// Lowest `levels` energies without eigenvectors.
pub fn solve_energies(
    params: &CircuitParams,
    flux: &FluxBias,
    opts: &HamiltonianOptions,
    levels: usize,
) -> Result<Vec<f64>> {
    let h = build_hamiltonian_with(params, flux, opts)?;
    lowest_eigenvalues(&h.matrix, levels)
}
