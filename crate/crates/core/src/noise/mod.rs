//! Noise channels, spectral densities and relaxation budgets.

pub mod bessel;
pub mod budget;
pub mod channels;

pub use bessel::{k0, k0_scaled, k0_sinh};
pub use budget::{
    circuit_couplings, purcell_from_elements, purcell_rate, purcell_rate_with, t1_budget,
    t1_budget_with, t1_sweep, BudgetChannel, CouplingMatrices, PurcellRate, T1Budget,
};
pub use channels::{
    capacitance_from_ec, golden_rule_rate, inductance_from_energy, q_cap, q_ind,
    quasiparticle_admittance, spectral_density, spectral_density_signed, Channel, ChannelContext,
    FluxLoop, NoiseConfig,
};
