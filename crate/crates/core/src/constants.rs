//! Exact SI constants (2019 redefinition).

use std::f64::consts::PI;

/// Fixed physical constants used across the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub planck_h: f64,
    pub hbar: f64,
    pub boltzmann_kb: f64,
    pub electron_charge_e: f64,
    pub flux_quantum_phi0: f64,
    pub resistance_quantum_rk: f64,
}

pub const PLANCK_H: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK_H / (2.0 * PI);
pub const BOLTZMANN_KB: f64 = 1.380_649e-23;
pub const ELECTRON_CHARGE: f64 = 1.602_176_634e-19;
/// Superconducting flux quantum h/2e in Wb.
pub const FLUX_QUANTUM: f64 = PLANCK_H / (2.0 * ELECTRON_CHARGE);
/// Resistance quantum h/e² in Ω.
pub const RESISTANCE_QUANTUM: f64 = PLANCK_H / (ELECTRON_CHARGE * ELECTRON_CHARGE);

/// Joules per GHz of E/h.
pub const JOULE_PER_GHZ: f64 = PLANCK_H * 1e9;

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    planck_h: PLANCK_H,
    hbar: HBAR,
    boltzmann_kb: BOLTZMANN_KB,
    electron_charge_e: ELECTRON_CHARGE,
    flux_quantum_phi0: FLUX_QUANTUM,
    resistance_quantum_rk: RESISTANCE_QUANTUM,
};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_constants_are_consistent() {
        let c = CONSTANTS;
        assert!(((c.hbar * 2.0 * PI) / c.planck_h - 1.0).abs() < 1e-15);
        let rk = c.planck_h / (c.electron_charge_e * c.electron_charge_e);
        assert!((rk / c.resistance_quantum_rk - 1.0).abs() < 1e-15);
        assert!((c.resistance_quantum_rk - 25_812.807_45).abs() < 1e-2);
        assert!((c.flux_quantum_phi0 - 2.067_833_848e-15).abs() < 1e-23);
    }
}
