//! Dispersive shift of the readout resonator.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::operators::{operator_matrix, OperatorContext, OperatorKind};
use crate::circuit::{solve, CircuitParams, FluxBias, HamiltonianOptions};
use crate::error::{Error, Result};

/// Transitions within this distance of the resonator are flagged, GHz.
pub const NEAR_DEGENERACY_GHZ: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorParams {
    /// Bare resonator frequency, GHz.
    pub f_res_bare: f64,
    /// Coupling g/2π, GHz.
    pub g_coupling: f64,
}

impl ResonatorParams {
    /// Readout resonator of the measured device.
    pub fn paper() -> Self {
        ResonatorParams {
            f_res_bare: 5.344,
            g_coupling: 0.025,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_res_bare.is_finite() && self.f_res_bare > 0.0) {
            return Err(Error::validation(
                "f_res_bare",
                format!("must be > 0, got {}", self.f_res_bare),
            ));
        }
        if !(self.g_coupling.is_finite() && self.g_coupling >= 0.0) {
            return Err(Error::validation(
                "g_coupling",
                format!("must be >= 0, got {}", self.g_coupling),
            ));
        }
        Ok(())
    }
}

impl Default for ResonatorParams {
    fn default() -> Self {
        Self::paper()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorShift {
    /// GHz.
    pub shift: f64,
    /// Change in the shift when one more level is included, GHz.
    pub truncation_change: f64,
    /// Some transition lies within 1 MHz of the resonator.
    pub near_degenerate: bool,
}

/// Sum over levels `i ≠ s`, `i < n_levels`, of
/// `g² |n_is|² (−2 f_is)/(f_is² − f_res²)`.
pub fn shift_from_elements(
    energies: &[f64],
    charge: &DMatrix<Complex64>,
    res: &ResonatorParams,
    from_state: usize,
    n_levels: usize,
) -> (f64, bool) {
    let g2 = res.g_coupling * res.g_coupling;
    let mut shift = 0.0;
    let mut near = false;
    for i in 0..n_levels.min(energies.len()) {
        if i == from_state {
            continue;
        }
        let f = energies[i] - energies[from_state];
        if (f.abs() - res.f_res_bare).abs() < NEAR_DEGENERACY_GHZ {
            near = true;
        }
        shift += g2 * charge[(i, from_state)].norm_sqr() * (-2.0 * f)
            / (f * f - res.f_res_bare * res.f_res_bare);
    }
    (shift, near)
}

pub fn resonator_shift(
    params: &CircuitParams,
    flux: &FluxBias,
    res: &ResonatorParams,
    from_state: usize,
    n_levels: usize,
) -> Result<ResonatorShift> {
    resonator_shift_with(
        params,
        flux,
        res,
        from_state,
        n_levels,
        &HamiltonianOptions::default(),
    )
}

pub fn resonator_shift_with(
    params: &CircuitParams,
    flux: &FluxBias,
    res: &ResonatorParams,
    from_state: usize,
    n_levels: usize,
    opts: &HamiltonianOptions,
) -> Result<ResonatorShift> {
    res.validate()?;
    if n_levels < from_state + 2 {
        return Err(Error::validation(
            "n_levels",
            format!(
                "need at least {} levels for state {from_state}",
                from_state + 2
            ),
        ));
    }
    let (eig, _) = solve(params, flux, opts, n_levels + 1)?;
    let ctx = OperatorContext {
        params,
        flux,
        options: *opts,
    };
    let n = operator_matrix(&eig, OperatorKind::ChargeN, &ctx)?;
    let (shift, near) = shift_from_elements(&eig.energies, &n, res, from_state, n_levels);
    let (longer, near_longer) =
        shift_from_elements(&eig.energies, &n, res, from_state, n_levels + 1);
    Ok(ResonatorShift {
        shift,
        truncation_change: (longer - shift).abs(),
        near_degenerate: near || near_longer,
    })
}
