//! Per-channel relaxation rates and the total T1 budget.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::channels::{
    capacitance_from_ec, golden_rule_rate, inductance_from_energy, spectral_density, Channel,
    ChannelContext, FluxLoop, NoiseConfig,
};
use crate::circuit::operators::{
    flux_derivative, operator_matrix, project, FluxAxis, OperatorContext, OperatorKind,
};
use crate::circuit::{solve, CircuitParams, FluxBias, HamiltonianOptions};
use crate::constants::{ELECTRON_CHARGE, FLUX_QUANTUM, PLANCK_H};
use crate::error::{Error, Result};
use crate::spectra::ResonatorParams;

/// Purcell results with `|Δ0| < NEAR_RESONANT_RATIO·g01` are flagged.
pub const NEAR_RESONANT_RATIO: f64 = 10.0;

/// The eight columns of a budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BudgetChannel {
    Dielectric,
    Inductive,
    FblOhmicBias,
    FblOhmicCtrl,
    Quasiparticle,
    Purcell,
    OneOverFBias,
    OneOverFCtrl,
}

impl BudgetChannel {
    pub const ALL: [BudgetChannel; 8] = [
        BudgetChannel::Dielectric,
        BudgetChannel::Inductive,
        BudgetChannel::FblOhmicBias,
        BudgetChannel::FblOhmicCtrl,
        BudgetChannel::Quasiparticle,
        BudgetChannel::Purcell,
        BudgetChannel::OneOverFBias,
        BudgetChannel::OneOverFCtrl,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BudgetChannel::Dielectric => "dielectric",
            BudgetChannel::Inductive => "inductive",
            BudgetChannel::FblOhmicBias => "fbl_ohmic_bias",
            BudgetChannel::FblOhmicCtrl => "fbl_ohmic_ctrl",
            BudgetChannel::Quasiparticle => "quasiparticle",
            BudgetChannel::Purcell => "purcell",
            BudgetChannel::OneOverFBias => "one_over_f_bias",
            BudgetChannel::OneOverFCtrl => "one_over_f_ctrl",
        }
    }
}

/// Relaxation rates of one transition, s⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T1Budget {
    /// Transition frequency, GHz.
    pub frequency: f64,
    pub dielectric: f64,
    pub inductive: f64,
    pub fbl_ohmic_bias: f64,
    pub fbl_ohmic_ctrl: f64,
    pub quasiparticle: f64,
    pub purcell: f64,
    pub one_over_f_bias: f64,
    pub one_over_f_ctrl: f64,
    pub total_rate: f64,
    /// s; infinite when every rate vanishes.
    pub t1: f64,
    /// Purcell detuning smaller than ten times the coupling.
    pub purcell_near_resonant: bool,
}

impl T1Budget {
    pub fn rate(&self, ch: BudgetChannel) -> f64 {
        match ch {
            BudgetChannel::Dielectric => self.dielectric,
            BudgetChannel::Inductive => self.inductive,
            BudgetChannel::FblOhmicBias => self.fbl_ohmic_bias,
            BudgetChannel::FblOhmicCtrl => self.fbl_ohmic_ctrl,
            BudgetChannel::Quasiparticle => self.quasiparticle,
            BudgetChannel::Purcell => self.purcell,
            BudgetChannel::OneOverFBias => self.one_over_f_bias,
            BudgetChannel::OneOverFCtrl => self.one_over_f_ctrl,
        }
    }

    pub fn rates(&self) -> [(BudgetChannel, f64); 8] {
        BudgetChannel::ALL.map(|c| (c, self.rate(c)))
    }

    /// Channel with the largest rate.
    pub fn dominant(&self) -> BudgetChannel {
        let mut best = BudgetChannel::Dielectric;
        for c in BudgetChannel::ALL {
            if self.rate(c) > self.rate(best) {
                best = c;
            }
        }
        best
    }

    /// Total rate with one channel removed.
    pub fn total_without(&self, ch: BudgetChannel) -> f64 {
        BudgetChannel::ALL
            .iter()
            .filter(|&&c| c != ch)
            .map(|&c| self.rate(c))
            .sum()
    }

    /// Sum of both flux-noise channels of each kind, as plotted.
    pub fn one_over_f(&self) -> f64 {
        self.one_over_f_bias + self.one_over_f_ctrl
    }

    pub fn fbl_ohmic(&self) -> f64 {
        self.fbl_ohmic_bias + self.fbl_ohmic_ctrl
    }

    fn from_rates(frequency: f64, rates: [f64; 8], purcell_near_resonant: bool) -> Self {
        let total_rate: f64 = rates.iter().sum();
        let t1 = if total_rate > 0.0 {
            1.0 / total_rate
        } else {
            f64::INFINITY
        };
        T1Budget {
            frequency,
            dielectric: rates[0],
            inductive: rates[1],
            fbl_ohmic_bias: rates[2],
            fbl_ohmic_ctrl: rates[3],
            quasiparticle: rates[4],
            purcell: rates[5],
            one_over_f_bias: rates[6],
            one_over_f_ctrl: rates[7],
            total_rate,
            t1,
            purcell_near_resonant,
        }
    }
}

/// Operator matrix elements between the lowest levels of a circuit,
/// expressed in an internal energy unit of `unit_hz` hertz.
#[derive(Debug, Clone)]
pub struct CouplingMatrices {
    pub unit_hz: f64,
    pub energies: Vec<f64>,
    pub charge: DMatrix<Complex64>,
    pub phase: DMatrix<Complex64>,
    /// `sin(φ_J/2)` for each junction group together with its Josephson energy.
    pub sin_half: Vec<(DMatrix<Complex64>, f64)>,
    /// ∂H/∂Φ per Φ0.
    pub dh_bias: DMatrix<Complex64>,
    pub dh_ctrl: DMatrix<Complex64>,
    pub charging_energy: f64,
    /// Energy scale `(Φ0/2π)²/L` of the inductive loss element.
    pub inductive_energy: f64,
}

impl CouplingMatrices {
    pub fn levels(&self) -> usize {
        self.energies.len()
    }

    /// Same physics with every energy expressed in a unit `factor` times smaller.
    pub fn rescaled(&self, factor: f64) -> Self {
        let c = Complex64::new(factor, 0.0);
        CouplingMatrices {
            unit_hz: self.unit_hz / factor,
            energies: self.energies.iter().map(|e| e * factor).collect(),
            charge: self.charge.clone(),
            phase: self.phase.clone(),
            sin_half: self
                .sin_half
                .iter()
                .map(|(m, ej)| (m.clone(), ej * factor))
                .collect(),
            dh_bias: &self.dh_bias * c,
            dh_ctrl: &self.dh_ctrl * c,
            charging_energy: self.charging_energy * factor,
            inductive_energy: self.inductive_energy * factor,
        }
    }

    /// Transition frequency from `i` to `j`, Hz.
    pub fn frequency_hz(&self, i: usize, j: usize) -> f64 {
        (self.energies[i] - self.energies[j]) * self.unit_hz
    }

    /// Rates for the transition between `upper` and `lower`.
    ///
    /// The rates use the symmetrized densities and therefore equal the
    /// downward rate at the thermal factors in use.
    pub fn transition_budget(
        &self,
        upper: usize,
        lower: usize,
        res: &ResonatorParams,
        cfg: &NoiseConfig,
    ) -> Result<T1Budget> {
        let n = self.levels();
        if upper >= n || lower >= n || upper == lower {
            return Err(Error::validation(
                "level",
                format!("invalid transition {upper} -> {lower} with {n} levels"),
            ));
        }
        let f_hz = self.frequency_hz(upper, lower).abs();
        if !(f_hz > 0.0) {
            return Err(Error::NumericalFailure(format!(
                "degenerate levels {upper} and {lower}"
            )));
        }
        let omega = 2.0 * PI * f_hz;
        let to_ghz = self.unit_hz / 1e9;
        let joule = PLANCK_H * self.unit_hz;

        let ctx = ChannelContext {
            capacitance: Some(
                cfg.effective_capacitance
                    .unwrap_or_else(|| capacitance_from_ec(self.charging_energy * to_ghz)),
            ),
            inductance: Some(
                cfg.effective_inductance
                    .unwrap_or_else(|| inductance_from_energy(self.inductive_energy * to_ghz)),
            ),
            ej_ghz: None,
        };
        let rate = |ch: Channel, m: f64, ctx: &ChannelContext| -> Result<f64> {
            if m == 0.0 {
                return Ok(0.0);
            }
            let s = spectral_density(ch, omega, cfg, ctx).map_err(|e| tag(ch.name(), e))?;
            let r = golden_rule_rate(m, s);
            if r.is_finite() {
                Ok(r)
            } else {
                Err(Error::NumericalFailure(format!(
                    "{}: non-finite rate",
                    ch.name()
                )))
            }
        };

        let n_el = self.charge[(lower, upper)].norm();
        let dielectric = rate(Channel::Dielectric, 2.0 * ELECTRON_CHARGE * n_el, &ctx)?;
        let phi_el = self.phase[(lower, upper)].norm();
        let inductive = if self.inductive_energy > 0.0 || cfg.effective_inductance.is_some() {
            rate(Channel::Inductive, FLUX_QUANTUM / (2.0 * PI) * phi_el, &ctx)?
        } else {
            0.0
        };
        let d_bias = self.dh_bias[(lower, upper)].norm() * joule / FLUX_QUANTUM;
        let d_ctrl = self.dh_ctrl[(lower, upper)].norm() * joule / FLUX_QUANTUM;
        let fbl_bias = rate(Channel::OhmicFlux(FluxLoop::Bias), d_bias, &ctx)?;
        let fbl_ctrl = rate(Channel::OhmicFlux(FluxLoop::Ctrl), d_ctrl, &ctx)?;
        let mut qp = 0.0;
        for (m, ej) in &self.sin_half {
            if *ej <= 0.0 {
                continue;
            }
            let c = ChannelContext {
                ej_ghz: Some(ej * to_ghz),
                ..ctx
            };
            qp += rate(
                Channel::Quasiparticle,
                FLUX_QUANTUM / PI * m[(lower, upper)].norm(),
                &c,
            )?;
        }
        let p = purcell_from_elements(f_hz / 1e9, n_el, res, cfg.loaded_q_resonator)
            .map_err(|e| tag("purcell", e))?;
        let f_bias = rate(Channel::OneOverF, d_bias, &ctx)?;
        let f_ctrl = rate(Channel::OneOverF, d_ctrl, &ctx)?;

        Ok(T1Budget::from_rates(
            f_hz / 1e9,
            [
                dielectric, inductive, fbl_bias, fbl_ctrl, qp, p.rate, f_bias, f_ctrl,
            ],
            p.near_resonant,
        ))
    }
}

fn tag(channel: &str, e: Error) -> Error {
    if e.is_numerical() {
        Error::NumericalFailure(format!("{channel}: {e}"))
    } else {
        e
    }
}

/// Operator matrix elements of the cos(2φ) circuit between its lowest `levels` states.
pub fn circuit_couplings(
    params: &CircuitParams,
    flux: &FluxBias,
    opts: &HamiltonianOptions,
    levels: usize,
) -> Result<CouplingMatrices> {
    params.validate()?;
    let (eig, h) = solve(params, flux, opts, levels)?;
    let ctx = OperatorContext {
        params,
        flux,
        options: *opts,
    };
    let charge =
        operator_matrix(&eig, OperatorKind::ChargeN, &ctx).map_err(|e| tag("dielectric", e))?;
    let phase =
        operator_matrix(&eig, OperatorKind::PhasePhi, &ctx).map_err(|e| tag("inductive", e))?;
    let (left, right) = params.arms(flux.phi_ctrl);
    let mut sin_half = Vec::new();
    for (arm, offset) in [(left, 0.0), (right, flux.right_arm_shift())] {
        if arm.ej_sigma > 0.0 {
            let m = operator_matrix(&eig, OperatorKind::SinHalfPhase { offset }, &ctx)
                .map_err(|e| tag("quasiparticle", e))?;
            sin_half.push((m, arm.ej_sigma));
        }
    }
    let grid_opts = HamiltonianOptions {
        fixed_grid: Some(h.potential.grid),
        ..*opts
    };
    let dctx = OperatorContext {
        options: grid_opts,
        ..ctx
    };
    let dh_bias = project(
        &eig,
        &flux_derivative(&dctx, FluxAxis::Bias).map_err(|e| tag("fbl_ohmic_bias", e))?,
    );
    let dh_ctrl = project(
        &eig,
        &flux_derivative(&dctx, FluxAxis::Ctrl).map_err(|e| tag("fbl_ohmic_ctrl", e))?,
    );
    Ok(CouplingMatrices {
        unit_hz: 1e9,
        energies: eig.energies.clone(),
        charge,
        phase,
        sin_half,
        dh_bias,
        dh_ctrl,
        charging_energy: params.ec,
        inductive_energy: h.potential.harmonic(2).magnitude(),
    })
}

/// Purcell rate with its proximity flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurcellRate {
    pub rate: f64,
    pub near_resonant: bool,
}

/// `κ (g01/Δ0)²` from a transition frequency (GHz) and charge element.
pub fn purcell_from_elements(
    f01: f64,
    n01: f64,
    res: &ResonatorParams,
    loaded_q: f64,
) -> Result<PurcellRate> {
    let detuning = 2.0 * PI * (f01 - res.f_res_bare) * 1e9;
    let g01 = 2.0 * PI * res.g_coupling * 1e9 * n01;
    if g01 == 0.0 || loaded_q.is_infinite() {
        return Ok(PurcellRate {
            rate: 0.0,
            near_resonant: detuning.abs() < NEAR_RESONANT_RATIO * g01,
        });
    }
    if detuning == 0.0 {
        return Err(Error::Divergence(format!(
            "qubit at {f01} GHz is resonant with the readout resonator"
        )));
    }
    let kappa = 2.0 * PI * res.f_res_bare * 1e9 / loaded_q;
    Ok(PurcellRate {
        rate: kappa * (g01 / detuning).powi(2),
        near_resonant: detuning.abs() < NEAR_RESONANT_RATIO * g01,
    })
}

/// Purcell decay of the 1 → 0 transition at an operating point.
pub fn purcell_rate(
    params: &CircuitParams,
    flux: &FluxBias,
    res: &ResonatorParams,
    cfg: &NoiseConfig,
) -> Result<PurcellRate> {
    purcell_rate_with(params, flux, res, cfg, &HamiltonianOptions::default())
}

pub fn purcell_rate_with(
    params: &CircuitParams,
    flux: &FluxBias,
    res: &ResonatorParams,
    cfg: &NoiseConfig,
    opts: &HamiltonianOptions,
) -> Result<PurcellRate> {
    res.validate()?;
    let (eig, _) = solve(params, flux, opts, 2)?;
    let ctx = OperatorContext {
        params,
        flux,
        options: *opts,
    };
    let n = operator_matrix(&eig, OperatorKind::ChargeN, &ctx)?;
    purcell_from_elements(eig.f01(), n[(0, 1)].norm(), res, cfg.loaded_q_resonator)
}

/// Relaxation budget of the first excited state.
pub fn t1_budget(
    params: &CircuitParams,
    flux: &FluxBias,
    res: &ResonatorParams,
    cfg: &NoiseConfig,
) -> Result<T1Budget> {
    t1_budget_with(params, flux, res, cfg, &HamiltonianOptions::default())
}

pub fn t1_budget_with(
    params: &CircuitParams,
    flux: &FluxBias,
    res: &ResonatorParams,
    cfg: &NoiseConfig,
    opts: &HamiltonianOptions,
) -> Result<T1Budget> {
    cfg.validate()?;
    res.validate()?;
    let c = circuit_couplings(params, flux, opts, 2)?;
    c.transition_budget(1, 0, res, cfg)
}

/// [`t1_budget_with`] at every grid point, in grid order. Failures are kept per point.
pub fn t1_sweep(
    params: &CircuitParams,
    grid: &[FluxBias],
    res: &ResonatorParams,
    cfg: &NoiseConfig,
    opts: &HamiltonianOptions,
) -> Vec<Result<T1Budget>> {
    grid.par_iter()
        .map(|f| t1_budget_with(params, f, res, cfg, opts))
        .collect()
}
