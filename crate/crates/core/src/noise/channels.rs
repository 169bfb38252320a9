//! Spectral densities of the six noise sources, in SI units.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::bessel::k0_sinh;
use crate::constants::{
    BOLTZMANN_KB, ELECTRON_CHARGE, FLUX_QUANTUM, HBAR, JOULE_PER_GHZ, PLANCK_H, RESISTANCE_QUANTUM,
};
use crate::error::{Error, Result};

/// Reference frequency of the capacitive quality factor, Hz.
pub const Q_CAP_REFERENCE_HZ: f64 = 6e9;
/// Reference frequency of the inductive quality factor, Hz.
pub const Q_IND_REFERENCE_HZ: f64 = 0.5e9;

/// Environment and loss parameters shared by all channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Capacitive quality factor at 6 GHz.
    pub q_cap_ref: f64,
    pub alpha_cap: f64,
    /// Inductive quality factor at 0.5 GHz.
    pub q_ind_ref: f64,
    /// Mutual inductance to the bias loop, Φ0/A.
    pub mutual_inductance_bias: f64,
    /// Mutual inductance to the control loop, Φ0/A.
    pub mutual_inductance_ctrl: f64,
    /// Ω.
    pub bias_line_impedance: f64,
    pub x_qp: f64,
    /// Superconducting gap Δ/h, GHz.
    pub gap_delta: f64,
    /// 1/f flux-noise amplitude, Φ0.
    pub a_one_over_f: f64,
    /// K.
    pub temperature: f64,
    pub loaded_q_resonator: f64,
    /// Overrides the capacitance derived from E_C, F.
    pub effective_capacitance: Option<f64>,
    /// Overrides the inductance derived from the potential, H.
    pub effective_inductance: Option<f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            q_cap_ref: 1e5,
            alpha_cap: 0.7,
            q_ind_ref: 5e8,
            mutual_inductance_bias: 1800.0,
            mutual_inductance_ctrl: 1800.0,
            bias_line_impedance: 50.0,
            x_qp: 7e-10,
            gap_delta: 44.0,
            a_one_over_f: 1.5e-5,
            temperature: 0.040,
            loaded_q_resonator: 1e4,
            effective_capacitance: None,
            effective_inductance: None,
        }
    }
}

impl NoiseConfig {
    /// Quality factors may be infinite and amplitudes zero, which switches
    /// the corresponding channel off.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("bias_line_impedance", self.bias_line_impedance),
            ("gap_delta", self.gap_delta),
            ("temperature", self.temperature),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(
                    name,
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        }
        for (name, v) in [
            ("q_cap_ref", self.q_cap_ref),
            ("q_ind_ref", self.q_ind_ref),
            ("loaded_q_resonator", self.loaded_q_resonator),
        ] {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::validation(name, format!("must be > 0, got {v}")));
            }
        }
        let amplitudes = [
            ("mutual_inductance_bias", self.mutual_inductance_bias),
            ("mutual_inductance_ctrl", self.mutual_inductance_ctrl),
            ("x_qp", self.x_qp),
            ("a_one_over_f", self.a_one_over_f),
            ("alpha_cap", self.alpha_cap),
        ];
        for (name, v) in amplitudes {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::validation(
                    name,
                    format!("must be finite and >= 0, got {v}"),
                ));
            }
        }
        for (name, v) in [
            ("effective_capacitance", self.effective_capacitance),
            ("effective_inductance", self.effective_inductance),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::validation(
                        name,
                        format!("must be finite and > 0, got {v}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Every loss mechanism switched off.
    pub fn lossless() -> Self {
        NoiseConfig {
            q_cap_ref: f64::INFINITY,
            q_ind_ref: f64::INFINITY,
            mutual_inductance_bias: 0.0,
            mutual_inductance_ctrl: 0.0,
            x_qp: 0.0,
            a_one_over_f: 0.0,
            loaded_q_resonator: f64::INFINITY,
            ..Default::default()
        }
    }

    /// `ħ|ω|/2k_BT`.
    pub fn thermal_ratio(&self, omega: f64) -> f64 {
        HBAR * omega.abs() / (2.0 * BOLTZMANN_KB * self.temperature)
    }

    fn coth(&self, omega: f64) -> f64 {
        1.0 / self.thermal_ratio(omega).tanh()
    }
}

/// Flux loop a flux-noise channel couples through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FluxLoop {
    Bias,
    Ctrl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    Dielectric,
    Inductive,
    OhmicFlux(FluxLoop),
    Quasiparticle,
    OneOverF,
}

impl Channel {
    pub fn name(&self) -> &'static str {
        match self {
            Channel::Dielectric => "dielectric",
            Channel::Inductive => "inductive",
            Channel::OhmicFlux(FluxLoop::Bias) => "fbl_ohmic_bias",
            Channel::OhmicFlux(FluxLoop::Ctrl) => "fbl_ohmic_ctrl",
            Channel::Quasiparticle => "quasiparticle",
            Channel::OneOverF => "one_over_f",
        }
    }
}

/// Circuit-dependent inputs some densities need.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChannelContext {
    /// F.
    pub capacitance: Option<f64>,
    /// H.
    pub inductance: Option<f64>,
    /// Josephson energy of the junction carrying quasiparticles, GHz.
    pub ej_ghz: Option<f64>,
}

/// Capacitive quality factor `A_cap (2π·6 GHz/|ω|)^α`.
pub fn q_cap(omega: f64, cfg: &NoiseConfig) -> f64 {
    cfg.q_cap_ref * (2.0 * PI * Q_CAP_REFERENCE_HZ / omega.abs()).powf(cfg.alpha_cap)
}

/// Inductive quality factor referenced to `A_ind` at 0.5 GHz.
pub fn q_ind(omega: f64, cfg: &NoiseConfig) -> f64 {
    let x_ref = PLANCK_H * Q_IND_REFERENCE_HZ / (2.0 * BOLTZMANN_KB * cfg.temperature);
    let x = cfg.thermal_ratio(omega);
    cfg.q_ind_ref * k0_sinh(x_ref) / k0_sinh(x)
}

/// Dissipative part of the quasiparticle admittance, S.
pub fn quasiparticle_admittance(omega: f64, ej_ghz: f64, cfg: &NoiseConfig) -> f64 {
    let w = omega.abs();
    let ej = ej_ghz * JOULE_PER_GHZ;
    let gap = cfg.gap_delta * JOULE_PER_GHZ;
    let x = cfg.thermal_ratio(w);
    cfg.x_qp * (2.0 / PI).sqrt() * 8.0 * ej / (RESISTANCE_QUANTUM * gap)
        * (2.0 * gap / (HBAR * w)).powf(1.5)
        * x.sqrt()
        * k0_sinh(x)
}

/// Capacitance corresponding to a charging energy `E_C = e²/2C`, F.
pub fn capacitance_from_ec(ec_ghz: f64) -> f64 {
    ELECTRON_CHARGE * ELECTRON_CHARGE / (2.0 * ec_ghz * JOULE_PER_GHZ)
}

/// Inductance corresponding to an energy `(Φ0/2π)²/L`, H.
pub fn inductance_from_energy(e_ghz: f64) -> f64 {
    let phi0_red = FLUX_QUANTUM / (2.0 * PI);
    phi0_red * phi0_red / (e_ghz * JOULE_PER_GHZ)
}

/// Noise spectral density at angular frequency `omega` (rad/s).
///
/// Thermal factors use `|ω|`, so these are the symmetrized densities that
/// enter the relaxation rate. See [`spectral_density_signed`] for the
/// emission/absorption split.
pub fn spectral_density(
    channel: Channel,
    omega: f64,
    cfg: &NoiseConfig,
    ctx: &ChannelContext,
) -> Result<f64> {
    if omega == 0.0 || !omega.is_finite() {
        return Err(Error::validation(
            "omega",
            format!("must be finite and nonzero, got {omega}"),
        ));
    }
    let w = omega.abs();
    let s = match channel {
        Channel::Dielectric => {
            let c = ctx.capacitance.ok_or(Error::MissingContext {
                channel: "dielectric",
                what: "capacitance",
            })?;
            HBAR / (c * q_cap(w, cfg)) * cfg.coth(w)
        }
        Channel::Inductive => {
            let l = ctx.inductance.ok_or(Error::MissingContext {
                channel: "inductive",
                what: "inductance",
            })?;
            HBAR / (l * q_ind(w, cfg)) * cfg.coth(w)
        }
        Channel::OhmicFlux(which) => {
            let m = mutual_inductance_si(cfg, which);
            m * m * w * HBAR / cfg.bias_line_impedance * cfg.coth(w)
        }
        Channel::Quasiparticle => {
            let ej = ctx.ej_ghz.ok_or(Error::MissingContext {
                channel: "quasiparticle",
                what: "ej_ghz",
            })?;
            HBAR * w * quasiparticle_admittance(w, ej, cfg) * cfg.coth(w)
        }
        Channel::OneOverF => {
            let a = cfg.a_one_over_f * FLUX_QUANTUM;
            2.0 * PI * a * a / w
        }
    };
    Ok(s)
}

/// Quantum density with `S(ω)/S(−ω) = exp(ħω/k_BT)` whose symmetric part is
/// [`spectral_density`]. Positive `ω` is emission into the bath. Not defined
/// for the classical 1/f channel.
pub fn spectral_density_signed(
    channel: Channel,
    omega: f64,
    cfg: &NoiseConfig,
    ctx: &ChannelContext,
) -> Result<f64> {
    if channel == Channel::OneOverF {
        return Err(Error::validation(
            "channel",
            "1/f density has no thermal factor to split",
        ));
    }
    let sym = spectral_density(channel, omega, cfg, ctx)?;
    let x = HBAR * omega / (2.0 * BOLTZMANN_KB * cfg.temperature);
    Ok(sym * (1.0 + x.tanh()))
}

pub(crate) fn mutual_inductance_si(cfg: &NoiseConfig, which: FluxLoop) -> f64 {
    let m = match which {
        FluxLoop::Bias => cfg.mutual_inductance_bias,
        FluxLoop::Ctrl => cfg.mutual_inductance_ctrl,
    };
    m * FLUX_QUANTUM
}

/// Fermi's golden rule `|m|² S/ħ²`, s⁻¹.
pub fn golden_rule_rate(matrix_element: f64, s_value: f64) -> f64 {
    matrix_element * matrix_element * s_value / (HBAR * HBAR)
}
