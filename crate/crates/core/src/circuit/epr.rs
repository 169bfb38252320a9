//! Energy-phase relations of the composite junction arms.
//!
//! Energies are E/h in GHz and phases are in radians unless a name says
//! otherwise.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two junctions in series reduced to a single effective SNS-like element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveArm {
    pub ej_sigma: f64,
    pub tau: f64,
}

impl EffectiveArm {
    /// An arm that contributes nothing to the potential.
    pub const OPEN: EffectiveArm = EffectiveArm {
        ej_sigma: 0.0,
        tau: 0.0,
    };

    pub fn is_open(&self) -> bool {
        self.ej_sigma == 0.0
    }
}

/// Combine two series junctions into `(E_JΣ, τ)`.
pub fn effective_arm(ej_a: f64, ej_b: f64) -> Result<EffectiveArm> {
    if !(ej_a >= 0.0 && ej_b >= 0.0) || !ej_a.is_finite() || !ej_b.is_finite() {
        return Err(Error::InvalidArm(format!(
            "junction energies must be finite and non-negative, got ({ej_a}, {ej_b})"
        )));
    }
    let sum = ej_a + ej_b;
    if sum == 0.0 {
        return Err(Error::InvalidArm("both junction energies are zero".into()));
    }
    let tau = (4.0 * ej_a * ej_b / (sum * sum)).clamp(0.0, 1.0);
    Ok(EffectiveArm { ej_sigma: sum, tau })
}

/// Result of reducing the small SQUID (junctions 4 and 5) to one junction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallSquid {
    pub ej45_eff: f64,
    /// Junction asymmetry `(E_J4 − E_J5)/(E_J4 + E_J5)`.
    pub d: f64,
    /// Phase offset the small loop adds to the right arm, radians.
    pub delta: f64,
}

/// Effective energy, asymmetry and phase offset of the small SQUID.
///
/// `phi_s` is the small-loop flux in units of Φ0. The flux modulation uses
/// `cos(π Φ_S/Φ0)`, the standard two-junction SQUID result.
pub fn small_squid(ej4: f64, ej5: f64, phi_s: f64) -> Result<SmallSquid> {
    if !(ej4 >= 0.0 && ej5 >= 0.0) || ej4 + ej5 <= 0.0 {
        return Err(Error::InvalidArm(format!(
            "small SQUID needs E_J4 + E_J5 > 0 with both non-negative, got ({ej4}, {ej5})"
        )));
    }
    let d = squid_asymmetry(ej4, ej5);
    let x = PI * phi_s;
    let ej45_eff = (ej4 + ej5) * (x.cos().powi(2) + d * d * x.sin().powi(2)).sqrt();
    Ok(SmallSquid {
        ej45_eff,
        d,
        delta: phase_offset(d, phi_s),
    })
}

pub fn squid_asymmetry(ej4: f64, ej5: f64) -> f64 {
    (ej4 - ej5) / (ej4 + ej5)
}

/// `δ = φ_S/2 + arctan(d·tan(φ_S/2))` on the branch continuous in `φ_S`.
///
/// The continuous branch of `arctan(d tan x)` stays within π/2 of `x`, which
/// picks the right multiple of 2π for `atan2`.
pub fn phase_offset(d: f64, phi_s: f64) -> f64 {
    let half = PI * phi_s;
    let raw = (d * half.sin()).atan2(half.cos());
    let branch = raw + 2.0 * PI * ((half - raw) / (2.0 * PI)).round();
    half + branch
}

/// `−E_JΣ √(1 − τ sin²(φ/2))`.
pub fn sns_epr(arm: EffectiveArm, phi: f64) -> f64 {
    -arm.ej_sigma * sns_root(arm.tau, phi)
}

/// `√(1 − τ sin²(φ/2))`, clamped at zero against rounding when τ = 1.
pub fn sns_root(tau: f64, phi: f64) -> f64 {
    let s = (0.5 * phi).sin();
    (1.0 - tau * s * s).max(0.0).sqrt()
}

/// Born–Oppenheimer correction from the island between the series junctions.
pub fn internal_mode_epr(arm: EffectiveArm, ec_int: f64, phi: f64) -> f64 {
    if ec_int == 0.0 || arm.is_open() {
        return 0.0;
    }
    let e = arm.ej_sigma;
    e * ((2.0 * ec_int / e) * sns_root(arm.tau, phi)).sqrt()
}
