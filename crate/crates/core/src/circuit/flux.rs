use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::epr::phase_offset;

/// Operating point of the two loops.
///
/// `phi_bias` is the rebased big-loop flux whose symmetry point sits at
/// 0.5 Φ0; `phi_ctrl` is the small-loop flux Φ_S. The raw big-loop flux is
/// `Φ_B = Φ_bias + δ·Φ0/2π`. All fluxes are in units of Φ0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxBias {
    pub phi_bias: f64,
    pub phi_ctrl: f64,
    pub delta: f64,
    pub phi_b_raw: f64,
}

impl FluxBias {
    /// Build from rebased coordinates given the small-SQUID asymmetry `d`.
    pub fn new(phi_bias: f64, phi_ctrl: f64, d: f64) -> Self {
        let delta = phase_offset(d, phi_ctrl);
        FluxBias {
            phi_bias,
            phi_ctrl,
            delta,
            phi_b_raw: phi_bias + delta / (2.0 * PI),
        }
    }

    /// Build from the raw big-loop flux Φ_B.
    pub fn from_raw(phi_b_raw: f64, phi_ctrl: f64, d: f64) -> Self {
        let delta = phase_offset(d, phi_ctrl);
        FluxBias {
            phi_bias: phi_b_raw - delta / (2.0 * PI),
            phi_ctrl,
            delta,
            phi_b_raw,
        }
    }

    /// Same loops, different rebased bias.
    pub fn with_bias(&self, phi_bias: f64) -> Self {
        FluxBias {
            phi_bias,
            phi_b_raw: phi_bias + self.delta / (2.0 * PI),
            ..*self
        }
    }

    /// Phase shift of the right arm relative to the left, radians.
    ///
    /// In rebased coordinates this is `2π Φ_bias`, i.e. `φ_B − δ`.
    pub fn right_arm_shift(&self) -> f64 {
        2.0 * PI * self.phi_bias
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn symmetric_squid_offset_is_half_flux() {
        let f = FluxBias::new(0.5, 0.378, 0.0);
        assert!((f.delta - PI * 0.378).abs() < 1e-15);
        assert!((f.phi_b_raw - (0.5 + 0.189)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn raw_rebased_round_trip(raw in -3.0f64..3.0, ctrl in -2.0f64..2.0, d in -0.95f64..0.95) {
            let f = FluxBias::from_raw(raw, ctrl, d);
            let g = FluxBias::new(f.phi_bias, ctrl, d);
            prop_assert!((g.phi_b_raw - raw).abs() < 1e-12);
            prop_assert!((g.delta - f.delta).abs() < 1e-15);
        }
    }
}
