//! Current-to-flux cross-talk: the linear map, its inverse, and its
//! recovery from periodic two-dimensional current sweeps.

pub mod heatmap;
pub mod lattice;
pub mod synth;

use serde::{Deserialize, Serialize};

use crate::circuit::FluxBias;
use crate::error::{Error, Result};

pub use heatmap::Heatmap;
pub use lattice::{detect_lattice, reduce_basis, KernelRegion, Lattice, LatticeOptions};

/// Lattice vectors closer than this angle cannot be inverted reliably, degrees.
pub const MIN_LATTICE_ANGLE_DEG: f64 = 5.0;
/// Loop modulations closer than this fraction are reported as ambiguous.
pub const AMBIGUITY_FRACTION: f64 = 0.1;
/// Integer range searched for loop rows in the reciprocal lattice basis.
const SEARCH: i32 = 8;

/// Rows `(Φ̃_B, Φ_S)`, columns `(I_FBL, I_coil)`, in Φ0/mA, plus offsets in Φ0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkMatrix {
    pub m: [[f64; 2]; 2],
    #[serde(default)]
    pub offset: [f64; 2],
}

impl CrosstalkMatrix {
    /// Calibration of the measured device.
    pub fn paper() -> Self {
        CrosstalkMatrix {
            m: [[0.0993, 0.0307], [0.14225, 0.03525]],
            offset: [0.0, 0.0],
        }
    }

    pub fn determinant(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .m
            .iter()
            .flatten()
            .chain(self.offset.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::validation("crosstalk", "entries must be finite"));
        }
        if self.determinant() == 0.0 {
            return Err(Error::validation("crosstalk", "matrix is singular"));
        }
        Ok(())
    }

    /// Currents giving the requested `(Φ̃_B, Φ_S)`.
    pub fn currents_for(&self, phi_b_tilde: f64, phi_s: f64) -> (f64, f64) {
        let det = self.determinant();
        let (x, y) = (phi_b_tilde - self.offset[0], phi_s - self.offset[1]);
        (
            (self.m[1][1] * x - self.m[0][1] * y) / det,
            (self.m[0][0] * y - self.m[1][0] * x) / det,
        )
    }

    /// Columns of the inverse: currents for one quantum of `Φ̃_B` and of `Φ_S`.
    pub fn flux_quantum_vectors(&self) -> ([f64; 2], [f64; 2]) {
        let (a, b) = self.currents_for(1.0 + self.offset[0], self.offset[1]);
        let (c, d) = self.currents_for(self.offset[0], 1.0 + self.offset[1]);
        ([a, b], [c, d])
    }

    /// Currents for one quantum of the raw loop fluxes `Φ_B = Φ̃_B + Φ_S/2`
    /// and `Φ_S`. These generate the periodicity lattice of the device.
    pub fn raw_lattice_vectors(&self) -> ([f64; 2], [f64; 2]) {
        let (b, s) = self.flux_quantum_vectors();
        ([b[0], b[1]], [s[0] - 0.5 * b[0], s[1] - 0.5 * b[1]])
    }

    /// Matrix in the intermediate basis from the raw loop lattice vectors.
    pub fn from_raw_lattice(v_b: [f64; 2], v_s: [f64; 2]) -> Result<Self> {
        // loop vectors of a strongly sheared map are close to parallel even
        // when the lattice itself is well conditioned
        let raw = lattice_to_matrix_with(v_b, v_s, 0.0)?;
        let [b, s] = raw.m;
        Ok(CrosstalkMatrix {
            m: [[b[0] - 0.5 * s[0], b[1] - 0.5 * s[1]], s],
            offset: [0.0, 0.0],
        })
    }
}

/// `(Φ̃_B, Φ_S)` for the given currents in mA. Only the `Φ_S/2` part of the
/// SQUID offset is compensated in `Φ̃_B`; see [`rebase_flux`].
pub fn apply_crosstalk(m: &CrosstalkMatrix, fbl_ma: f64, coil_ma: f64) -> (f64, f64) {
    (
        m.m[0][0] * fbl_ma + m.m[0][1] * coil_ma + m.offset[0],
        m.m[1][0] * fbl_ma + m.m[1][1] * coil_ma + m.offset[1],
    )
}

/// `Φ_bias = Φ̃_B + Φ_S/2 − δ/2π`, centring the sweet spot on 0.5 Φ0.
pub fn rebase_flux(phi_b_tilde: f64, phi_s: f64, d: f64) -> FluxBias {
    FluxBias::from_raw(phi_b_tilde + 0.5 * phi_s, phi_s, d)
}

/// Matrix mapping `v1` to one bias flux quantum and `v2` to one control flux quantum.
pub fn lattice_to_matrix(v1: [f64; 2], v2: [f64; 2]) -> Result<CrosstalkMatrix> {
    lattice_to_matrix_with(v1, v2, MIN_LATTICE_ANGLE_DEG)
}

/// [`lattice_to_matrix`] with an explicit minimum angle between the vectors, degrees.
pub fn lattice_to_matrix_with(
    v1: [f64; 2],
    v2: [f64; 2],
    min_angle_deg: f64,
) -> Result<CrosstalkMatrix> {
    let det = v1[0] * v2[1] - v1[1] * v2[0];
    let n1 = v1[0].hypot(v1[1]);
    let n2 = v2[0].hypot(v2[1]);
    if !(n1 > 0.0 && n2 > 0.0 && det.is_finite()) {
        return Err(Error::validation(
            "lattice",
            "vectors must be finite and nonzero",
        ));
    }
    let sin = (det / (n1 * n2)).abs().min(1.0);
    let angle = sin.asin().to_degrees();
    if angle < min_angle_deg || det == 0.0 {
        return Err(Error::IllConditioned { angle_deg: angle });
    }
    Ok(CrosstalkMatrix {
        m: [[v2[1] / det, -v2[0] / det], [-v1[1] / det, v1[0] / det]],
        offset: [0.0, 0.0],
    })
}

/// Loop-assigned result of a calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkCalibration {
    pub matrix: CrosstalkMatrix,
    pub lattice: Lattice,
    /// Currents adding one flux quantum to the raw big loop, mA.
    pub v_bias: [f64; 2],
    /// Currents adding one flux quantum to the SQUID loop at fixed raw big-loop flux, mA.
    pub v_ctrl: [f64; 2],
    /// Fourier amplitude of the map along the bias direction (second harmonic).
    pub modulation_bias: f64,
    /// Fundamental Fourier amplitude along the control direction.
    pub modulation_ctrl: f64,
}

/// Amplitude of the Hann-windowed, mean-subtracted map at wavevector `k`
/// (cycles per mA), normalized so a pure cosine of unit amplitude gives ½.
pub fn fourier_amplitude(h: &Heatmap, k: [f64; 2]) -> f64 {
    let samples = lattice::windowed_samples(h);
    amplitude_of(&samples, h, k)
}

fn amplitude_of(samples: &[(f64, f64, f64)], h: &Heatmap, k: [f64; 2]) -> f64 {
    let weight: f64 = h.values.iter().flatten().flatten().count() as f64 * 0.25;
    lattice::dtft_amplitude(samples, k) / weight
}

fn gcd(a: i32, b: i32) -> i32 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// `(x, y)` with `a·y − b·x = 1` for coprime `a, b`.
fn unimodular_partner(a: i32, b: i32) -> (i32, i32) {
    // extended Euclid on (a, b): s·a + t·b = 1
    let (mut r0, mut r1, mut s0, mut s1, mut t0, mut t1) = (a, b, 1, 0, 0, 1);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    let sign = r0.signum();
    (-t0 * sign, s0 * sign)
}

/// Assigns the detected lattice to the two loops.
///
/// The lattice of the map is the set of currents changing both raw loop
/// fluxes by whole flux quanta; its reciprocal vectors are integer
/// combinations of the rows of the raw matrix. The strongest primitive
/// Fourier component of the map is taken as the control row. In the
/// intermediate basis `Φ̃_B = Φ_B − Φ_S/2` the bias row `b` then satisfies
/// `b + ½·ctrl ∈` reciprocal lattice; among those candidates the one whose
/// pure-bias mode `2b` is strongest is chosen. Rows are signed so that the
/// FBL coefficient is positive.
pub fn assign_loops(h: &Heatmap, lattice: &Lattice) -> Result<CrosstalkCalibration> {
    let (v1, v2) = (lattice.v1, lattice.v2);
    let det = v1[0] * v2[1] - v1[1] * v2[0];
    if det == 0.0 || !det.is_finite() {
        return Err(Error::IllConditioned { angle_deg: 0.0 });
    }
    let r1 = [v2[1] / det, -v2[0] / det];
    let r2 = [-v1[1] / det, v1[0] / det];
    let samples = lattice::windowed_samples(h);
    let amp = |k: [f64; 2]| amplitude_of(&samples, h, k);
    let comb = |p: f64, q: f64| [p * r1[0] + q * r2[0], p * r1[1] + q * r2[1]];

    let mut ctrl = (f64::NEG_INFINITY, 0, 0);
    for p in 0i32..=SEARCH {
        for q in -SEARCH..=SEARCH {
            if (p == 0 && q <= 0) || gcd(p, q) != 1 {
                continue;
            }
            let a = amp(comb(p as f64, q as f64));
            if a > ctrl.0 {
                ctrl = (a, p, q);
            }
        }
    }
    let (a_ctrl, p, q) = ctrl;
    let g = comb(p as f64, q as f64);
    let (x0, y0) = unimodular_partner(p, q);

    let mut bias = (f64::NEG_INFINITY, [0.0; 2]);
    for n in -SEARCH..=SEARCH {
        for sign in [1.0, -1.0] {
            let hb = comb(sign * (x0 + n * p) as f64, sign * (y0 + n * q) as f64);
            let row = [hb[0] - 0.5 * g[0], hb[1] - 0.5 * g[1]];
            let a = amp([2.0 * row[0], 2.0 * row[1]]);
            if a > bias.0 {
                bias = (a, row);
            }
        }
    }
    let (a_bias, row0) = bias;
    if (a_ctrl - a_bias).abs() < AMBIGUITY_FRACTION * a_ctrl.max(a_bias) {
        return Err(Error::AmbiguousAssignment {
            first: a_ctrl,
            second: a_bias,
        });
    }
    let positive = |r: [f64; 2]| if r[0] < 0.0 { [-r[0], -r[1]] } else { r };
    let matrix = CrosstalkMatrix {
        m: [positive(row0), positive(g)],
        offset: [0.0, 0.0],
    };
    let (v_bias, v_ctrl) = matrix.raw_lattice_vectors();
    Ok(CrosstalkCalibration {
        matrix,
        lattice: *lattice,
        v_bias,
        v_ctrl,
        modulation_bias: a_bias,
        modulation_ctrl: a_ctrl,
    })
}

/// Lattice detection followed by loop assignment.
pub fn calibrate_crosstalk(
    h: &Heatmap,
    kernel: &KernelRegion,
    opts: &LatticeOptions,
) -> Result<CrosstalkCalibration> {
    let lattice = detect_lattice(h, kernel, opts)?;
    assign_loops(h, &lattice)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_matrix_columns() {
        let m = CrosstalkMatrix::paper();
        assert_eq!(apply_crosstalk(&m, 0.0, 0.0), (0.0, 0.0));
        assert_eq!(apply_crosstalk(&m, 1.0, 0.0), (0.0993, 0.14225));
        assert_eq!(apply_crosstalk(&m, 0.0, 1.0), (0.0307, 0.03525));
        let (i, c) = m.currents_for(0.3, -0.2);
        let (a, b) = apply_crosstalk(&m, i, c);
        assert!((a - 0.3).abs() < 1e-13 && (b + 0.2).abs() < 1e-13);
    }

    #[test]
    fn lattice_inversion_round_trip() {
        let id = lattice_to_matrix([1.0, 0.0], [0.0, 1.0]).unwrap();
        assert_eq!(id.m, [[1.0, 0.0], [0.0, 1.0]]);
        let m = CrosstalkMatrix::paper();
        let (v1, v2) = m.flux_quantum_vectors();
        assert!(matches!(
            lattice_to_matrix(v1, v2),
            Err(Error::IllConditioned { .. })
        ));
        let back = lattice_to_matrix_with(v1, v2, 0.0).unwrap();
        let (rb, rs) = m.raw_lattice_vectors();
        let again = CrosstalkMatrix::from_raw_lattice(rb, rs).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert!((again.m[r][c] - m.m[r][c]).abs() < 1e-10);
            }
        }
        for r in 0..2 {
            for c in 0..2 {
                assert!((back.m[r][c] - m.m[r][c]).abs() < 1e-10);
            }
        }
        let a = 3f64.to_radians();
        assert!(matches!(
            lattice_to_matrix([1.0, 0.0], [a.cos(), a.sin()]),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn unimodular_partners() {
        for (a, b) in [(1, 0), (0, 1), (2, 3), (3, -2), (1, -4), (4, 1)] {
            let (x, y) = unimodular_partner(a, b);
            assert_eq!(a * y - b * x, 1, "{a},{b}");
        }
    }

    #[test]
    fn rebase_with_symmetric_squid_is_identity() {
        for (b, s) in [(0.1, 0.2), (0.5, 0.378), (-0.3, -0.45)] {
            let f = rebase_flux(b, s, 0.0);
            assert!((f.phi_bias - b).abs() < 1e-15);
        }
        // past half a flux quantum the sign of cos(πΦ_S) is carried by a half-period shift
        let f = rebase_flux(-0.3, 0.9, 0.0);
        assert!((f.phi_bias + 0.8).abs() < 1e-15);
    }
}
