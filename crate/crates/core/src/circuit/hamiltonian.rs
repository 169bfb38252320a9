//! Charge-basis Hamiltonian of the two-arm circuit.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::epr::{internal_mode_epr, sns_epr, squid_asymmetry, EffectiveArm};
use super::flux::FluxBias;
use super::fourier::{
    fourier_decompose, fourier_decompose_on_grid, Harmonic, PeriodicPotential, DEFAULT_TOL,
};
use crate::error::{Error, Result};

pub const DEFAULT_N_CHARGE: usize = 40;
pub const MIN_N_CHARGE: usize = 10;

/// Junction energies E_J1..E_J5 as E/h in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionSet {
    pub ej1: f64,
    pub ej2: f64,
    pub ej3: f64,
    pub ej4: f64,
    pub ej5: f64,
}

impl JunctionSet {
    /// Fitted energies of the measured device.
    pub const FITTED_DEVICE: JunctionSet = JunctionSet {
        ej1: 42.49,
        ej2: 53.9,
        ej3: 88.11,
        ej4: 35.73,
        ej5: 35.73,
    };

    pub fn as_array(&self) -> [f64; 5] {
        [self.ej1, self.ej2, self.ej3, self.ej4, self.ej5]
    }

    pub fn squid_asymmetry(&self) -> f64 {
        if self.ej4 + self.ej5 > 0.0 {
            squid_asymmetry(self.ej4, self.ej5)
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.as_array().iter().enumerate() {
            if !e.is_finite() || *e < 0.0 {
                return Err(Error::validation(
                    format!("ej{}", i + 1),
                    format!("must be finite and >= 0, got {e}"),
                ));
            }
        }
        Ok(())
    }
}

/// Full parameter set of the effective single-mode Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Shunt charging energy E_C/h, GHz.
    pub ec: f64,
    pub junctions: JunctionSet,
    /// Internal-mode charging energies; zero disables the correction.
    pub ec_int_left: f64,
    pub ec_int_right: f64,
    /// Offset charge in Cooper pairs, taken modulo 1.
    pub ng: f64,
}

impl CircuitParams {
    /// Measured device: fitted junction energies, E_C = 0.21 GHz, no internal-mode term.
    pub fn fitted_device() -> Self {
        CircuitParams {
            ec: 0.21,
            junctions: JunctionSet::FITTED_DEVICE,
            ec_int_left: 0.0,
            ec_int_right: 0.0,
            ng: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ec.is_finite() && self.ec > 0.0) {
            return Err(Error::validation(
                "ec",
                format!("must be > 0, got {}", self.ec),
            ));
        }
        self.junctions.validate()?;
        for (name, v) in [
            ("ec_int_left", self.ec_int_left),
            ("ec_int_right", self.ec_int_right),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::validation(name, format!("must be >= 0, got {v}")));
            }
        }
        if !self.ng.is_finite() {
            return Err(Error::validation("ng", "must be finite"));
        }
        Ok(())
    }

    /// Offset charge folded into [0, 1).
    pub fn ng_reduced(&self) -> f64 {
        self.ng.rem_euclid(1.0)
    }

    /// Flux bias at rebased coordinates using this device's SQUID asymmetry.
    pub fn flux(&self, phi_bias: f64, phi_ctrl: f64) -> FluxBias {
        FluxBias::new(phi_bias, phi_ctrl, self.junctions.squid_asymmetry())
    }

    /// Left and right effective arms at the given control flux.
    pub fn arms(&self, phi_ctrl: f64) -> (EffectiveArm, EffectiveArm) {
        let j = &self.junctions;
        let left = arm(j.ej1, j.ej2);
        let ej45 = j.ej4 + j.ej5;
        let ej45_eff = if ej45 > 0.0 {
            let d = squid_asymmetry(j.ej4, j.ej5);
            let x = std::f64::consts::PI * phi_ctrl;
            ej45 * (x.cos().powi(2) + d * d * x.sin().powi(2)).sqrt()
        } else {
            0.0
        };
        (left, arm(j.ej3, ej45_eff))
    }
}

fn arm(a: f64, b: f64) -> EffectiveArm {
    let sum = a + b;
    if sum <= 0.0 {
        EffectiveArm::OPEN
    } else {
        EffectiveArm {
            ej_sigma: sum,
            tau: (4.0 * a * b / (sum * sum)).clamp(0.0, 1.0),
        }
    }
}

/// The potential at a fixed operating point, with arms precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitPotential {
    pub left: EffectiveArm,
    pub right: EffectiveArm,
    pub ec_int_left: f64,
    pub ec_int_right: f64,
    /// Phase shift of the right arm, radians.
    pub shift: f64,
}

impl CircuitPotential {
    pub fn new(params: &CircuitParams, flux: &FluxBias) -> Self {
        let (left, right) = params.arms(flux.phi_ctrl);
        CircuitPotential {
            left,
            right,
            ec_int_left: params.ec_int_left,
            ec_int_right: params.ec_int_right,
            shift: flux.right_arm_shift(),
        }
    }

    pub fn eval(&self, phi: f64) -> f64 {
        let r = phi - self.shift;
        sns_epr(self.left, phi)
            + internal_mode_epr(self.left, self.ec_int_left, phi)
            + sns_epr(self.right, r)
            + internal_mode_epr(self.right, self.ec_int_right, r)
    }
}

/// Total potential U(φ) in GHz.
pub fn total_potential(params: &CircuitParams, flux: &FluxBias, phi: f64) -> f64 {
    CircuitPotential::new(params, flux).eval(phi)
}

/// Truncation and quadrature settings for [`build_hamiltonian_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianOptions {
    pub n_charge: usize,
    /// Harmonics kept in the potential; `None` keeps every harmonic the
    /// basis can represent (`2·n_charge`).
    pub max_harmonic: Option<usize>,
    pub tol: f64,
    /// Force a quadrature grid instead of converging one.
    pub fixed_grid: Option<usize>,
}

impl Default for HamiltonianOptions {
    fn default() -> Self {
        HamiltonianOptions {
            n_charge: DEFAULT_N_CHARGE,
            max_harmonic: None,
            tol: DEFAULT_TOL,
            fixed_grid: None,
        }
    }
}

impl HamiltonianOptions {
    pub fn with_n_charge(n_charge: usize) -> Self {
        HamiltonianOptions {
            n_charge,
            ..Default::default()
        }
    }

    pub fn harmonics(&self) -> usize {
        self.max_harmonic.unwrap_or(2 * self.n_charge)
    }
}

/// Hamiltonian matrix together with the decomposed potential it was built from.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub matrix: DMatrix<Complex64>,
    pub potential: PeriodicPotential,
    pub n_charge: usize,
    pub ng: f64,
}

pub fn build_hamiltonian(
    params: &CircuitParams,
    flux: &FluxBias,
    n_charge: usize,
) -> Result<DMatrix<Complex64>> {
    Ok(build_hamiltonian_with(params, flux, &HamiltonianOptions::with_n_charge(n_charge))?.matrix)
}

pub fn build_hamiltonian_with(
    params: &CircuitParams,
    flux: &FluxBias,
    opts: &HamiltonianOptions,
) -> Result<Hamiltonian> {
    if opts.n_charge < MIN_N_CHARGE {
        return Err(Error::validation(
            "n_charge",
            format!("must be >= {MIN_N_CHARGE}, got {}", opts.n_charge),
        ));
    }
    let pot = CircuitPotential::new(params, flux);
    let harmonics = opts.harmonics();
    let potential = match opts.fixed_grid {
        Some(grid) => fourier_decompose_on_grid(|x| pot.eval(x), harmonics, grid),
        None => fourier_decompose(|x| pot.eval(x), harmonics, opts.tol)?,
    };
    let matrix =
        hamiltonian_from_potential(params.ec, params.ng_reduced(), &potential, opts.n_charge);
    Ok(Hamiltonian {
        matrix,
        potential,
        n_charge: opts.n_charge,
        ng: params.ng_reduced(),
    })
}

/// `4E_C(n − n_g)²` on the diagonal and `(a_k ∓ i b_k)/2` on the ±k
/// off-diagonals for every harmonic `(k, a_k, b_k)` of the potential.
pub fn hamiltonian_from_potential(
    ec: f64,
    ng: f64,
    potential: &PeriodicPotential,
    n_charge: usize,
) -> DMatrix<Complex64> {
    let dim = 2 * n_charge + 1;
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    let dc = potential.harmonic(0).cos;
    for r in 0..dim {
        let n = r as f64 - n_charge as f64;
        h[(r, r)] = Complex64::new(4.0 * ec * (n - ng).powi(2) + dc, 0.0);
    }
    for harm in potential.coefficients.iter().skip(1) {
        let k = harm.n;
        if k >= dim {
            break;
        }
        // e^{ikφ} raises the charge by k
        let up = Complex64::new(0.5 * harm.cos, -0.5 * harm.sin);
        for col in 0..dim - k {
            h[(col + k, col)] += up;
            h[(col, col + k)] += up.conj();
        }
    }
    h
}

/// Both arm series at one control flux. Every bias point on the line then
/// costs only a phase rotation of the right arm.
#[derive(Debug, Clone)]
pub struct ControlLine {
    pub left: PeriodicPotential,
    pub right: PeriodicPotential,
    pub ec: f64,
    pub ng: f64,
    pub n_charge: usize,
}

impl ControlLine {
    pub fn new(params: &CircuitParams, phi_ctrl: f64, opts: &HamiltonianOptions) -> Result<Self> {
        params.validate()?;
        if opts.n_charge < MIN_N_CHARGE {
            return Err(Error::validation(
                "n_charge",
                format!("must be >= {MIN_N_CHARGE}, got {}", opts.n_charge),
            ));
        }
        let (left, right) = params.arms(phi_ctrl);
        let harmonics = opts.harmonics();
        let series = |arm: EffectiveArm, ec_int: f64| match opts.fixed_grid {
            Some(grid) => Ok(fourier_decompose_on_grid(
                |x| sns_epr(arm, x) + internal_mode_epr(arm, ec_int, x),
                harmonics,
                grid,
            )),
            None => fourier_decompose(
                |x| sns_epr(arm, x) + internal_mode_epr(arm, ec_int, x),
                harmonics,
                opts.tol,
            ),
        };
        Ok(ControlLine {
            left: series(left, params.ec_int_left)?,
            right: series(right, params.ec_int_right)?,
            ec: params.ec,
            ng: params.ng_reduced(),
            n_charge: opts.n_charge,
        })
    }

    /// Potential series with the right arm shifted by `2π·phi_bias`.
    pub fn potential(&self, phi_bias: f64) -> PeriodicPotential {
        let s = 2.0 * std::f64::consts::PI * phi_bias;
        let coefficients = self
            .left
            .coefficients
            .iter()
            .zip(&self.right.coefficients)
            .map(|(l, r)| {
                let (sn, cn) = (r.n as f64 * s).sin_cos();
                Harmonic {
                    n: l.n,
                    cos: l.cos + r.cos * cn - r.sin * sn,
                    sin: l.sin + r.cos * sn + r.sin * cn,
                }
            })
            .collect();
        PeriodicPotential {
            coefficients,
            max_harmonic: self.left.max_harmonic,
            grid: self.left.grid.max(self.right.grid),
            truncation_residual: self.left.truncation_residual + self.right.truncation_residual,
        }
    }

    pub fn hamiltonian(&self, phi_bias: f64) -> DMatrix<Complex64> {
        hamiltonian_from_potential(self.ec, self.ng, &self.potential(phi_bias), self.n_charge)
    }
}
