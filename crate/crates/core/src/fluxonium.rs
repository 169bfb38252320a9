//! Single-loop fluxonium, `H = 4E_C n² − E_J cos φ + ½E_L(φ − φ_ext)²`,
//! in the oscillator basis of its LC part.
//!
//! The basis is centred at φ = 0 rather than displaced to φ_ext, so the
//! operators do not depend on the external flux and one set serves a whole
//! sweep. Exponentials of φ use the closed-form displacement-operator
//! elements (generalized Laguerre polynomials) rather than a truncated
//! matrix exponential.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{CouplingMatrices, NoiseConfig, T1Budget};
use crate::spectra::ResonatorParams;

pub const DEFAULT_BASIS: usize = 120;
pub const MIN_BASIS: usize = 20;
/// Largest allowed population of the top basis state in the lowest levels.
pub const TRUNCATION_LIMIT: f64 = 1e-6;
/// Levels checked against [`TRUNCATION_LIMIT`].
const CHECKED_LEVELS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxoniumParams {
    pub ec: f64,
    pub ej: f64,
    pub el: f64,
    /// External flux, Φ0.
    pub phi_ext: f64,
    pub basis_size: usize,
}

impl FluxoniumParams {
    /// Comparison device at its symmetry point.
    pub fn paper() -> Self {
        FluxoniumParams {
            ec: 1.0,
            ej: 4.1,
            el: 0.8,
            phi_ext: 0.5,
            basis_size: DEFAULT_BASIS,
        }
    }

    pub fn with_flux(&self, phi_ext: f64) -> Self {
        FluxoniumParams { phi_ext, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("ec", self.ec), ("el", self.el)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(name, format!("must be > 0, got {v}")));
            }
        }
        if !(self.ej.is_finite() && self.ej >= 0.0) {
            return Err(Error::validation(
                "ej",
                format!("must be >= 0, got {}", self.ej),
            ));
        }
        if !self.phi_ext.is_finite() {
            return Err(Error::validation("phi_ext", "must be finite"));
        }
        if self.basis_size < MIN_BASIS {
            return Err(Error::validation(
                "basis_size",
                format!("must be >= {MIN_BASIS}, got {}", self.basis_size),
            ));
        }
        Ok(())
    }

    /// Oscillator frequency `√(8 E_L E_C)`, GHz.
    pub fn plasma_frequency(&self) -> f64 {
        (8.0 * self.el * self.ec).sqrt()
    }

    /// Zero-point phase fluctuation `(2E_C/E_L)^{1/4}`.
    pub fn phi_zpf(&self) -> f64 {
        (2.0 * self.ec / self.el).powf(0.25)
    }

    /// External phase `2πΦ_ext`.
    pub fn phase_ext(&self) -> f64 {
        2.0 * PI * self.phi_ext
    }
}

/// Operators in the oscillator basis. `charge` is `n/i`, which is real.
#[derive(Debug, Clone)]
pub struct OscillatorOperators {
    pub phi: DMatrix<f64>,
    pub charge_over_i: DMatrix<f64>,
    pub cos_phi: DMatrix<f64>,
    pub sin_half_phi: DMatrix<f64>,
}

impl OscillatorOperators {
    pub fn new(size: usize, phi_zpf: f64) -> Self {
        let mut phi = DMatrix::zeros(size, size);
        let mut charge = DMatrix::zeros(size, size);
        let n_zpf = 0.5 / phi_zpf;
        for k in 1..size {
            let s = (k as f64).sqrt();
            phi[(k - 1, k)] = phi_zpf * s;
            phi[(k, k - 1)] = phi_zpf * s;
            // n = i·n_zpf (a† − a)
            charge[(k, k - 1)] = n_zpf * s;
            charge[(k - 1, k)] = -n_zpf * s;
        }
        OscillatorOperators {
            phi,
            charge_over_i: charge,
            cos_phi: exp_phase_part(size, phi_zpf, Part::Cos),
            sin_half_phi: exp_phase_part(size, 0.5 * phi_zpf, Part::Sin),
        }
    }
}

#[derive(Clone, Copy)]
enum Part {
    Cos,
    Sin,
}

/// Real or imaginary part of `exp(i·s·(a + a†))` for zero-point scale `s`.
///
/// `⟨n+k|D(α)|n⟩ = α^k e^{−|α|²/2} √(n!/(n+k)!) L_n^{(k)}(|α|²)` with
/// `α = i·s`; the `i^k` phase makes the cosine part live on even `k` and the
/// sine part on odd `k`.
fn exp_phase_part(size: usize, s: f64, part: Part) -> DMatrix<f64> {
    let x = s * s;
    let damp = (-0.5 * x).exp();
    let mut out = DMatrix::zeros(size, size);
    for k in 0..size {
        let sign = match (part, k % 4) {
            (Part::Cos, 0) => 1.0,
            (Part::Cos, 2) => -1.0,
            (Part::Sin, 1) => 1.0,
            (Part::Sin, 3) => -1.0,
            _ => continue,
        };
        // g_n = s^k √(n!/(n+k)!) L_n^{(k)}(x), by a normalized recurrence
        let kf = k as f64;
        let mut g_prev = 0.0;
        let mut g = (1..=k).fold(1.0, |acc, j| acc * s / (j as f64).sqrt());
        for n in 0..(size - k) {
            let v = sign * damp * g;
            out[(n + k, n)] = v;
            out[(n, n + k)] = v;
            let nf = n as f64;
            let next = ((2.0 * nf + 1.0 + kf - x) * g - (nf * (nf + kf)).sqrt() * g_prev)
                / ((nf + 1.0) * (nf + 1.0 + kf)).sqrt();
            g_prev = g;
            g = next;
        }
    }
    out
}

/// Hamiltonian matrix in GHz.
pub fn build_fluxonium(p: &FluxoniumParams) -> Result<DMatrix<f64>> {
    p.validate()?;
    let ops = OscillatorOperators::new(p.basis_size, p.phi_zpf());
    Ok(hamiltonian_from(p, &ops))
}

fn hamiltonian_from(p: &FluxoniumParams, ops: &OscillatorOperators) -> DMatrix<f64> {
    let w = p.plasma_frequency();
    let pe = p.phase_ext();
    let mut h = -p.ej * &ops.cos_phi - p.el * pe * &ops.phi;
    for k in 0..p.basis_size {
        h[(k, k)] += w * (k as f64 + 0.5) + 0.5 * p.el * pe * pe;
    }
    h
}

#[derive(Debug, Clone)]
pub struct FluxoniumEigen {
    pub params: FluxoniumParams,
    /// Ascending, GHz.
    pub energies: Vec<f64>,
    /// One column per level in the oscillator basis.
    pub states: DMatrix<f64>,
    pub operators: OscillatorOperators,
}

impl FluxoniumEigen {
    pub fn f01(&self) -> f64 {
        self.energies[1] - self.energies[0]
    }
}

/// Lowest `levels` eigenpairs, rejecting a basis too small for the lowest five.
pub fn solve_fluxonium(p: &FluxoniumParams, levels: usize) -> Result<FluxoniumEigen> {
    p.validate()?;
    if levels == 0 || levels > p.basis_size {
        return Err(Error::validation(
            "levels",
            format!("must be in 1..={}, got {levels}", p.basis_size),
        ));
    }
    let ops = OscillatorOperators::new(p.basis_size, p.phi_zpf());
    let h = hamiltonian_from(p, &ops);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..p.basis_size).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let top = p.basis_size - 1;
    for (rank, &i) in order.iter().take(CHECKED_LEVELS).enumerate() {
        let pop = eig.eigenvectors[(top, i)].powi(2);
        if !(pop <= TRUNCATION_LIMIT) {
            return Err(Error::Truncation(format!(
                "level {rank} has population {pop:.2e} in the top basis state; increase basis_size beyond {}",
                p.basis_size
            )));
        }
    }
    let keep = &order[..levels];
    let energies = keep.iter().map(|&i| eig.eigenvalues[i]).collect();
    let states = DMatrix::from_fn(p.basis_size, levels, |r, c| eig.eigenvectors[(r, keep[c])]);
    Ok(FluxoniumEigen {
        params: *p,
        energies,
        states,
        operators: ops,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxoniumOperator {
    ChargeN,
    PhasePhi,
    SinHalfPhase,
    /// ∂H/∂Φ_ext in GHz per Φ0.
    DhDPhiExt,
}

/// Operator projected onto the computed levels.
pub fn fluxonium_operator_matrix(
    eig: &FluxoniumEigen,
    op: FluxoniumOperator,
) -> DMatrix<Complex64> {
    let ops = &eig.operators;
    let v = &eig.states;
    let project = |m: &DMatrix<f64>| v.transpose() * m * v;
    match op {
        FluxoniumOperator::ChargeN => project(&ops.charge_over_i).map(|x| Complex64::new(0.0, x)),
        FluxoniumOperator::PhasePhi => project(&ops.phi).map(|x| Complex64::new(x, 0.0)),
        FluxoniumOperator::SinHalfPhase => {
            project(&ops.sin_half_phi).map(|x| Complex64::new(x, 0.0))
        }
        FluxoniumOperator::DhDPhiExt => {
            let p = &eig.params;
            let mut shifted = ops.phi.clone();
            for k in 0..p.basis_size {
                shifted[(k, k)] -= p.phase_ext();
            }
            project(&shifted).map(|x| Complex64::new(-p.el * 2.0 * PI * x, 0.0))
        }
    }
}

pub fn fluxonium_matrix_element(
    eig: &FluxoniumEigen,
    op: FluxoniumOperator,
    i: usize,
    j: usize,
) -> Result<Complex64> {
    let n = eig.energies.len();
    if i >= n || j >= n {
        return Err(Error::validation(
            "level",
            format!("({i}, {j}) outside the {n} computed levels"),
        ));
    }
    Ok(fluxonium_operator_matrix(eig, op)[(i, j)])
}

/// Coupling matrices for the noise budget: the single loop is the bias
/// loop, the control-loop derivative is zero, and the quasiparticle channel
/// acts on the one small junction.
pub fn fluxonium_couplings(p: &FluxoniumParams, levels: usize) -> Result<CouplingMatrices> {
    let eig = solve_fluxonium(p, levels)?;
    Ok(CouplingMatrices {
        unit_hz: 1e9,
        energies: eig.energies.clone(),
        charge: fluxonium_operator_matrix(&eig, FluxoniumOperator::ChargeN),
        phase: fluxonium_operator_matrix(&eig, FluxoniumOperator::PhasePhi),
        sin_half: vec![(
            fluxonium_operator_matrix(&eig, FluxoniumOperator::SinHalfPhase),
            p.ej,
        )],
        dh_bias: fluxonium_operator_matrix(&eig, FluxoniumOperator::DhDPhiExt),
        dh_ctrl: DMatrix::zeros(levels, levels),
        charging_energy: p.ec,
        inductive_energy: p.el,
    })
}

/// Relaxation budget of the 1 → 0 transition.
pub fn fluxonium_t1_budget(
    p: &FluxoniumParams,
    cfg: &NoiseConfig,
    res: &ResonatorParams,
) -> Result<T1Budget> {
    cfg.validate()?;
    res.validate()?;
    fluxonium_couplings(p, 2)?.transition_budget(1, 0, res, cfg)
}

/// Transition frequencies `f_0k`, k ≥ 1, over a grid of external fluxes.
pub fn fluxonium_spectrum(
    p: &FluxoniumParams,
    grid: &[f64],
    levels: usize,
) -> Result<Vec<Vec<f64>>> {
    use rayon::prelude::*;
    grid.par_iter()
        .map(|&phi| {
            let e = solve_fluxonium(&p.with_flux(phi), levels)?;
            Ok(e.energies
                .iter()
                .skip(1)
                .map(|x| x - e.energies[0])
                .collect())
        })
        .collect()
}

/// `−E_J cos φ + ½E_L(φ − φ_ext)²` in GHz.
pub fn fluxonium_potential(p: &FluxoniumParams, phi: f64) -> f64 {
    -p.ej * phi.cos() + 0.5 * p.el * (phi - p.phase_ext()).powi(2)
}

/// Computed levels sampled at `phases`, normalized in φ. Rows are phases.
pub fn fluxonium_wavefunctions(eig: &FluxoniumEigen, phases: &[f64]) -> DMatrix<f64> {
    let size = eig.states.nrows();
    // φ = φ_zpf(a + a†) = √2 φ_zpf x in oscillator units
    let scale = std::f64::consts::SQRT_2 * eig.params.phi_zpf();
    let norm = 1.0 / scale.sqrt();
    let mut basis = DMatrix::zeros(phases.len(), size);
    for (r, &phi) in phases.iter().enumerate() {
        let x = phi / scale;
        let mut prev = 0.0;
        let mut cur = PI.powf(-0.25) * (-0.5 * x * x).exp();
        for n in 0..size {
            basis[(r, n)] = cur * norm;
            let next =
                (2.0 / (n + 1) as f64).sqrt() * x * cur - (n as f64 / (n + 1) as f64).sqrt() * prev;
            prev = cur;
            cur = next;
        }
    }
    basis * &eig.states
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_junction_gives_oscillator_ladder() {
        let p = FluxoniumParams {
            ej: 0.0,
            phi_ext: 0.3,
            ..FluxoniumParams::paper()
        };
        let e = solve_fluxonium(&p, 6).unwrap();
        let w = p.plasma_frequency();
        for k in 1..6 {
            assert!((e.energies[k] - e.energies[k - 1] - w).abs() < 1e-9);
        }
    }

    #[test]
    fn cosine_matches_matrix_function_of_phase() {
        // cos built from Laguerre elements against diagonalizing φ in a larger basis
        let (size, big, s) = (30, 200, 1.1);
        let ops = OscillatorOperators::new(size, s);
        let bigops = OscillatorOperators::new(big, s);
        let eig = SymmetricEigen::new(bigops.phi.clone());
        let f = |g: fn(f64) -> f64| {
            let d = DMatrix::from_diagonal(&eig.eigenvalues.map(g));
            &eig.eigenvectors * d * eig.eigenvectors.transpose()
        };
        let cos_big = f(f64::cos);
        let sin_half_big = f(|x| (0.5 * x).sin());
        for r in 0..10 {
            for c in 0..10 {
                assert!(
                    (ops.cos_phi[(r, c)] - cos_big[(r, c)]).abs() < 1e-10,
                    "({r},{c})"
                );
                assert!(
                    (ops.sin_half_phi[(r, c)] - sin_half_big[(r, c)]).abs() < 1e-10,
                    "({r},{c})"
                );
            }
        }
    }

    #[test]
    fn paper_device_sits_near_400_mhz() {
        let e = solve_fluxonium(&FluxoniumParams::paper(), 5).unwrap();
        assert!((e.f01() - 0.4).abs() < 0.02, "{}", e.f01());
    }

    #[test]
    fn phase_parity_at_zero_flux() {
        let e = solve_fluxonium(&FluxoniumParams::paper().with_flux(0.0), 3).unwrap();
        assert!(
            fluxonium_matrix_element(&e, FluxoniumOperator::PhasePhi, 0, 0)
                .unwrap()
                .norm()
                < 1e-10
        );
    }

    #[test]
    fn delocalized_states_at_symmetry_point() {
        let e = solve_fluxonium(&FluxoniumParams::paper(), 3).unwrap();
        let m = fluxonium_matrix_element(&e, FluxoniumOperator::PhasePhi, 0, 1)
            .unwrap()
            .norm();
        assert!(m > 0.3 && m < 10.0, "{m}");
    }

    #[test]
    fn flux_derivative_matches_finite_difference() {
        let p = FluxoniumParams::paper().with_flux(0.43);
        let h = 1e-5;
        let hp = build_fluxonium(&p.with_flux(p.phi_ext + h)).unwrap();
        let hm = build_fluxonium(&p.with_flux(p.phi_ext - h)).unwrap();
        let e = solve_fluxonium(&p, 3).unwrap();
        let fd = (&hp - &hm) / (2.0 * h);
        let fd = e.states.transpose() * fd * &e.states;
        let an = fluxonium_operator_matrix(&e, FluxoniumOperator::DhDPhiExt);
        for r in 0..3 {
            for c in 0..3 {
                let rel = (an[(r, c)].re - fd[(r, c)]).abs() / fd[(r, c)].abs().max(1e-3);
                assert!(rel < 1e-8, "({r},{c}): {} vs {}", an[(r, c)].re, fd[(r, c)]);
            }
        }
    }

    #[test]
    fn small_basis_is_rejected() {
        let p = FluxoniumParams {
            basis_size: 20,
            el: 0.05,
            ..FluxoniumParams::paper()
        };
        assert!(matches!(solve_fluxonium(&p, 5), Err(Error::Truncation(_))));
        let p = FluxoniumParams {
            basis_size: 10,
            ..FluxoniumParams::paper()
        };
        assert!(matches!(p.validate(), Err(Error::Validation { .. })));
    }

    #[test]
    fn wavefunctions_are_orthonormal_in_phase() {
        let e = solve_fluxonium(&FluxoniumParams::paper(), 3).unwrap();
        let n = 8001;
        let (lo, hi) = (-8.0 * PI, 9.0 * PI);
        let h = (hi - lo) / (n - 1) as f64;
        let phases: Vec<f64> = (0..n).map(|i| lo + h * i as f64).collect();
        let psi = fluxonium_wavefunctions(&e, &phases);
        for a in 0..3 {
            for b in 0..3 {
                let overlap: f64 = (0..n).map(|i| psi[(i, a)] * psi[(i, b)]).sum::<f64>() * h;
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((overlap - want).abs() < 1e-8, "<{a}|{b}> = {overlap}");
            }
        }
    }
}
