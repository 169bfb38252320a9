//! Matrix elements of noise-coupling operators between eigenstates.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::eigen::EigenSystem;
use super::epr::{internal_mode_epr, sns_epr};
use super::flux::FluxBias;
use super::fourier::{fourier_decompose, Harmonic, PeriodicPotential};
use super::hamiltonian::{
    build_hamiltonian_with, hamiltonian_from_potential, CircuitParams, HamiltonianOptions,
};
use crate::error::{Error, Result};

/// Finite-difference step for flux derivatives, Φ0.
pub const FLUX_STEP: f64 = 1e-6;
const GRID_TOL: f64 = 1e-10;
const MAX_PHASE_GRID: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OperatorKind {
    /// Cooper-pair number n̂.
    ChargeN,
    /// φ̂ on the branch [−π, π).
    PhasePhi,
    /// `sin((φ̂ − offset)/2)` with φ̂ on the branch [−π, π).
    SinHalfPhase { offset: f64 },
    /// ∂H/∂Φ_bias in GHz per Φ0.
    DhDPhiBias,
    /// ∂H/∂Φ_ctrl in GHz per Φ0, Φ_bias held fixed.
    DhDPhiCtrl,
}

/// Circuit and operating point the eigensystem was computed at; needed by
/// the flux-derivative operators.
#[derive(Debug, Clone, Copy)]
pub struct OperatorContext<'a> {
    pub params: &'a CircuitParams,
    pub flux: &'a FluxBias,
    pub options: HamiltonianOptions,
}

/// `⟨i|O|j⟩` for a single pair of levels.
pub fn operator_matrix_element(
    eig: &EigenSystem,
    kind: OperatorKind,
    i: usize,
    j: usize,
    ctx: &OperatorContext,
) -> Result<Complex64> {
    let levels = eig.levels();
    if i >= levels || j >= levels {
        return Err(Error::validation(
            "level",
            format!("levels {i},{j} requested but only {levels} available"),
        ));
    }
    let m = operator_matrix(eig, kind, ctx)?;
    Ok(m[(i, j)])
}

/// All elements `⟨i|O|j⟩` between the computed levels.
pub fn operator_matrix(
    eig: &EigenSystem,
    kind: OperatorKind,
    ctx: &OperatorContext,
) -> Result<DMatrix<Complex64>> {
    match kind {
        OperatorKind::ChargeN => Ok(charge_matrix(eig)),
        OperatorKind::PhasePhi => phase_function_matrix(eig, |phi| phi, 0.0),
        OperatorKind::SinHalfPhase { offset } => {
            // average of the one-sided limits at the branch cut
            let at_cut = 0.5 * ((-PI - offset) / 2.0).sin() + 0.5 * ((PI - offset) / 2.0).sin();
            phase_function_matrix(eig, move |phi| ((phi - offset) / 2.0).sin(), at_cut)
        }
        OperatorKind::DhDPhiBias => {
            let d = flux_derivative(ctx, FluxAxis::Bias)?;
            Ok(project(eig, &d))
        }
        OperatorKind::DhDPhiCtrl => {
            let d = flux_derivative(ctx, FluxAxis::Ctrl)?;
            Ok(project(eig, &d))
        }
    }
}

fn charge_matrix(eig: &EigenSystem) -> DMatrix<Complex64> {
    let k = eig.levels();
    DMatrix::from_fn(k, k, |i, j| {
        (0..eig.states.nrows())
            .map(|r| eig.states[(r, i)].conj() * eig.charge(r) * eig.states[(r, j)])
            .sum()
    })
}

/// `⟨i|A|j⟩` for a charge-basis operator `A`.
pub fn project(eig: &EigenSystem, a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    eig.states.adjoint() * a * &eig.states
}

/// States sampled on the uniform grid `φ_g = −π + 2πg/G`,
/// `ψ(φ) = Σ_n a_n e^{inφ}/√(2π)`. Rows are grid points, columns levels.
pub fn phase_grid_wavefunctions(eig: &EigenSystem, grid: usize) -> DMatrix<Complex64> {
    let dim = eig.states.nrows();
    let norm = 1.0 / (2.0 * PI).sqrt();
    let basis = DMatrix::from_fn(grid, dim, |g, r| {
        let phi = -PI + 2.0 * PI * g as f64 / grid as f64;
        let x = eig.charge(r) * phi;
        Complex64::new(x.cos(), x.sin()) * norm
    });
    basis * &eig.states
}

/// Trapezoid on [−π, π] refined by grid doubling with Richardson (Romberg)
/// extrapolation. The operator is non-periodic at the branch cut, so the plain
/// periodic trapezoid would only converge like h².
fn phase_function_matrix<F: Fn(f64) -> f64>(
    eig: &EigenSystem,
    op: F,
    at_cut: f64,
) -> Result<DMatrix<Complex64>> {
    let dim = eig.states.nrows();
    let mut grid = (4 * dim).next_power_of_two().max(128);
    let mut rows: Vec<Vec<DMatrix<Complex64>>> =
        vec![vec![integrate_on_grid(eig, &op, at_cut, grid)]];
    loop {
        grid *= 2;
        let prev = rows.last().unwrap();
        let mut row = vec![integrate_on_grid(eig, &op, at_cut, grid)];
        for j in 1..=prev.len() {
            let factor = 4f64.powi(j as i32) - 1.0;
            let r = &row[j - 1] + (&row[j - 1] - &prev[j - 1]) / Complex64::new(factor, 0.0);
            row.push(r);
        }
        let change = (row.last().unwrap() - prev.last().unwrap())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if change <= GRID_TOL {
            return Ok(row.pop().unwrap());
        }
        if grid >= MAX_PHASE_GRID {
            return Err(Error::NumericalFailure(format!(
                "phase-grid integration not converged: change {change:.3e} at {grid} points"
            )));
        }
        rows.push(row);
    }
}

fn integrate_on_grid<F: Fn(f64) -> f64>(
    eig: &EigenSystem,
    op: &F,
    at_cut: f64,
    grid: usize,
) -> DMatrix<Complex64> {
    let psi = phase_grid_wavefunctions(eig, grid);
    let w = 2.0 * PI / grid as f64;
    let k = eig.levels();
    let mut weighted = psi.clone();
    for g in 0..grid {
        let phi = -PI + 2.0 * PI * g as f64 / grid as f64;
        // the g = 0 node stands for both ends of [−π, π]
        let o = if g == 0 { at_cut } else { op(phi) };
        for c in 0..k {
            weighted[(g, c)] *= o * w;
        }
    }
    psi.adjoint() * weighted
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxAxis {
    Bias,
    Ctrl,
}

/// Central-difference `∂H/∂Φ` in the charge basis, GHz per Φ0.
///
/// Both displaced Hamiltonians reuse the quadrature grid of the base point
/// so the aliasing error cancels in the difference.
pub fn flux_derivative(ctx: &OperatorContext, axis: FluxAxis) -> Result<DMatrix<Complex64>> {
    let base = build_hamiltonian_with(ctx.params, ctx.flux, &ctx.options)?;
    let opts = HamiltonianOptions {
        fixed_grid: Some(base.potential.grid),
        ..ctx.options
    };
    let d = ctx.params.junctions.squid_asymmetry();
    let f = ctx.flux;
    let (plus, minus) = match axis {
        FluxAxis::Bias => (
            f.with_bias(f.phi_bias + FLUX_STEP),
            f.with_bias(f.phi_bias - FLUX_STEP),
        ),
        FluxAxis::Ctrl => (
            FluxBias::new(f.phi_bias, f.phi_ctrl + FLUX_STEP, d),
            FluxBias::new(f.phi_bias, f.phi_ctrl - FLUX_STEP, d),
        ),
    };
    let hp = build_hamiltonian_with(ctx.params, &plus, &opts)?.matrix;
    let hm = build_hamiltonian_with(ctx.params, &minus, &opts)?.matrix;
    Ok((hp - hm) / Complex64::new(2.0 * FLUX_STEP, 0.0))
}

/// `∂H/∂Φ_bias` from the Fourier series of the right arm, shifted and
/// differentiated term by term. GHz per Φ0.
pub fn bias_derivative_spectral(ctx: &OperatorContext) -> Result<DMatrix<Complex64>> {
    let (_, right) = ctx.params.arms(ctx.flux.phi_ctrl);
    let ec_int = ctx.params.ec_int_right;
    let arm = fourier_decompose(
        |t| sns_epr(right, t) + internal_mode_epr(right, ec_int, t),
        ctx.options.harmonics(),
        ctx.options.tol,
    )?;
    let s = ctx.flux.right_arm_shift();
    let coefficients = arm
        .coefficients
        .iter()
        .map(|h| {
            let n = h.n as f64;
            let (sn, cn) = (n * s).sin_cos();
            let a = h.cos * cn - h.sin * sn;
            let b = h.cos * sn + h.sin * cn;
            Harmonic {
                n: h.n,
                cos: -2.0 * PI * n * b,
                sin: 2.0 * PI * n * a,
            }
        })
        .collect();
    let derivative = PeriodicPotential {
        coefficients,
        ..arm
    };
    Ok(hamiltonian_from_potential(
        0.0,
        0.0,
        &derivative,
        ctx.options.n_charge,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{eigensystem, CircuitParams};

    #[test]
    fn pure_charge_state_has_integer_charge() {
        // diagonal Hamiltonian with minimum at n = 3
        let n_charge = 10;
        let dim = 2 * n_charge + 1;
        let h = DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                let n = i as f64 - n_charge as f64;
                Complex64::new((n - 3.0).powi(2), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let eig = eigensystem(&h, 3).unwrap();
        let p = CircuitParams::fitted_device();
        let f = p.flux(0.5, 0.4);
        let ctx = OperatorContext {
            params: &p,
            flux: &f,
            options: HamiltonianOptions::with_n_charge(n_charge),
        };
        let n33 = operator_matrix_element(&eig, OperatorKind::ChargeN, 0, 0, &ctx).unwrap();
        assert!((n33 - Complex64::new(3.0, 0.0)).norm() < 1e-14);
        assert!(operator_matrix_element(&eig, OperatorKind::ChargeN, 0, 5, &ctx).is_err());
    }

    #[test]
    fn phase_operator_on_charge_states_matches_fourier_kernel() {
        // ⟨m|φ|n⟩ = i(−1)^k/k for k = m − n ≠ 0 on the branch [−π, π)
        let n_charge = 10;
        let dim = 2 * n_charge + 1;
        let h = DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                Complex64::new(i as f64, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let eig = eigensystem(&h, 6).unwrap();
        let p = CircuitParams::fitted_device();
        let f = p.flux(0.5, 0.4);
        let ctx = OperatorContext {
            params: &p,
            flux: &f,
            options: HamiltonianOptions::with_n_charge(n_charge),
        };
        let m = operator_matrix(&eig, OperatorKind::PhasePhi, &ctx).unwrap();
        for a in 0..6 {
            for b in 0..6 {
                let k = eig.charge(a) - eig.charge(b);
                let exact = if a == b {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, (-1f64).powi(k as i32) / k)
                };
                assert!(
                    (m[(a, b)] - exact).norm() < 1e-9,
                    "{a},{b}: {} vs {exact}",
                    m[(a, b)]
                );
            }
        }
    }

    #[test]
    fn finite_difference_derivative_matches_spectral() {
        let p = CircuitParams::fitted_device();
        for (pb, pc) in [(0.45, 0.378), (0.3, 0.406), (0.5, 0.39)] {
            let f = p.flux(pb, pc);
            let ctx = OperatorContext {
                params: &p,
                flux: &f,
                options: HamiltonianOptions::with_n_charge(20),
            };
            let fd = flux_derivative(&ctx, FluxAxis::Bias).unwrap();
            let exact = bias_derivative_spectral(&ctx).unwrap();
            let scale = exact.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let err = (&fd - &exact).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-6 * scale, "{err:e} vs {scale:e}");
        }
    }
}
