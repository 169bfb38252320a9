//! Fourier decomposition of 2π-periodic potentials by trapezoidal quadrature.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest quadrature grid tried before giving up.
pub const MAX_GRID: usize = 1 << 20;
pub const DEFAULT_MAX_HARMONIC: usize = 20;
pub const DEFAULT_TOL: f64 = 1e-10;

/// One term `a·cos(nφ) + b·sin(nφ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub n: usize,
    pub cos: f64,
    pub sin: f64,
}

impl Harmonic {
    pub fn magnitude(&self) -> f64 {
        self.cos.hypot(self.sin)
    }
}

/// Truncated Fourier series `Σ_n a_n cos(nφ) + b_n sin(nφ)`, `n = 0..=max_harmonic`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPotential {
    /// Entry `n` holds harmonic `n`.
    pub coefficients: Vec<Harmonic>,
    pub max_harmonic: usize,
    /// Quadrature points used for the accepted coefficients.
    pub grid: usize,
    /// Sup-norm mismatch between the series and the function on a test grid,
    /// relative to `max|f|`. Measures the harmonics dropped by truncation.
    pub truncation_residual: f64,
}

impl PeriodicPotential {
    pub fn evaluate(&self, phi: f64) -> f64 {
        // coefficients are stored with n = index, so e^{inφ} follows by rotation
        let (s1, c1) = phi.sin_cos();
        let (mut c, mut s) = (1.0, 0.0);
        let mut sum = 0.0;
        for h in &self.coefficients {
            sum += h.cos * c + h.sin * s;
            (c, s) = (c * c1 - s * s1, s * c1 + c * s1);
        }
        sum
    }

    pub fn harmonic(&self, n: usize) -> Harmonic {
        self.coefficients.get(n).copied().unwrap_or(Harmonic {
            n,
            cos: 0.0,
            sin: 0.0,
        })
    }

    /// Largest coefficient magnitude over all harmonics, including n = 0.
    pub fn largest_magnitude(&self) -> f64 {
        self.coefficients
            .iter()
            .map(Harmonic::magnitude)
            .fold(0.0, f64::max)
    }

    /// Largest odd-harmonic magnitude divided by the largest magnitude overall.
    pub fn odd_to_largest_ratio(&self) -> f64 {
        let largest = self.largest_magnitude();
        if largest == 0.0 {
            return 0.0;
        }
        let odd = self
            .coefficients
            .iter()
            .filter(|h| h.n % 2 == 1)
            .map(Harmonic::magnitude)
            .fold(0.0, f64::max);
        odd / largest
    }
}

/// Decompose `f` with the grid doubled until the first `max_harmonic + 1`
/// coefficients are stable to `tol` relative to the largest one.
pub fn fourier_decompose<F>(f: F, max_harmonic: usize, tol: f64) -> Result<PeriodicPotential>
where
    F: Fn(f64) -> f64,
{
    let mut grid = initial_grid(max_harmonic);
    let mut planner = FftPlanner::new();
    let mut coarse = raw_coefficients(&f, grid, max_harmonic, &mut planner);
    loop {
        let fine_grid = grid * 2;
        let fine = raw_coefficients(&f, fine_grid, max_harmonic, &mut planner);
        let change = coefficient_change(&coarse, &fine);
        if change <= tol {
            return Ok(finish(&f, fine, max_harmonic, fine_grid));
        }
        if fine_grid >= MAX_GRID {
            return Err(Error::DecompositionFailure {
                residual: change,
                grid: fine_grid,
            });
        }
        coarse = fine;
        grid = fine_grid;
    }
}

/// Decompose on a caller-chosen grid without a convergence loop.
///
/// Used when several nearby potentials must share identical quadrature, e.g.
/// for finite differences in flux.
pub fn fourier_decompose_on_grid<F>(f: F, max_harmonic: usize, grid: usize) -> PeriodicPotential
where
    F: Fn(f64) -> f64,
{
    let mut planner = FftPlanner::new();
    let coefs = raw_coefficients(&f, grid, max_harmonic, &mut planner);
    finish(&f, coefs, max_harmonic, grid)
}

fn initial_grid(max_harmonic: usize) -> usize {
    (4 * (max_harmonic + 1)).max(64).next_power_of_two()
}

fn raw_coefficients<F: Fn(f64) -> f64>(
    f: &F,
    grid: usize,
    max_harmonic: usize,
    planner: &mut FftPlanner<f64>,
) -> Vec<Harmonic> {
    let step = 2.0 * PI / grid as f64;
    let mut buf: Vec<Complex64> = (0..grid)
        .map(|j| Complex64::new(f(step * j as f64), 0.0))
        .collect();
    planner.plan_fft_forward(grid).process(&mut buf);
    let norm = 1.0 / grid as f64;
    (0..=max_harmonic)
        .map(|n| {
            if n >= grid / 2 {
                return Harmonic {
                    n,
                    cos: 0.0,
                    sin: 0.0,
                };
            }
            let c = buf[n] * norm;
            if n == 0 {
                Harmonic {
                    n,
                    cos: c.re,
                    sin: 0.0,
                }
            } else {
                Harmonic {
                    n,
                    cos: 2.0 * c.re,
                    sin: -2.0 * c.im,
                }
            }
        })
        .collect()
}

fn coefficient_change(a: &[Harmonic], b: &[Harmonic]) -> f64 {
    let scale = b.iter().map(Harmonic::magnitude).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x.cos - y.cos).hypot(x.sin - y.sin))
        .fold(0.0, f64::max);
    diff / scale
}

fn finish<F: Fn(f64) -> f64>(
    f: &F,
    coefficients: Vec<Harmonic>,
    max_harmonic: usize,
    grid: usize,
) -> PeriodicPotential {
    let mut pot = PeriodicPotential {
        coefficients,
        max_harmonic,
        grid,
        truncation_residual: 0.0,
    };
    // staggered test grid so the check does not coincide with the quadrature nodes
    let points = 512;
    let mut fmax = 0.0f64;
    let mut err = 0.0f64;
    for k in 0..points {
        let phi = 2.0 * PI * (k as f64 + 0.5) / points as f64;
        let v = f(phi);
        fmax = fmax.max(v.abs());
        err = err.max((v - pot.evaluate(phi)).abs());
    }
    pot.truncation_residual = if fmax > 0.0 { err / fmax } else { err };
    pot
}
