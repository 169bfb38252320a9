//! Classical population dynamics over the lowest N levels and the
//! effective T1 it implies.

pub mod expm;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitParams, FluxBias, HamiltonianOptions};
use crate::constants::{BOLTZMANN_KB, PLANCK_H};
use crate::error::{Error, Result};
use crate::noise::{circuit_couplings, CouplingMatrices, NoiseConfig};
use crate::spectra::ResonatorParams;

pub use expm::expm;

pub const DEFAULT_LEVELS: usize = 5;
/// Eigenbases with a larger condition number fall back to the matrix exponential.
pub const MAX_CONDITION: f64 = 1e12;
pub const FIT_POINTS: usize = 200;
/// Relative residual above which the single-exponential fit is flagged.
pub const FIT_QUALITY_LIMIT: f64 = 0.05;

/// Generator of `∂p/∂t = B p`; `b[(j, i)]` is the rate from `i` to `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateMatrix {
    pub b: DMatrix<f64>,
    /// K.
    pub temperature: f64,
    /// Level energies relative to the ground state, GHz.
    pub frequencies: Vec<f64>,
}

impl RateMatrix {
    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    /// Builds the generator from downward rates `down[(i, j)] = Γ_{i→j}`, `i > j`;
    /// the other entries of `down` are ignored.
    pub fn from_downward_rates(
        down: &DMatrix<f64>,
        frequencies: &[f64],
        temperature: f64,
    ) -> Result<Self> {
        let n = frequencies.len();
        if n < 2 || down.nrows() != n || down.ncols() != n {
            return Err(Error::validation(
                "n_levels",
                format!("need matching rates for at least 2 levels, got {n}"),
            ));
        }
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::validation(
                "temperature",
                format!("must be > 0, got {temperature}"),
            ));
        }
        let mut b = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..i {
                let g = down[(i, j)];
                if !(g.is_finite() && g >= 0.0) {
                    return Err(Error::validation(
                        "rate",
                        format!("rate {i}->{j} must be finite and >= 0, got {g}"),
                    ));
                }
                let x = PLANCK_H * (frequencies[i] - frequencies[j]) * 1e9
                    / (BOLTZMANN_KB * temperature);
                b[(j, i)] = g;
                b[(i, j)] = g * (-x).exp();
            }
        }
        for c in 0..n {
            let s: f64 = (0..n).filter(|&r| r != c).map(|r| b[(r, c)]).sum();
            b[(c, c)] = -s;
        }
        Ok(RateMatrix {
            b,
            temperature,
            frequencies: frequencies.to_vec(),
        })
    }

    /// Boltzmann populations at the matrix temperature.
    pub fn boltzmann(&self) -> Vec<f64> {
        let beta = PLANCK_H * 1e9 / (BOLTZMANN_KB * self.temperature);
        let lw: Vec<f64> = self.frequencies.iter().map(|f| -beta * f).collect();
        let m = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = lw.iter().map(|l| (l - m).exp()).collect();
        let z: f64 = w.iter().sum();
        w.iter().map(|v| v / z).collect()
    }

    /// Symmetric matrix `√(B_ij B_ji)` sharing the spectrum of `B`.
    fn symmetrized(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.b[(i, i)]
            } else {
                (self.b[(i, j)] * self.b[(j, i)]).sqrt()
            }
        })
    }

    /// Eigenvalues of `B`, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(self.symmetrized())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Slowest nonzero relaxation rate `|λ|`.
    pub fn slowest_rate(&self) -> Option<f64> {
        let ev = self.eigenvalues();
        let scale = ev.iter().map(|v| v.abs()).fold(0.0, f64::max);
        ev.iter()
            .map(|v| v.abs())
            .filter(|v| *v > 1e-12 * scale)
            .fold(None, |acc: Option<f64>, v| {
                Some(acc.map_or(v, |a| a.min(v)))
            })
    }
}

/// Golden-rule rate matrix over the lowest `n_levels` states at `temperature`.
pub fn build_rate_matrix(
    params: &CircuitParams,
    flux: &FluxBias,
    res: &ResonatorParams,
    cfg: &NoiseConfig,
    n_levels: usize,
    temperature: f64,
    opts: &HamiltonianOptions,
) -> Result<RateMatrix> {
    if n_levels < 2 {
        return Err(Error::validation(
            "n_levels",
            format!("must be >= 2, got {n_levels}"),
        ));
    }
    let c = circuit_couplings(params, flux, opts, n_levels)?;
    rate_matrix_from_couplings(&c, res, cfg, temperature)
}

pub fn rate_matrix_from_couplings(
    c: &CouplingMatrices,
    res: &ResonatorParams,
    cfg: &NoiseConfig,
    temperature: f64,
) -> Result<RateMatrix> {
    let cfg = NoiseConfig {
        temperature,
        ..*cfg
    };
    cfg.validate()?;
    res.validate()?;
    let n = c.levels();
    let mut down = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            down[(i, j)] = c.transition_budget(i, j, res, &cfg)?.total_rate;
        }
    }
    let to_ghz = c.unit_hz / 1e9;
    let freqs: Vec<f64> = c
        .energies
        .iter()
        .map(|e| (e - c.energies[0]) * to_ghz)
        .collect();
    RateMatrix::from_downward_rates(&down, &freqs, temperature)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationTrace {
    /// s.
    pub times: Vec<f64>,
    pub populations: Vec<Vec<f64>>,
    /// The matrix exponential was used instead of the eigenbasis.
    pub used_fallback: bool,
}

impl PopulationTrace {
    /// CSV with columns `time_s,p0,…,p{N−1}`.
    pub fn to_csv(&self) -> String {
        let n = self.populations.first().map_or(0, |p| p.len());
        let mut s = String::from("time_s");
        for k in 0..n {
            s.push_str(&format!(",p{k}"));
        }
        s.push('\n');
        for (t, p) in self.times.iter().zip(&self.populations) {
            s.push_str(&format!("{t}"));
            for v in p {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }
}

/// `p(t) = e^{Bt} p0` at each requested time.
pub fn evolve_populations(rm: &RateMatrix, p0: &[f64], times: &[f64]) -> Result<PopulationTrace> {
    let n = rm.dim();
    if p0.len() != n {
        return Err(Error::validation(
            "p0",
            format!("expected {n} entries, got {}", p0.len()),
        ));
    }
    if p0.iter().any(|v| !(v.is_finite() && *v >= 0.0))
        || (p0.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::validation("p0", "must be non-negative and sum to 1"));
    }
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::validation("times", "must be finite and >= 0"));
    }
    let pi = rm.boltzmann();
    let pmin = pi.iter().copied().fold(f64::INFINITY, f64::min);
    let pmax = pi.iter().copied().fold(0.0, f64::max);
    let cond = if pmin > 0.0 {
        (pmax / pmin).sqrt()
    } else {
        f64::INFINITY
    };
    let p0v = DVector::from_column_slice(p0);

    let (populations, used_fallback) = if cond <= MAX_CONDITION {
        // B = D S D⁻¹ with D = diag(√π) and S symmetric
        let d: Vec<f64> = pi.iter().map(|p| p.sqrt()).collect();
        let s = DMatrix::from_fn(n, n, |i, j| rm.b[(i, j)] * d[j] / d[i]);
        let s = (&s + s.transpose()) * 0.5;
        let eig = SymmetricEigen::try_new(s, f64::EPSILON, 10_000).ok_or_else(|| {
            Error::NumericalFailure("rate matrix eigensolver did not converge".into())
        })?;
        let u = eig.eigenvectors;
        let q0 = u.transpose() * DVector::from_fn(n, |i, _| p0v[i] / d[i]);
        let pops = times
            .iter()
            .map(|&t| {
                if t == 0.0 {
                    return p0.to_vec();
                }
                let qt = DVector::from_fn(n, |k, _| q0[k] * (eig.eigenvalues[k] * t).exp());
                let y = &u * qt;
                (0..n).map(|i| d[i] * y[i]).collect::<Vec<f64>>()
            })
            .collect();
        (pops, false)
    } else {
        let mut pops = Vec::with_capacity(times.len());
        for &t in times {
            if t == 0.0 {
                pops.push(p0.to_vec());
                continue;
            }
            let p = expm(&(&rm.b * t))? * &p0v;
            pops.push(p.iter().copied().collect::<Vec<f64>>());
        }
        (pops, true)
    };
    Ok(PopulationTrace {
        times: times.to_vec(),
        populations,
        used_fallback,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveT1 {
    /// s.
    pub t1: f64,
    /// Relative root-mean-square misfit of the single exponential.
    pub residual: f64,
    /// Residual within the 5% limit.
    pub good_fit: bool,
    pub used_fallback: bool,
}

/// Time constant of a single exponential fitted to the decay of the first
/// excited population starting from `|1⟩`.
///
/// Samples `t = 0` and 199 log-spaced times in `[10⁻³ t_max, t_max]` with
/// `t_max = 5/|λ_slow|`.
pub fn effective_t1(rm: &RateMatrix) -> Result<EffectiveT1> {
    let n = rm.dim();
    let slow = rm
        .slowest_rate()
        .ok_or_else(|| Error::validation("rate_matrix", "no relaxation: every rate is zero"))?;
    let fast = rm.eigenvalues().iter().map(|v| v.abs()).fold(0.0, f64::max);
    let t_max = 5.0 / slow;
    let mut times = vec![0.0];
    let t_min = 1e-3 * t_max;
    for k in 0..FIT_POINTS - 1 {
        times.push(t_min * (t_max / t_min).powf(k as f64 / (FIT_POINTS - 2) as f64));
    }
    let mut p0 = vec![0.0; n];
    p0[1] = 1.0;
    // the final point sits far past every decay and gives p₁(∞) for this start
    times.push(1e3 * t_max);
    let trace = evolve_populations(rm, &p0, &times)?;
    times.pop();
    let p_inf = trace.populations[FIT_POINTS][1];
    let y: Vec<f64> = trace.populations[..FIT_POINTS]
        .iter()
        .map(|p| p[1] - p_inf)
        .collect();
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();

    // misfit with the amplitude solved in closed form
    let misfit = |log_tau: f64| -> f64 {
        let tau = log_tau.exp();
        let e: Vec<f64> = times.iter().map(|t| (-t / tau).exp()).collect();
        let a = y.iter().zip(&e).map(|(y, e)| y * e).sum::<f64>()
            / e.iter().map(|e| e * e).sum::<f64>();
        y.iter()
            .zip(&e)
            .map(|(y, e)| (y - a * e).powi(2))
            .sum::<f64>()
    };
    let lo = (0.1 / fast).ln();
    let hi = (10.0 / slow).ln();
    let scan = 400;
    let mut best = (f64::INFINITY, lo);
    for k in 0..=scan {
        let l = lo + (hi - lo) * k as f64 / scan as f64;
        let m = misfit(l);
        if m < best.0 {
            best = (m, l);
        }
    }
    let dl = (hi - lo) / scan as f64;
    let (mut a, mut b) = (best.1 - dl, best.1 + dl);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (misfit(c), misfit(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-14 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = misfit(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = misfit(d);
        }
    }
    let l = 0.5 * (a + b);
    let residual = if norm > 0.0 {
        misfit(l).sqrt() / norm
    } else {
        0.0
    };
    Ok(EffectiveT1 {
        t1: l.exp(),
        residual,
        good_fit: residual <= FIT_QUALITY_LIMIT,
        used_fallback: trace.used_fallback,
    })
}

/// Multilevel and two-level T1 at one operating point, with the change from one more level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultilevelT1 {
    pub n_levels: usize,
    /// s.
    pub t1: f64,
    /// s; with `n_levels + 1`.
    pub t1_next: f64,
    pub relative_change: f64,
    /// s; `1/(Γ↓ + Γ↑)` of the isolated 0–1 pair.
    pub two_level_t1: f64,
    pub good_fit: bool,
}

pub fn multilevel_t1(
    params: &CircuitParams,
    flux: &FluxBias,
    res: &ResonatorParams,
    cfg: &NoiseConfig,
    n_levels: usize,
    opts: &HamiltonianOptions,
) -> Result<MultilevelT1> {
    if n_levels < 2 {
        return Err(Error::validation(
            "n_levels",
            format!("must be >= 2, got {n_levels}"),
        ));
    }
    let c = circuit_couplings(params, flux, opts, n_levels + 1)?;
    let full = rate_matrix_from_couplings(&c, res, cfg, cfg.temperature)?;
    let sub = |k: usize| -> Result<RateMatrix> {
        let down = DMatrix::from_fn(k, k, |i, j| if i > j { full.b[(j, i)] } else { 0.0 });
        RateMatrix::from_downward_rates(&down, &full.frequencies[..k], full.temperature)
    };
    let a = effective_t1(&sub(n_levels)?)?;
    let b = effective_t1(&full)?;
    let two = sub(2)?;
    Ok(MultilevelT1 {
        n_levels,
        t1: a.t1,
        t1_next: b.t1,
        relative_change: (b.t1 - a.t1).abs() / a.t1,
        two_level_t1: 1.0 / (two.b[(0, 1)] + two.b[(1, 0)]),
        good_fit: a.good_fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_level(down: f64, f: f64, t: f64) -> RateMatrix {
        let d = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, down, 0.0]);
        RateMatrix::from_downward_rates(&d, &[0.0, f], t).unwrap()
    }

    #[test]
    fn two_level_closed_form() {
        let rm = two_level(1e4, 0.4, 0.04);
        let x = PLANCK_H * 0.4e9 / (BOLTZMANN_KB * 0.04);
        let total = 1e4 * (1.0 + (-x).exp());
        let e = effective_t1(&rm).unwrap();
        assert!((e.t1 * total - 1.0).abs() < 1e-9, "{}", e.t1 * total);
        assert!(e.good_fit);
        let tr = evolve_populations(&rm, &[0.0, 1.0], &[0.0, 3e-5]).unwrap();
        assert_eq!(tr.populations[0], vec![0.0, 1.0]);
        let pi1 = rm.boltzmann()[1];
        assert!((tr.populations[1][1] - (pi1 + (1.0 - pi1) * (-total * 3e-5).exp())).abs() < 1e-12);
    }

    #[test]
    fn zero_temperature_limit_has_no_upward_rates() {
        let d = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 1.0, 2.0, 0.0]);
        let rm = RateMatrix::from_downward_rates(&d, &[0.0, 3.0, 7.0], 1e-6).unwrap();
        for i in 0..3 {
            for j in (i + 1)..3 {
                assert_eq!(rm.b[(j, i)], 0.0);
            }
        }
        let tr = evolve_populations(&rm, &[0.0, 0.0, 1.0], &[0.0, 0.1, 10.0]).unwrap();
        assert!(tr.used_fallback);
        assert!((tr.populations[2][0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn decoupled_level_reduces_to_two_levels() {
        let d3 = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 2e4, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let rm3 = RateMatrix::from_downward_rates(&d3, &[0.0, 0.4, 0.9], 0.04).unwrap();
        let rm2 = two_level(2e4, 0.4, 0.04);
        let a = effective_t1(&rm3).unwrap().t1;
        let b = effective_t1(&rm2).unwrap().t1;
        assert!((a / b - 1.0).abs() < 1e-9);
    }

    #[test]
    fn csv_layout() {
        let tr = PopulationTrace {
            times: vec![0.0, 1e-6],
            populations: vec![vec![0.0, 1.0], vec![0.25, 0.75]],
            used_fallback: false,
        };
        assert_eq!(tr.to_csv(), "time_s,p0,p1\n0,0,1\n0.000001,0.25,0.75\n");
    }
}
