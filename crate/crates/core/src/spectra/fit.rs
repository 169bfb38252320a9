//! Least-squares fit of junction energies to measured f01.
//!
//! The model depends on E_J1 and E_J2 only through their sum and the
//! transparency, which are symmetric under exchange. The fit therefore
//! determines the unordered pair {E_J1, E_J2}; the returned values keep
//! whichever order the optimizer reached.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{SpectroscopyDataset, DEFAULT_MAX_SIGMA_GHZ};
use super::simplex::nelder_mead;
use crate::circuit::{
    lowest_eigenvalues, CircuitParams, ControlLine, HamiltonianOptions, JunctionSet,
};
use crate::error::{Error, Result};

pub const MIN_ROWS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Constrain E_J4 = E_J5.
    pub tie_e45: bool,
    /// Rows with a larger f01 uncertainty are dropped, GHz.
    pub max_sigma: f64,
    pub n_charge: usize,
    /// Total simplex iterations over all restarts.
    pub max_iterations: usize,
    pub rel_tol: f64,
    /// Absolute χ² spread that also ends a simplex run; noiseless data drive χ² to zero.
    pub abs_tol: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Initial simplex edge in log-energy.
    pub initial_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tie_e45: true,
            max_sigma: DEFAULT_MAX_SIGMA_GHZ,
            n_charge: 20,
            max_iterations: 2000,
            rel_tol: 1e-9,
            abs_tol: 1e-9,
            restarts: 3,
            seed: 0,
            initial_step: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub junctions: JunctionSet,
    pub ec: f64,
    /// Unweighted root-mean-square of model minus measured f01, GHz.
    pub rms_residual: f64,
    pub chi_squared: f64,
    /// One-sigma step in each energy that raises χ² by one, from the
    /// diagonal curvature. `None` where the curvature is not positive.
    pub sensitivities: BTreeMap<String, Option<f64>>,
    pub iterations: usize,
    pub converged: bool,
    pub rows_used: usize,
    pub rows_dropped: usize,
    /// Best χ² after each simplex iteration.
    pub objective_history: Vec<f64>,
}

/// Model f01 for every row, GHz.
///
/// Rows sharing a control flux reuse one pair of arm series.
pub fn model_f01(
    params: &CircuitParams,
    data: &SpectroscopyDataset,
    opts: &HamiltonianOptions,
) -> Result<Vec<f64>> {
    let mut lines: HashMap<u64, ControlLine> = HashMap::new();
    data.rows
        .iter()
        .map(|r| {
            let line = match lines.entry(r.phi_ctrl.to_bits()) {
                Entry::Occupied(e) => e.into_mut(),
                Entry::Vacant(e) => e.insert(ControlLine::new(params, r.phi_ctrl, opts)?),
            };
            let e = lowest_eigenvalues(&line.hamiltonian(r.phi_bias), 2)?;
            Ok(e[1] - e[0])
        })
        .collect()
}

struct Problem<'a> {
    data: &'a SpectroscopyDataset,
    ec: f64,
    tie: bool,
    opts: HamiltonianOptions,
}

impl Problem<'_> {
    fn names(&self) -> Vec<&'static str> {
        if self.tie {
            vec!["ej1", "ej2", "ej3", "ej45"]
        } else {
            vec!["ej1", "ej2", "ej3", "ej4", "ej5"]
        }
    }

    fn to_x(&self, j: &JunctionSet) -> Vec<f64> {
        if self.tie {
            vec![
                j.ej1.ln(),
                j.ej2.ln(),
                j.ej3.ln(),
                (0.5 * (j.ej4 + j.ej5)).ln(),
            ]
        } else {
            vec![j.ej1.ln(), j.ej2.ln(), j.ej3.ln(), j.ej4.ln(), j.ej5.ln()]
        }
    }

    fn junctions(&self, x: &[f64]) -> JunctionSet {
        let e: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        if self.tie {
            JunctionSet {
                ej1: e[0],
                ej2: e[1],
                ej3: e[2],
                ej4: e[3],
                ej5: e[3],
            }
        } else {
            JunctionSet {
                ej1: e[0],
                ej2: e[1],
                ej3: e[2],
                ej4: e[3],
                ej5: e[4],
            }
        }
    }

    fn params(&self, x: &[f64]) -> CircuitParams {
        CircuitParams {
            ec: self.ec,
            junctions: self.junctions(x),
            ..CircuitParams::fitted_device()
        }
    }

    fn chi2(&self, x: &[f64]) -> f64 {
        match model_f01(&self.params(x), self.data, &self.opts) {
            Ok(model) => model
                .iter()
                .zip(&self.data.rows)
                .map(|(m, r)| ((m - r.f01) / r.sigma).powi(2))
                .sum(),
            Err(_) => f64::INFINITY,
        }
    }
}

/// Fit the junction energies with E_C held at `fixed_ec`.
///
/// Never fails on non-convergence; that is reported in the result.
pub fn fit_spectrum(
    data: &SpectroscopyDataset,
    fixed_ec: f64,
    initial: &JunctionSet,
    opts: &FitOptions,
) -> Result<FitResult> {
    data.validate()?;
    if !(fixed_ec.is_finite() && fixed_ec > 0.0) {
        return Err(Error::validation(
            "fixed_ec",
            format!("must be > 0, got {fixed_ec}"),
        ));
    }
    for (name, v) in ["ej1", "ej2", "ej3", "ej4", "ej5"]
        .iter()
        .zip(initial.as_array())
    {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::validation(
                format!("initial.{name}"),
                format!("must be > 0, got {v}"),
            ));
        }
    }
    let (used, dropped) = data.filtered(opts.max_sigma);
    if used.len() < MIN_ROWS {
        return Err(Error::validation(
            "data",
            format!(
                "need at least {MIN_ROWS} rows after filtering, have {}",
                used.len()
            ),
        ));
    }
    let problem = Problem {
        data: &used,
        ec: fixed_ec,
        tie: opts.tie_e45,
        opts: HamiltonianOptions::with_n_charge(opts.n_charge),
    };
    let mut objective = |x: &[f64]| problem.chi2(x);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = problem.to_x(initial);
    let dim = x.len();
    let mut step = vec![opts.initial_step; dim];
    let mut best = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut history = Vec::new();
    for round in 0..=opts.restarts {
        let budget = opts.max_iterations.saturating_sub(iterations);
        if budget == 0 {
            break;
        }
        let out = nelder_mead(
            &mut objective,
            &x,
            &step,
            opts.rel_tol,
            opts.abs_tol,
            budget,
        );
        iterations += out.iterations;
        history.extend(out.history.iter().map(|v| v.min(best)));
        converged = out.converged;
        let improved = best - out.value;
        if out.value <= best {
            best = out.value;
            x = out.x;
        }
        // stop once a restart no longer finds anything better
        if round > 0 && improved <= opts.rel_tol * best.abs() + opts.abs_tol {
            break;
        }
        step = (0..dim)
            .map(|_| {
                let s: f64 = rng.random_range(0.5..1.0) * opts.initial_step * 0.2;
                if rng.random_bool(0.5) {
                    s
                } else {
                    -s
                }
            })
            .collect();
    }

    let params = problem.params(&x);
    let model = model_f01(&params, &used, &problem.opts)?;
    let rms = (model
        .iter()
        .zip(&used.rows)
        .map(|(m, r)| (m - r.f01).powi(2))
        .sum::<f64>()
        / used.len() as f64)
        .sqrt();

    let h = 1e-3;
    let mut sensitivities = BTreeMap::new();
    for (k, name) in problem.names().into_iter().enumerate() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        let curv = (problem.chi2(&xp) - 2.0 * best + problem.chi2(&xm)) / (h * h);
        let sigma = if curv > 0.0 && curv.is_finite() {
            Some(x[k].exp() * (2.0 / curv).sqrt())
        } else {
            None
        };
        sensitivities.insert(name.to_string(), sigma);
    }

    Ok(FitResult {
        junctions: params.junctions,
        ec: fixed_ec,
        rms_residual: rms,
        chi_squared: best,
        sensitivities,
        iterations,
        converged,
        rows_used: used.len(),
        rows_dropped: dropped,
        objective_history: history,
    })
}
