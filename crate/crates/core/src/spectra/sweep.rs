//! Transition frequencies along a flux path.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{solve, CircuitParams, EigenSystem, FluxBias, HamiltonianOptions};
use crate::error::{Error, Result};

/// How levels are labelled from one grid point to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelOrdering {
    /// Ascending energy at each point.
    #[default]
    Energy,
    /// Follow each state by maximum overlap with the previous grid point.
    Overlap,
}

#[derive(Debug)]
pub struct SweepPoint {
    pub flux: FluxBias,
    /// `f_{0→k}` for `k = 1..=levels`, GHz.
    pub transitions: Result<Vec<f64>>,
}

/// One eigensolve per grid point; a failed point does not stop the sweep.
pub fn transition_spectrum_sweep(
    params: &CircuitParams,
    grid: &[FluxBias],
    levels: usize,
    opts: &HamiltonianOptions,
    ordering: LevelOrdering,
) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(Error::validation("flux_grid", "sweep grid is empty"));
    }
    if levels == 0 {
        return Err(Error::validation("levels", "need at least one transition"));
    }
    params.validate()?;
    let solved: Vec<Result<EigenSystem>> = grid
        .par_iter()
        .map(|f| solve(params, f, opts, levels + 1).map(|(e, _)| e))
        .collect();
    let transitions = match ordering {
        LevelOrdering::Energy => solved
            .iter()
            .map(|r| r.as_ref().map(energy_transitions).map_err(clone_err))
            .collect::<Vec<_>>(),
        LevelOrdering::Overlap => track_by_overlap(&solved),
    };
    Ok(grid
        .iter()
        .zip(transitions)
        .map(|(f, t)| SweepPoint {
            flux: *f,
            transitions: t,
        })
        .collect())
}

fn energy_transitions(e: &EigenSystem) -> Vec<f64> {
    (1..e.levels()).map(|k| e.transition(0, k)).collect()
}

fn clone_err(e: &Error) -> Error {
    match e {
        Error::Validation { field, reason } => Error::Validation {
            field: field.clone(),
            reason: reason.clone(),
        },
        Error::DecompositionFailure { residual, grid } => Error::DecompositionFailure {
            residual: *residual,
            grid: *grid,
        },
        other => Error::NumericalFailure(other.to_string()),
    }
}

fn track_by_overlap(solved: &[Result<EigenSystem>]) -> Vec<Result<Vec<f64>>> {
    let mut out = Vec::with_capacity(solved.len());
    let mut prev: Option<(Vec<usize>, &EigenSystem)> = None;
    for r in solved {
        match r {
            Err(e) => {
                out.push(Err(clone_err(e)));
                prev = None;
            }
            Ok(eig) => {
                let k = eig.levels();
                let perm: Vec<usize> = match &prev {
                    None => (0..k).collect(),
                    Some((prev_perm, prev_eig)) => {
                        // label j of this point inherits the label of the previous state it overlaps most
                        let mut assigned = vec![usize::MAX; k];
                        let mut taken = vec![false; k];
                        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(k * k);
                        for a in 0..k {
                            for b in 0..k {
                                let ov: Complex64 = prev_eig.state(a).dotc(&eig.state(b));
                                pairs.push((ov.norm(), a, b));
                            }
                        }
                        pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
                        let mut used_prev = vec![false; k];
                        for (_, a, b) in pairs {
                            if !used_prev[a] && !taken[b] {
                                used_prev[a] = true;
                                taken[b] = true;
                                assigned[prev_perm[a]] = b;
                            }
                        }
                        assigned
                    }
                };
                let ground = eig.energies[perm[0]];
                out.push(Ok((1..k)
                    .map(|lbl| eig.energies[perm[lbl]] - ground)
                    .collect()));
                prev = Some((perm, eig));
            }
        }
    }
    out
}
