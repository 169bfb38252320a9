//! Heatmaps synthesized from the circuit model.

use rayon::prelude::*;

use super::{apply_crosstalk, rebase_flux, CrosstalkMatrix, Heatmap};
use crate::circuit::{solve, CircuitParams, HamiltonianOptions};
use crate::error::Result;

/// f01 on a periodic `size × size` grid over one flux quantum in each loop,
/// indexed `[bias][ctrl]`.
pub fn f01_table(
    params: &CircuitParams,
    size: usize,
    opts: &HamiltonianOptions,
) -> Result<Vec<Vec<f64>>> {
    (0..size)
        .into_par_iter()
        .map(|i| {
            (0..size)
                .map(|j| {
                    let f = params.flux(i as f64 / size as f64, j as f64 / size as f64);
                    solve(params, &f, opts, 2).map(|(e, _)| e.f01())
                })
                .collect()
        })
        .collect()
}

/// Periodic cubic convolution (Keys, a = −1/2) of a table at fluxes taken modulo one.
pub fn periodic_interpolate(table: &[Vec<f64>], phi_bias: f64, phi_ctrl: f64) -> f64 {
    let n = table.len() as isize;
    let m = table[0].len() as isize;
    let x = phi_bias.rem_euclid(1.0) * n as f64;
    let y = phi_ctrl.rem_euclid(1.0) * m as f64;
    let (i0, j0) = (x.floor() as isize, y.floor() as isize);
    let (fx, fy) = (x - x.floor(), y - y.floor());
    let wx = keys_weights(fx);
    let wy = keys_weights(fy);
    let mut acc = 0.0;
    for (a, wa) in wx.iter().enumerate() {
        let i = (i0 + a as isize - 1).rem_euclid(n) as usize;
        for (b, wb) in wy.iter().enumerate() {
            let j = (j0 + b as isize - 1).rem_euclid(m) as usize;
            acc += wa * wb * table[i][j];
        }
    }
    acc
}

pub(crate) fn keys_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        -0.5 * t3 + t2 - 0.5 * t,
        1.5 * t3 - 2.5 * t2 + 1.0,
        -1.5 * t3 + 2.0 * t2 + 0.5 * t,
        0.5 * t3 - 0.5 * t2,
    ]
}


/// f01 (GHz) seen through the cross-talk matrix on the given current axes.
pub fn synthetic_heatmap(
    params: &CircuitParams,
    m: &CrosstalkMatrix,
    fbl: Vec<f64>,
    coil: Vec<f64>,
    table_size: usize,
    opts: &HamiltonianOptions,
) -> Result<Heatmap> {
    let table = f01_table(params, table_size, opts)?;
    let d = params.junctions.squid_asymmetry();
    Heatmap::from_fn(fbl, coil, |b, c| {
        let (pb, ps) = apply_crosstalk(m, b, c);
        let f = rebase_flux(pb, ps, d);
        Some(periodic_interpolate(&table, f.phi_bias, f.phi_ctrl))
    })
}
