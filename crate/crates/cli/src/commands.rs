//! One function per subcommand. Each returns its artifacts as `(file name,
//! contents)` pairs so that the caller decides where they go.

use std::f64::consts::PI;
use std::path::Path;

use cos2phi::calibration::{calibrate_crosstalk, CrosstalkCalibration, Heatmap};
use cos2phi::circuit::operators::phase_grid_wavefunctions;
use cos2phi::circuit::{solve, total_potential, FluxBias};
use cos2phi::fluxonium::{
    fluxonium_potential, fluxonium_spectrum, fluxonium_t1_budget, fluxonium_wavefunctions,
    solve_fluxonium,
};
use cos2phi::multilevel::multilevel_t1;
use cos2phi::noise::{t1_budget_with, BudgetChannel, T1Budget};
use cos2phi::spectra::{
    fit_spectrum, resonator_shift_with, transition_spectrum_sweep, FitResult, LevelOrdering,
    SpectroscopyDataset,
};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{to_json, Cell, Provenance, Table};

pub type Artifacts = Vec<(String, String)>;

fn provenance(cfg: &RunConfig, command: &str) -> Provenance {
    Provenance::new(command, cfg.hash(), cfg.seed)
}

fn flux_cells(f: &FluxBias) -> Vec<Cell> {
    vec![f.phi_bias.into(), f.phi_ctrl.into()]
}

/// `f_0k` over the sweep grid.
pub fn spectrum(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let params = cfg.circuit();
    let transitions = cfg.solver.levels - 1;
    let sweep = transition_spectrum_sweep(
        &params,
        &cfg.flux_grid(),
        transitions,
        &cfg.hamiltonian_options(),
        LevelOrdering::Energy,
    )?;
    let mut cols = vec!["phi_bias_phi0".to_string(), "phi_ctrl_phi0".to_string()];
    cols.extend((1..=transitions).map(|k| format!("f0{k}_ghz")));
    let mut t = Table::new(cols);
    for p in sweep {
        let mut row = flux_cells(&p.flux);
        row.extend(p.transitions?.into_iter().map(Cell::from));
        t.push(row);
    }
    Ok(vec![(
        "spectrum.csv".into(),
        t.to_csv(&provenance(cfg, "spectrum")),
    )])
}

/// Dispersive shifts of the resonator with the qubit in |0⟩ and in |1⟩.
pub fn resonator_shift(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let params = cfg.circuit();
    let res = cfg.resonator();
    let opts = cfg.hamiltonian_options();
    let levels = cfg.solver.levels;
    let grid = cfg.flux_grid();
    let rows: Vec<Result<Vec<Cell>, CliError>> = grid
        .par_iter()
        .map(|f| {
            let g = resonator_shift_with(&params, f, &res, 0, levels, &opts)?;
            let e = resonator_shift_with(&params, f, &res, 1, levels, &opts)?;
            let mut row = flux_cells(f);
            row.extend([
                g.shift.into(),
                e.shift.into(),
                (res.f_res_bare + g.shift).into(),
                (res.f_res_bare + e.shift).into(),
                g.truncation_change
                    .abs()
                    .max(e.truncation_change.abs())
                    .into(),
                (g.near_degenerate || e.near_degenerate).into(),
            ]);
            Ok(row)
        })
        .collect();
    let mut t = Table::new([
        "phi_bias_phi0",
        "phi_ctrl_phi0",
        "shift_ground_ghz",
        "shift_excited_ghz",
        "f_res_ground_ghz",
        "f_res_excited_ghz",
        "truncation_change_ghz",
        "near_degenerate",
    ]);
    for r in rows {
        t.push(r?);
    }
    Ok(vec![(
        "resonator_shift.csv".into(),
        t.to_csv(&provenance(cfg, "resonator-shift")),
    )])
}

fn budget_columns() -> Vec<String> {
    let mut cols: Vec<String> = BudgetChannel::ALL
        .iter()
        .map(|c| format!("rate_{}_per_s", c.name()))
        .collect();
    cols.extend(
        [
            "total_rate_per_s",
            "t1_us",
            "dominant",
            "purcell_near_resonant",
        ]
        .map(String::from),
    );
    cols
}

fn budget_cells(b: &T1Budget) -> Vec<Cell> {
    let mut row: Vec<Cell> = BudgetChannel::ALL
        .iter()
        .map(|&c| b.rate(c).into())
        .collect();
    row.extend([
        b.total_rate.into(),
        (b.t1 * 1e6).into(),
        b.dominant().name().into(),
        b.purcell_near_resonant.into(),
    ]);
    row
}

/// Per-channel relaxation rates of the 0–1 transition over the sweep grid.
pub fn t1_budget(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let params = cfg.circuit();
    let (res, noise, opts) = (cfg.resonator(), cfg.noise(), cfg.hamiltonian_options());
    let grid = cfg.flux_grid();
    let budgets: Vec<_> = grid
        .par_iter()
        .map(|f| t1_budget_with(&params, f, &res, &noise, &opts))
        .collect();
    let mut cols = vec![
        "phi_bias_phi0".to_string(),
        "phi_ctrl_phi0".to_string(),
        "f01_ghz".to_string(),
    ];
    cols.extend(budget_columns());
    let mut t = Table::new(cols);
    for (f, b) in grid.iter().zip(budgets) {
        let b = b?;
        let mut row = flux_cells(f);
        row.push(b.frequency.into());
        row.extend(budget_cells(&b));
        t.push(row);
    }
    Ok(vec![(
        "t1_budget.csv".into(),
        t.to_csv(&provenance(cfg, "t1-budget")),
    )])
}

/// Effective T1 from the multilevel rate equation next to the two-level value.
pub fn multilevel(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let params = cfg.circuit();
    let (res, noise, opts) = (cfg.resonator(), cfg.noise(), cfg.hamiltonian_options());
    let n = cfg.solver.multilevel_levels;
    let grid = cfg.flux_grid();
    let out: Vec<_> = grid
        .par_iter()
        .map(|f| multilevel_t1(&params, f, &res, &noise, n, &opts))
        .collect();
    let mut t = Table::new([
        "phi_bias_phi0",
        "phi_ctrl_phi0",
        "n_levels",
        "t1_us",
        "t1_next_us",
        "relative_change",
        "two_level_t1_us",
        "good_fit",
    ]);
    for (f, m) in grid.iter().zip(out) {
        let m = m?;
        let mut row = flux_cells(f);
        row.extend([
            m.n_levels.into(),
            (m.t1 * 1e6).into(),
            (m.t1_next * 1e6).into(),
            m.relative_change.into(),
            (m.two_level_t1 * 1e6).into(),
            m.good_fit.into(),
        ]);
        t.push(row);
    }
    Ok(vec![(
        "multilevel_t1.csv".into(),
        t.to_csv(&provenance(cfg, "multilevel-t1")),
    )])
}

/// Fits the junction energies to a spectroscopy CSV, starting from the configured circuit.
pub fn fit(cfg: &RunConfig, data: &Path) -> Result<Artifacts, CliError> {
    let dataset = SpectroscopyDataset::from_path(data)?;
    let result: FitResult = fit_spectrum(
        &dataset,
        cfg.circuit.ec_ghz,
        &cfg.circuit().junctions,
        &cfg.fit_options(),
    )?;
    Ok(vec![(
        "fit_result.json".into(),
        to_json(&provenance(cfg, "fit-spectrum"), &result),
    )])
}

pub fn calibrate(cfg: &RunConfig, heatmap: &Path) -> Result<Artifacts, CliError> {
    let h = Heatmap::from_path(heatmap)?;
    let result: CrosstalkCalibration =
        calibrate_crosstalk(&h, &cfg.kernel(&h), &cfg.lattice_options())?;
    Ok(vec![(
        "crosstalk.json".into(),
        to_json(&provenance(cfg, "calibrate-crosstalk"), &result),
    )])
}

/// Fluxonium spectrum and potential, and both devices' budgets side by side.
pub fn fluxonium_compare(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let prov = provenance(cfg, "fluxonium-compare");
    let fx = &cfg.fluxonium;
    let p = cfg.fluxonium();
    let (res, noise) = (cfg.resonator(), cfg.noise());

    let axis = fx.phi_ext.points();
    let spec = fluxonium_spectrum(&p, &axis, fx.levels)?;
    let mut cols = vec!["phi_ext_phi0".to_string()];
    cols.extend((1..fx.levels).map(|k| format!("f0{k}_ghz")));
    let mut t = Table::new(cols);
    for (phi, row) in axis.iter().zip(spec) {
        let mut cells = vec![Cell::from(*phi)];
        cells.extend(row.into_iter().map(Cell::from));
        t.push(cells);
    }
    let spectrum_csv = t.to_csv(&prov);

    // three wells either side of the external phase
    let eig = solve_fluxonium(&p, fx.levels)?;
    let n = cfg.potential.points;
    let centre = p.phase_ext();
    let phases: Vec<f64> = (0..n)
        .map(|k| centre - 3.0 * PI + 6.0 * PI * k as f64 / (n - 1) as f64)
        .collect();
    let psi = fluxonium_wavefunctions(&eig, &phases);
    let potential_csv = potential_table(
        &phases,
        |phi| fluxonium_potential(&p, phi),
        &eig.energies,
        |r, k| psi[(r, k)] * psi[(r, k)],
    )
    .to_csv(&prov);

    let flux = cfg
        .circuit()
        .flux(fx.compare_phi_bias_phi0, fx.compare_phi_ctrl_phi0);
    let qubit = t1_budget_with(
        &cfg.circuit(),
        &flux,
        &res,
        &noise,
        &cfg.hamiltonian_options(),
    )?;
    let fluxonium = fluxonium_t1_budget(&p, &noise, &res)?;
    let mut cols = vec!["device".to_string(), "f01_ghz".to_string()];
    cols.extend(budget_columns());
    let mut t = Table::new(cols);
    for (name, b) in [("cos2phi", &qubit), ("fluxonium", &fluxonium)] {
        let mut row = vec![Cell::from(name), b.frequency.into()];
        row.extend(budget_cells(b));
        t.push(row);
    }
    Ok(vec![
        ("fluxonium_spectrum.csv".into(), spectrum_csv),
        ("fluxonium_potential.csv".into(), potential_csv),
        ("comparison.csv".into(), t.to_csv(&prov)),
    ])
}

/// Potential, levels and |ψ|² on one period of the phase at a single flux point.
pub fn potential(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let params = cfg.circuit();
    let pc = &cfg.potential;
    let flux = params.flux(pc.phi_bias_phi0, pc.phi_ctrl_phi0);
    let (eig, _) = solve(&params, &flux, &cfg.hamiltonian_options(), pc.levels)?;
    let psi = phase_grid_wavefunctions(&eig, pc.points);
    let phases: Vec<f64> = (0..pc.points)
        .map(|g| -PI + 2.0 * PI * g as f64 / pc.points as f64)
        .collect();
    let t = potential_table(
        &phases,
        |phi| total_potential(&params, &flux, phi),
        &eig.energies,
        |r, k| psi[(r, k)].norm_sqr(),
    );
    Ok(vec![(
        "potential.csv".into(),
        t.to_csv(&provenance(cfg, "potential")),
    )])
}

/// Columns `phi_rad, u_ghz`, then per level its energy, `|ψ|²`, and `|ψ|²`
/// scaled and offset by the energy for plotting inside the potential.
fn potential_table(
    phases: &[f64],
    u: impl Fn(f64) -> f64,
    energies: &[f64],
    density: impl Fn(usize, usize) -> f64,
) -> Table {
    let levels = energies.len();
    let peak = (0..phases.len())
        .flat_map(|r| (0..levels).map(move |k| (r, k)))
        .map(|(r, k)| density(r, k))
        .fold(0.0, f64::max);
    let spacing = if levels > 1 {
        energies[1] - energies[0]
    } else {
        1.0
    };
    let scale = if peak > 0.0 {
        0.5 * spacing / peak
    } else {
        0.0
    };
    let mut cols = vec!["phi_rad".to_string(), "u_ghz".to_string()];
    for k in 0..levels {
        cols.extend([
            format!("e{k}_ghz"),
            format!("psi{k}_abs2"),
            format!("psi{k}_offset_ghz"),
        ]);
    }
    let mut t = Table::new(cols);
    for (r, &phi) in phases.iter().enumerate() {
        let mut row = vec![Cell::from(phi), u(phi).into()];
        for (k, &e) in energies.iter().enumerate() {
            let d = density(r, k);
            row.extend([e.into(), d.into(), (e + scale * d).into()]);
        }
        t.push(row);
    }
    t
}
