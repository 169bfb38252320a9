//! Strict JSON run configuration.
//!
//! Every physical key carries its unit in the name. Missing keys take the
//! measured-device defaults; unknown keys are rejected. JSON has no
//! infinity, so a loss channel is switched off with a very large quality
//! factor or a zero amplitude.

use std::path::Path;

use cos2phi::calibration::{KernelRegion, LatticeOptions};
use cos2phi::circuit::{CircuitParams, FluxBias, HamiltonianOptions, JunctionSet};
use cos2phi::fluxonium::FluxoniumParams;
use cos2phi::noise::NoiseConfig;
use cos2phi::spectra::{FitOptions, ResonatorParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// The measured device, as shipped in `configs/paper_device.json`.
pub const PAPER_DEVICE_JSON: &str = include_str!("../configs/paper_device.json");

const UNIT_SUFFIXES: [&str; 9] = [
    "_ghz",
    "_k",
    "_ohm",
    "_phi0_per_a",
    "_phi0",
    "_f",
    "_h",
    "_cooper_pairs",
    "_px",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[derive(Default)]
pub struct RunConfig {
    pub circuit: CircuitSection,
    pub resonator: ResonatorSection,
    pub noise: NoiseSection,
    pub sweep: SweepSection,
    pub solver: SolverSection,
    pub fit: FitSection,
    pub calibration: CalibrationSection,
    pub fluxonium: FluxoniumSection,
    pub potential: PotentialSection,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CircuitSection {
    pub ec_ghz: f64,
    pub ej1_ghz: f64,
    pub ej2_ghz: f64,
    pub ej3_ghz: f64,
    pub ej4_ghz: f64,
    pub ej5_ghz: f64,
    pub ec_int_left_ghz: f64,
    pub ec_int_right_ghz: f64,
    pub ng_cooper_pairs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResonatorSection {
    pub f_res_bare_ghz: f64,
    pub g_coupling_ghz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    /// At 6 GHz.
    pub q_cap_ref: f64,
    pub alpha_cap: f64,
    /// At 0.5 GHz.
    pub q_ind_ref: f64,
    pub mutual_inductance_bias_phi0_per_a: f64,
    pub mutual_inductance_ctrl_phi0_per_a: f64,
    pub bias_line_impedance_ohm: f64,
    pub x_qp: f64,
    pub gap_delta_ghz: f64,
    pub a_one_over_f_phi0: f64,
    pub temperature_k: f64,
    pub loaded_q_resonator: f64,
    pub effective_capacitance_f: Option<f64>,
    pub effective_inductance_h: Option<f64>,
}

/// `steps` evenly spaced points from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub start_phi0: f64,
    pub stop_phi0: f64,
    pub steps: usize,
}

impl AxisSpec {
    pub fn points(&self) -> Vec<f64> {
        match self.steps {
            0 => Vec::new(),
            1 => vec![self.start_phi0],
            n => {
                let step = (self.stop_phi0 - self.start_phi0) / (n - 1) as f64;
                // rounding keeps 0.31 from printing as 0.30999999999999994
                (0..n)
                    .map(|k| ((self.start_phi0 + step * k as f64) * 1e12).round() / 1e12)
                    .collect()
            }
        }
    }

    fn check(&self, field: &str) -> Result<(), CliError> {
        if self.steps == 0 {
            return Err(CliError::Usage(format!(
                "{field}.steps is 0: the sweep is empty"
            )));
        }
        if !(self.start_phi0.is_finite() && self.stop_phi0.is_finite()) {
            return Err(CliError::config(
                format!("{field}.start_phi0"),
                "axis limits must be finite",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub phi_bias: AxisSpec,
    pub phi_ctrl: AxisSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub n_charge: usize,
    /// Eigenstates kept; the spectrum reports `levels − 1` transitions.
    pub levels: usize,
    pub fourier_tol: f64,
    pub multilevel_levels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub tie_e45: bool,
    pub max_sigma_ghz: f64,
    pub n_charge: usize,
    pub max_iterations: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub restarts: usize,
    pub initial_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSection {
    /// Side of the centered kernel as a fraction of each heatmap axis.
    pub kernel_fraction: f64,
    pub threshold: f64,
    pub cluster_radius_px: f64,
    pub min_overlap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FluxoniumSection {
    pub ec_ghz: f64,
    pub ej_ghz: f64,
    pub el_ghz: f64,
    pub basis_size: usize,
    pub levels: usize,
    pub phi_ext: AxisSpec,
    /// Where the two devices are compared.
    pub sweet_spot_phi0: f64,
    pub compare_phi_bias_phi0: f64,
    pub compare_phi_ctrl_phi0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialSection {
    pub phi_bias_phi0: f64,
    pub phi_ctrl_phi0: f64,
    pub points: usize,
    pub levels: usize,
}

impl Default for CircuitSection {
    fn default() -> Self {
        let p = CircuitParams::fitted_device();
        let j = p.junctions;
        CircuitSection {
            ec_ghz: p.ec,
            ej1_ghz: j.ej1,
            ej2_ghz: j.ej2,
            ej3_ghz: j.ej3,
            ej4_ghz: j.ej4,
            ej5_ghz: j.ej5,
            ec_int_left_ghz: p.ec_int_left,
            ec_int_right_ghz: p.ec_int_right,
            ng_cooper_pairs: p.ng,
        }
    }
}

impl Default for ResonatorSection {
    fn default() -> Self {
        let r = ResonatorParams::paper();
        ResonatorSection {
            f_res_bare_ghz: r.f_res_bare,
            g_coupling_ghz: r.g_coupling,
        }
    }
}

impl Default for NoiseSection {
    fn default() -> Self {
        let n = NoiseConfig::default();
        NoiseSection {
            q_cap_ref: n.q_cap_ref,
            alpha_cap: n.alpha_cap,
            q_ind_ref: n.q_ind_ref,
            mutual_inductance_bias_phi0_per_a: n.mutual_inductance_bias,
            mutual_inductance_ctrl_phi0_per_a: n.mutual_inductance_ctrl,
            bias_line_impedance_ohm: n.bias_line_impedance,
            x_qp: n.x_qp,
            gap_delta_ghz: n.gap_delta,
            a_one_over_f_phi0: n.a_one_over_f,
            temperature_k: n.temperature,
            loaded_q_resonator: n.loaded_q_resonator,
            effective_capacitance_f: n.effective_capacitance,
            effective_inductance_h: n.effective_inductance,
        }
    }
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            phi_bias: AxisSpec {
                start_phi0: 0.3,
                stop_phi0: 0.7,
                steps: 81,
            },
            phi_ctrl: AxisSpec {
                start_phi0: 0.378,
                stop_phi0: 0.378,
                steps: 1,
            },
        }
    }
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            n_charge: 40,
            levels: 5,
            fourier_tol: 1e-10,
            multilevel_levels: 5,
        }
    }
}

impl Default for FitSection {
    fn default() -> Self {
        let f = FitOptions::default();
        FitSection {
            tie_e45: f.tie_e45,
            max_sigma_ghz: f.max_sigma,
            n_charge: f.n_charge,
            max_iterations: f.max_iterations,
            rel_tol: f.rel_tol,
            abs_tol: f.abs_tol,
            restarts: f.restarts,
            initial_step: f.initial_step,
        }
    }
}

impl Default for CalibrationSection {
    fn default() -> Self {
        let l = LatticeOptions::default();
        CalibrationSection {
            kernel_fraction: 0.4,
            threshold: l.threshold,
            cluster_radius_px: l.cluster_radius,
            min_overlap: l.min_overlap,
        }
    }
}

impl Default for FluxoniumSection {
    fn default() -> Self {
        let f = FluxoniumParams::paper();
        FluxoniumSection {
            ec_ghz: f.ec,
            ej_ghz: f.ej,
            el_ghz: f.el,
            basis_size: f.basis_size,
            levels: 4,
            phi_ext: AxisSpec {
                start_phi0: 0.0,
                stop_phi0: 1.0,
                steps: 101,
            },
            sweet_spot_phi0: 0.5,
            compare_phi_bias_phi0: 0.5,
            compare_phi_ctrl_phi0: 0.378,
        }
    }
}

impl Default for PotentialSection {
    fn default() -> Self {
        PotentialSection {
            phi_bias_phi0: 0.5,
            phi_ctrl_phi0: 0.378,
            points: 401,
            levels: 4,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    /// Bundled measured-device configuration.
    pub fn paper() -> Self {
        Self::from_json(PAPER_DEVICE_JSON).expect("bundled configuration is valid")
    }

    /// Pretty JSON with every key present, LF line endings and a trailing newline.
    pub fn normalized(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// SHA-256 of the normalized dump, hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.normalized().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn circuit(&self) -> CircuitParams {
        let c = &self.circuit;
        CircuitParams {
            ec: c.ec_ghz,
            junctions: JunctionSet {
                ej1: c.ej1_ghz,
                ej2: c.ej2_ghz,
                ej3: c.ej3_ghz,
                ej4: c.ej4_ghz,
                ej5: c.ej5_ghz,
            },
            ec_int_left: c.ec_int_left_ghz,
            ec_int_right: c.ec_int_right_ghz,
            ng: c.ng_cooper_pairs,
        }
    }

    pub fn resonator(&self) -> ResonatorParams {
        ResonatorParams {
            f_res_bare: self.resonator.f_res_bare_ghz,
            g_coupling: self.resonator.g_coupling_ghz,
        }
    }

    pub fn noise(&self) -> NoiseConfig {
        let n = &self.noise;
        NoiseConfig {
            q_cap_ref: n.q_cap_ref,
            alpha_cap: n.alpha_cap,
            q_ind_ref: n.q_ind_ref,
            mutual_inductance_bias: n.mutual_inductance_bias_phi0_per_a,
            mutual_inductance_ctrl: n.mutual_inductance_ctrl_phi0_per_a,
            bias_line_impedance: n.bias_line_impedance_ohm,
            x_qp: n.x_qp,
            gap_delta: n.gap_delta_ghz,
            a_one_over_f: n.a_one_over_f_phi0,
            temperature: n.temperature_k,
            loaded_q_resonator: n.loaded_q_resonator,
            effective_capacitance: n.effective_capacitance_f,
            effective_inductance: n.effective_inductance_h,
        }
    }

    pub fn hamiltonian_options(&self) -> HamiltonianOptions {
        HamiltonianOptions {
            n_charge: self.solver.n_charge,
            tol: self.solver.fourier_tol,
            ..Default::default()
        }
    }

    pub fn fit_options(&self) -> FitOptions {
        let f = &self.fit;
        FitOptions {
            tie_e45: f.tie_e45,
            max_sigma: f.max_sigma_ghz,
            n_charge: f.n_charge,
            max_iterations: f.max_iterations,
            rel_tol: f.rel_tol,
            abs_tol: f.abs_tol,
            restarts: f.restarts,
            seed: self.seed,
            initial_step: f.initial_step,
        }
    }

    pub fn lattice_options(&self) -> LatticeOptions {
        let c = &self.calibration;
        LatticeOptions {
            threshold: c.threshold,
            cluster_radius: c.cluster_radius_px,
            min_overlap: c.min_overlap,
        }
    }

    pub fn kernel(&self, h: &cos2phi::calibration::Heatmap) -> KernelRegion {
        KernelRegion::centered(h, self.calibration.kernel_fraction)
    }

    pub fn fluxonium(&self) -> FluxoniumParams {
        let f = &self.fluxonium;
        FluxoniumParams {
            ec: f.ec_ghz,
            ej: f.ej_ghz,
            el: f.el_ghz,
            phi_ext: f.sweet_spot_phi0,
            basis_size: f.basis_size,
        }
    }

    /// Sweep grid, bias varying fastest.
    pub fn flux_grid(&self) -> Vec<FluxBias> {
        let p = self.circuit();
        let bias = self.sweep.phi_bias.points();
        self.sweep
            .phi_ctrl
            .points()
            .iter()
            .flat_map(|&s| bias.iter().map(move |&b| p.flux(b, s)))
            .collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        in_section("circuit", &self.circuit, self.circuit().validate())?;
        in_section("resonator", &self.resonator, self.resonator().validate())?;
        in_section("noise", &self.noise, self.noise().validate())?;
        in_section("fluxonium", &self.fluxonium, self.fluxonium().validate())?;
        self.sweep.phi_bias.check("sweep.phi_bias")?;
        self.sweep.phi_ctrl.check("sweep.phi_ctrl")?;
        self.fluxonium.phi_ext.check("fluxonium.phi_ext")?;
        let s = &self.solver;
        if s.n_charge < cos2phi::circuit::hamiltonian::MIN_N_CHARGE {
            return Err(CliError::config(
                "solver.n_charge",
                format!("must be >= {}", cos2phi::circuit::hamiltonian::MIN_N_CHARGE),
            ));
        }
        if s.levels < 2 || s.levels > 2 * s.n_charge + 1 {
            return Err(CliError::config(
                "solver.levels",
                format!("must be in 2..={}", 2 * s.n_charge + 1),
            ));
        }
        if s.multilevel_levels < 2 || s.multilevel_levels + 1 > 2 * s.n_charge + 1 {
            return Err(CliError::config(
                "solver.multilevel_levels",
                "must be >= 2 and fit the charge basis",
            ));
        }
        if !(s.fourier_tol.is_finite() && s.fourier_tol > 0.0) {
            return Err(CliError::config("solver.fourier_tol", "must be > 0"));
        }
        let f = &self.fit;
        if f.n_charge < cos2phi::circuit::hamiltonian::MIN_N_CHARGE {
            return Err(CliError::config(
                "fit.n_charge",
                format!("must be >= {}", cos2phi::circuit::hamiltonian::MIN_N_CHARGE),
            ));
        }
        for (name, v) in [
            ("fit.max_sigma_ghz", f.max_sigma_ghz),
            ("fit.rel_tol", f.rel_tol),
            ("fit.initial_step", f.initial_step),
        ] {
            if !(v > 0.0) {
                return Err(CliError::config(name, "must be > 0"));
            }
        }
        if !(f.abs_tol >= 0.0 && f.abs_tol.is_finite()) {
            return Err(CliError::config("fit.abs_tol", "must be finite and >= 0"));
        }
        let c = &self.calibration;
        if !(c.kernel_fraction > 0.0 && c.kernel_fraction <= 1.0) {
            return Err(CliError::config(
                "calibration.kernel_fraction",
                "must be in (0, 1]",
            ));
        }
        if !(c.threshold > -1.0 && c.threshold < 1.0) {
            return Err(CliError::config(
                "calibration.threshold",
                "must be in (-1, 1)",
            ));
        }
        if !(c.cluster_radius_px.is_finite() && c.cluster_radius_px >= 0.0) {
            return Err(CliError::config(
                "calibration.cluster_radius_px",
                "must be finite and >= 0",
            ));
        }
        let fx = &self.fluxonium;
        if fx.levels < 2 || fx.levels > fx.basis_size {
            return Err(CliError::config(
                "fluxonium.levels",
                "must be in 2..=basis_size",
            ));
        }
        for (name, v) in [
            ("fluxonium.sweet_spot_phi0", fx.sweet_spot_phi0),
            ("fluxonium.compare_phi_bias_phi0", fx.compare_phi_bias_phi0),
            ("fluxonium.compare_phi_ctrl_phi0", fx.compare_phi_ctrl_phi0),
            ("potential.phi_bias_phi0", self.potential.phi_bias_phi0),
            ("potential.phi_ctrl_phi0", self.potential.phi_ctrl_phi0),
        ] {
            if !v.is_finite() {
                return Err(CliError::config(name, "must be finite"));
            }
        }
        let p = &self.potential;
        if p.points < 2 {
            return Err(CliError::config("potential.points", "must be >= 2"));
        }
        if p.levels < 1 || p.levels > 2 * s.n_charge + 1 {
            return Err(CliError::config(
                "potential.levels",
                "must be >= 1 and fit the charge basis",
            ));
        }
        Ok(())
    }
}

/// Re-labels a core validation error with the config key it came from.
fn in_section<T: Serialize>(
    section: &str,
    value: &T,
    r: cos2phi::Result<()>,
) -> Result<(), CliError> {
    match r {
        Ok(()) => Ok(()),
        Err(cos2phi::Error::Validation { field, reason }) => {
            let keys: Vec<String> = match serde_json::to_value(value) {
                Ok(serde_json::Value::Object(m)) => m.keys().cloned().collect(),
                _ => Vec::new(),
            };
            let key = keys
                .iter()
                .find(|k| {
                    **k == field || UNIT_SUFFIXES.iter().any(|u| **k == format!("{field}{u}"))
                })
                .cloned()
                .unwrap_or(field);
            Err(CliError::config(format!("{section}.{key}"), reason))
        }
        Err(e) => Err(CliError::Core(e)),
    }
}
