use std::path::{Path, PathBuf};
use std::process::Command;

use cos2phi::calibration::synth::synthetic_heatmap;
use cos2phi::calibration::{CrosstalkCalibration, CrosstalkMatrix};
use cos2phi::circuit::{CircuitParams, HamiltonianOptions};
use cos2phi::spectra::{model_f01, FitResult, SpectroscopyDataset, SpectroscopyRow};
use cos2phi_cli::output::{read_json, read_table, ParsedTable};
use cos2phi_cli::run_command;

/// Light solver settings so each command runs in well under a second.
const FAST: &str = r#"{
  "sweep": {"phi_bias": {"start_phi0": 0.4, "stop_phi0": 0.6, "steps": 11},
            "phi_ctrl": {"start_phi0": 0.378, "stop_phi0": 0.406, "steps": 2}},
  "solver": {"n_charge": 20, "levels": 4, "multilevel_levels": 4},
  "fluxonium": {"phi_ext": {"start_phi0": 0.4, "stop_phi0": 0.6, "steps": 5}},
  "potential": {"points": 64}
}"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.in.json");
    std::fs::write(&p, text).unwrap();
    p
}

fn run_in(dir: &Path, out: &str, args: &[&str]) -> i32 {
    let cfg = write_config(dir, FAST);
    let out = dir.join(out);
    let mut argv = vec!["cos2phi".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.extend([
        "--config".into(),
        cfg.display().to_string(),
        "--out-dir".into(),
        out.display().to_string(),
    ]);
    run_command(argv)
}

fn table(dir: &Path, file: &str) -> ParsedTable {
    read_table(&std::fs::read_to_string(dir.join(file)).unwrap()).unwrap()
}

const GRID_COMMANDS: [(&str, &[&str]); 6] = [
    ("spectrum", &["spectrum.csv"]),
    ("resonator-shift", &["resonator_shift.csv"]),
    ("t1-budget", &["t1_budget.csv"]),
    ("multilevel-t1", &["multilevel_t1.csv"]),
    (
        "fluxonium-compare",
        &[
            "fluxonium_spectrum.csv",
            "fluxonium_potential.csv",
            "comparison.csv",
        ],
    ),
    ("potential", &["potential.csv"]),
];

#[test]
fn outputs_are_byte_identical_across_runs_and_pool_sizes() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, files) in GRID_COMMANDS {
        assert_eq!(
            run_in(dir.path(), &format!("{cmd}-a"), &[cmd, "--workers", "1"]),
            0,
            "{cmd}"
        );
        assert_eq!(
            run_in(dir.path(), &format!("{cmd}-b"), &[cmd, "--workers", "3"]),
            0,
            "{cmd}"
        );
        for f in files.iter().chain(&["config.json"]) {
            let a = std::fs::read(dir.path().join(format!("{cmd}-a")).join(f)).unwrap();
            let b = std::fs::read(dir.path().join(format!("{cmd}-b")).join(f)).unwrap();
            assert!(a == b, "{cmd}/{f} differs");
            assert!(!a.contains(&b'\r'));
        }
    }
}

#[test]
fn every_csv_reads_back_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, files) in GRID_COMMANDS {
        assert_eq!(run_in(dir.path(), cmd, &[cmd]), 0);
        let out = dir.path().join(cmd);
        let config = std::fs::read_to_string(out.join("config.json")).unwrap();
        let cfg = cos2phi_cli::config::RunConfig::from_json(&config).unwrap();
        for f in files {
            let t = table(&out, f);
            assert_eq!(t.provenance.command, cmd);
            assert_eq!(t.provenance.config_sha256, cfg.hash());
            assert_eq!(
                t.provenance.tool,
                format!("cos2phi {}", env!("CARGO_PKG_VERSION"))
            );
            assert!(!t.rows.is_empty(), "{cmd}/{f}");
            assert!(t.numbers(&t.columns[0]).is_some() || t.columns[0] == "device");
        }
    }
    let spec = table(&dir.path().join("spectrum"), "spectrum.csv");
    assert_eq!(
        spec.columns,
        [
            "phi_bias_phi0",
            "phi_ctrl_phi0",
            "f01_ghz",
            "f02_ghz",
            "f03_ghz"
        ]
    );
    assert_eq!(spec.rows.len(), 22);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), "s1", &["potential", "--seed", "11"]), 0);
    let t = table(&dir.path().join("s1"), "potential.csv");
    assert_eq!(t.provenance.seed, 11);
    let cfg = std::fs::read_to_string(dir.path().join("s1/config.json")).unwrap();
    assert!(cfg.contains("\"seed\": 11"));
}

fn run_with(dir: &Path, config: &str, args: &[&str]) -> i32 {
    let cfg = write_config(dir, config);
    let mut argv = vec!["cos2phi".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.extend([
        "--config".into(),
        cfg.display().to_string(),
        "--out-dir".into(),
        dir.join("out").display().to_string(),
    ]);
    run_command(argv)
}

#[test]
fn spectrum_is_u_shaped_at_large_control_flux() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"sweep": {"phi_bias": {"start_phi0": 0.3, "stop_phi0": 0.7, "steps": 41},
                            "phi_ctrl": {"start_phi0": 0.378, "stop_phi0": 0.406, "steps": 2}},
                  "solver": {"n_charge": 30, "levels": 3}}"#;
    assert_eq!(run_with(dir.path(), cfg, &["spectrum"]), 0);
    let t = table(&dir.path().join("out"), "spectrum.csv");
    let f = t.numbers("f01_ghz").unwrap();
    let (v, u) = (&f[..41], &f[41..]);
    for line in [u, v] {
        // single minimum at the symmetry point, mirror symmetric
        let min = (0..41)
            .min_by(|&a, &b| line[a].total_cmp(&line[b]))
            .unwrap();
        assert_eq!(min, 20);
        assert!(line[..=20].windows(2).all(|w| w[1] < w[0]));
        for k in 0..20 {
            assert!((line[k] - line[40 - k]).abs() < 1e-9);
        }
    }
    // a parabolic bottom quadruples the rise when the distance doubles, a kink only doubles it
    let shape = |l: &[f64]| (l[18] - l[20]) / (l[19] - l[20]);
    assert!(shape(u) > 2.5, "{}", shape(u));
    assert!(shape(v) < shape(u));
}

#[test]
fn t1_dips_at_the_symmetry_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"sweep": {"phi_bias": {"start_phi0": 0.3, "stop_phi0": 0.7, "steps": 81}},
                  "solver": {"n_charge": 30}}"#;
    assert_eq!(run_with(dir.path(), cfg, &["t1-budget"]), 0);
    let t = table(&dir.path().join("out"), "t1_budget.csv");
    let t1 = t.numbers("t1_us").unwrap();
    let dom = t.column("dominant").unwrap();
    let peak = (0..81).max_by(|&a, &b| t1[a].total_cmp(&t1[b])).unwrap();
    // lifetime grows toward the symmetry point, then collapses on it
    assert!(t1[peak] > 5.0 * t1[0], "{} vs {}", t1[peak], t1[0]);
    assert!((peak as i32 - 40).abs() <= 4 && peak != 40);
    assert!(t1[40] < t1[0]);
    assert_eq!(t.rows[40][dom], "one_over_f_bias");
    assert_eq!(t.rows[0][dom], "dielectric");
    let total = t.numbers("total_rate_per_s").unwrap();
    let channels: Vec<Vec<f64>> = t
        .columns
        .iter()
        .filter(|c| c.starts_with("rate_"))
        .map(|c| t.numbers(c).unwrap())
        .collect();
    assert_eq!(channels.len(), 8);
    for (i, tot) in total.iter().enumerate() {
        let sum: f64 = channels.iter().map(|c| c[i]).sum();
        assert!((sum - tot).abs() <= 1e-12 * tot);
    }
}

#[test]
fn fit_spectrum_recovers_perturbed_start() {
    let dir = tempfile::tempdir().unwrap();
    let truth = CircuitParams::fitted_device();
    let mut rows = Vec::new();
    for s in [0.2, 0.378, 0.5] {
        for k in 0..=10 {
            rows.push(SpectroscopyRow {
                phi_bias: 0.05 * k as f64,
                phi_ctrl: s,
                f01: 1.0,
                sigma: 1e-3,
            });
        }
    }
    let placeholder = SpectroscopyDataset::new(rows.clone()).unwrap();
    let f = model_f01(&truth, &placeholder, &HamiltonianOptions::with_n_charge(10)).unwrap();
    for (r, f) in rows.iter_mut().zip(f) {
        r.f01 = f;
    }
    let data = dir.path().join("data.csv");
    std::fs::write(
        &data,
        SpectroscopyDataset::new(rows).unwrap().to_csv().unwrap(),
    )
    .unwrap();
    let cfg = r#"{"circuit": {"ej1_ghz": 43.2, "ej2_ghz": 53.0, "ej3_ghz": 89.0, "ej4_ghz": 35.2, "ej5_ghz": 35.2},
                  "fit": {"n_charge": 10}}"#;
    assert_eq!(
        run_with(
            dir.path(),
            cfg,
            &["fit-spectrum", "--data", data.to_str().unwrap()]
        ),
        0
    );
    let out = read_json::<FitResult>(
        &std::fs::read_to_string(dir.path().join("out/fit_result.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(out.provenance.command, "fit-spectrum");
    let got = out.result.junctions.as_array();
    let want = truth.junctions.as_array();
    let err = got
        .iter()
        .zip(&want)
        .map(|(a, b)| ((a - b) / b).abs())
        .fold(0.0, f64::max);
    assert!(err < 0.01, "{got:?}");
}

#[test]
fn calibrate_crosstalk_from_heatmap_file() {
    let dir = tempfile::tempdir().unwrap();
    let axis = |lo: f64, hi: f64, n: usize| {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect::<Vec<_>>()
    };
    let m = CrosstalkMatrix::paper();
    let h = synthetic_heatmap(
        &CircuitParams::fitted_device(),
        &m,
        axis(-80.0, 80.0, 401),
        axis(-120.0, 120.0, 241),
        64,
        &HamiltonianOptions::with_n_charge(15),
    )
    .unwrap();
    let path = dir.path().join("heatmap.csv");
    std::fs::write(&path, h.to_csv()).unwrap();
    assert_eq!(
        run_with(
            dir.path(),
            "{}",
            &["calibrate-crosstalk", "--heatmap", path.to_str().unwrap()]
        ),
        0
    );
    let text = std::fs::read_to_string(dir.path().join("out/crosstalk.json")).unwrap();
    let cal = read_json::<CrosstalkCalibration>(&text).unwrap().result;
    for r in 0..2 {
        for c in 0..2 {
            assert!(((cal.matrix.m[r][c] - m.m[r][c]) / m.m[r][c]).abs() < 0.01);
        }
    }
}

#[test]
fn exit_codes_follow_the_contract() {
    let bin = env!("CARGO_BIN_EXE_cos2phi");
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(bin).arg("--version").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains(env!("CARGO_PKG_VERSION")));

    let out = Command::new(bin).arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "usage");

    let out = Command::new(bin)
        .args(["fit-spectrum", "--data"])
        .arg(dir.path().join("missing.csv"))
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));

    // white noise has no lattice, which is a numerical failure
    let flat = dir.path().join("noise.csv");
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut csv = String::from("coil_ma\\fbl_ma");
    for j in 0..40 {
        csv.push_str(&format!(",{j}"));
    }
    csv.push('\n');
    for i in 0..40 {
        csv.push_str(&i.to_string());
        for _ in 0..40 {
            csv.push_str(&format!(",{}", next()));
        }
        csv.push('\n');
    }
    std::fs::write(&flat, csv).unwrap();
    let out = Command::new(bin)
        .args(["calibrate-crosstalk", "--heatmap"])
        .arg(&flat)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(out.status.code(), Some(4), "{err}");
    assert_eq!(err["error"], "numerical");
}
