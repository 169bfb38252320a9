use std::process::Command;

use cos2phi_cli::config::{RunConfig, PAPER_DEVICE_JSON};
use cos2phi_cli::error::CliError;
use serde_json::Value;

fn run(args: &[&str], config: &str) -> (i32, Value) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cos2phi"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out-dir")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    let stderr = String::from_utf8(out.stderr).unwrap();
    let err = serde_json::from_str(stderr.trim()).unwrap_or(Value::Null);
    (out.status.code().unwrap(), err)
}

#[test]
fn bundled_config_round_trips_byte_identically() {
    let cfg = RunConfig::from_json(PAPER_DEVICE_JSON).unwrap();
    assert_eq!(cfg.normalized(), PAPER_DEVICE_JSON);
    assert_eq!(cfg, RunConfig::default());
    assert_eq!(
        RunConfig::from_json(&cfg.normalized())
            .unwrap()
            .normalized(),
        PAPER_DEVICE_JSON
    );
}

#[test]
fn bundled_config_carries_device_values() {
    let c = RunConfig::paper();
    assert_eq!(c.circuit.ec_ghz, 0.21);
    assert_eq!(
        [
            c.circuit.ej1_ghz,
            c.circuit.ej2_ghz,
            c.circuit.ej3_ghz,
            c.circuit.ej4_ghz,
            c.circuit.ej5_ghz
        ],
        [42.49, 53.9, 88.11, 35.73, 35.73]
    );
    assert_eq!(c.noise.q_cap_ref, 1e5);
    assert_eq!(c.noise.a_one_over_f_phi0, 1.5e-5);
    assert_eq!(c.noise.temperature_k, 0.04);
}

#[test]
fn partial_config_fills_defaults() {
    let cfg = RunConfig::from_json(r#"{"circuit": {"ec_ghz": 0.3}, "seed": 5}"#).unwrap();
    assert_eq!(cfg.circuit.ec_ghz, 0.3);
    assert_eq!(cfg.circuit.ej3_ghz, 88.11);
    assert_eq!(cfg.seed, 5);
    assert_ne!(cfg.hash(), RunConfig::paper().hash());
}

#[test]
fn negative_charging_energy_names_the_key() {
    match RunConfig::from_json(r#"{"circuit": {"ec_ghz": -0.21}}"#) {
        Err(CliError::Config { field, .. }) => assert_eq!(field, "circuit.ec_ghz"),
        other => panic!("{other:?}"),
    }
    let (code, err) = run(&["spectrum"], r#"{"circuit": {"ec_ghz": -0.21}}"#);
    assert_eq!(code, 3);
    assert_eq!(err["error"], "validation");
    assert_eq!(err["field"], "circuit.ec_ghz");
}

#[test]
fn nested_validation_maps_unit_suffixed_keys() {
    for (json, key) in [
        (r#"{"noise": {"temperature_k": -1}}"#, "noise.temperature_k"),
        (
            r#"{"resonator": {"f_res_bare_ghz": 0}}"#,
            "resonator.f_res_bare_ghz",
        ),
        (r#"{"fluxonium": {"el_ghz": -0.8}}"#, "fluxonium.el_ghz"),
        (r#"{"solver": {"n_charge": 4}}"#, "solver.n_charge"),
    ] {
        match RunConfig::from_json(json) {
            Err(CliError::Config { field, .. }) => assert_eq!(field, key, "{json}"),
            other => panic!("{json}: {other:?}"),
        }
    }
}

#[test]
fn unknown_key_is_rejected_with_position() {
    let text = "{\n  \"circuit\": {\n    \"ec_typo\": 0.21\n  }\n}";
    match RunConfig::from_json(text) {
        Err(CliError::Parse { line, message, .. }) => {
            assert_eq!(line, 3);
            assert!(message.contains("ec_typo"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    let (code, err) = run(&["spectrum"], text);
    assert_eq!(code, 3);
    assert_eq!(err["error"], "parse");
    assert_eq!(err["line"], 3);
}

#[test]
fn malformed_json_reports_line_and_column() {
    let (code, err) = run(&["spectrum"], "{\n  \"seed\": 1,\n  oops\n}");
    assert_eq!(code, 3);
    assert_eq!(err["line"], 3);
    assert!(err["column"].as_u64().unwrap() > 0);
}

#[test]
fn empty_sweep_is_a_usage_error() {
    let cfg = r#"{"sweep": {"phi_bias": {"start_phi0": 0.3, "stop_phi0": 0.7, "steps": 0}}}"#;
    let (code, err) = run(&["spectrum"], cfg);
    assert_eq!(code, 2);
    assert_eq!(err["error"], "usage");
}

#[test]
fn axis_points_hit_both_ends() {
    let cfg = RunConfig::paper();
    let b = cfg.sweep.phi_bias.points();
    assert_eq!(b.len(), 81);
    assert_eq!((b[0], b[80], b[2]), (0.3, 0.7, 0.31));
    assert_eq!(cfg.flux_grid().len(), 81);
}
