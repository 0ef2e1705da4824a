use std::fs;
use std::path::Path;
use std::process::{Command as Process, Output};

use fluxlab::config::{CnotFluxConfig, Parameters};
use fluxlab::{parse_config, CliError, Command};

const BIN: &str = env!("CARGO_BIN_EXE_fluxlab");

fn fluxlab(dir: &Path, command: &str, config: &str, extra: &[&str]) -> Output {
    let path = dir.join(format!("{command}.json"));
    fs::write(&path, config).unwrap();
    Process::new(BIN)
        .arg(command)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .env_remove("FLUXLAB_JOBS")
        .output()
        .unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (headers, rows)
}

fn config_path_of(err: CliError) -> (String, String) {
    match err {
        CliError::Config { path, message } => (path, message),
        other => panic!("expected config error, got {other}"),
    }
}

#[test]
fn minimal_cnot_config_fills_defaults() {
    let cfg = parse_config(
        r#"{"parameters": {"a": 0.3, "gamma": 0.1}}"#,
        Some(Command::CnotFlux),
    )
    .unwrap();
    let Parameters::CnotFlux(p) = cfg.parameters else {
        panic!("wrong command")
    };
    assert_eq!(p, CnotFluxConfig::default());
    assert_eq!(p.t_min, 0.01);
    assert_eq!(p.t_max(), 4.0 * std::f64::consts::PI);
    assert_eq!(p.step, 1e-3);
    assert!(!cfg.emit_svg);
}

#[test]
fn out_of_range_a_is_rejected() {
    let err = parse_config(r#"{"parameters": {"a": 1.2}}"#, Some(Command::CnotFlux)).unwrap_err();
    let (path, message) = config_path_of(err);
    assert_eq!(path, "parameters.a");
    assert_eq!(message, "a out of [0,1]");
}

#[test]
fn unknown_key_is_named_with_position() {
    let text = "{\n  \"parameters\": {\n    \"gama\": 0.1\n  }\n}";
    let (path, message) = config_path_of(parse_config(text, Some(Command::CnotFlux)).unwrap_err());
    assert_eq!(path, "parameters.gama");
    assert!(message.contains("unknown field `gama`"), "{message}");
    assert!(message.contains("line 3"), "{message}");
    let (path, _) =
        config_path_of(parse_config(r#"{"output": "x"}"#, Some(Command::Blp)).unwrap_err());
    assert_eq!(path, "output");
}

#[test]
fn command_field_must_match() {
    let (path, _) =
        config_path_of(parse_config(r#"{"command": "blp"}"#, Some(Command::Protocol)).unwrap_err());
    assert_eq!(path, "command");
    let cfg = parse_config(r#"{"command": "phase-diagram"}"#, None).unwrap();
    assert_eq!(cfg.command, Command::PhaseDiagram);
    assert!(parse_config("{}", None).is_err());
}

#[test]
fn simulate_requires_parameters_and_square_matrices() {
    let (path, _) = config_path_of(parse_config("{}", Some(Command::Simulate)).unwrap_err());
    assert_eq!(path, "parameters");
    let text = r#"{"parameters": {
        "hamiltonian": {"static": {"re": [[1, 0], [0, 0]]}},
        "initial_state": {"re": [[1, 0, 0], [0, 0, 0]]},
        "t_end": 1}}"#;
    let (path, _) = config_path_of(parse_config(text, Some(Command::Simulate)).unwrap_err());
    assert_eq!(path, "parameters.initial_state");
}

#[test]
fn protocol_rejects_non_boltzmann_q1_and_narrow_steps() {
    let err = parse_config(
        r#"{"parameters": {"q1_frac": 0.110364}}"#,
        Some(Command::Protocol),
    )
    .unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let narrow = r#"{"parameters": {"dts": [1e-2, 3e-3, 1e-3, 3e-4]}}"#;
    let (path, _) = config_path_of(parse_config(narrow, Some(Command::Protocol)).unwrap_err());
    assert_eq!(path, "parameters.dts");
}

#[test]
fn exit_codes_distinguish_failure_classes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = fluxlab(
        dir.path(),
        "cnot-flux",
        r#"{"parameters": {"a": 1.2}}"#,
        &[],
    );
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("a out of [0,1]"));

    let singular = fluxlab(
        dir.path(),
        "cnot-flux",
        r#"{"parameters": {"a": 0.5, "samples": 16}}"#,
        &[],
    );
    assert_eq!(singular.status.code(), Some(4));

    // Detailed balance between the system and the environment: nothing to fit.
    let balanced = r#"{"parameters": {"p_a": 0.3, "q0_frac": 0.7, "e_a": 0.8472978603872037}}"#;
    assert_eq!(
        fluxlab(dir.path(), "protocol", balanced, &[]).status.code(),
        Some(3)
    );

    let missing = Process::new(BIN)
        .args(["blp", "--config", "/nonexistent.json"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn outputs_are_byte_identical_across_runs_and_worker_counts() {
    let config = r#"{"parameters": {"a_points": 11, "gamma_points": 20, "resolution": 400, "spot_check_stride": 37}}"#;
    let runs: Vec<Vec<u8>> = ["1", "3"]
        .iter()
        .map(|jobs| {
            let dir = tempfile::tempdir().unwrap();
            let out = fluxlab(
                dir.path(),
                "phase-diagram",
                config,
                &["--jobs", jobs, "--svg"],
            );
            assert!(
                out.status.success(),
                "{}",
                String::from_utf8_lossy(&out.stderr)
            );
            [
                "phase_diagram.csv",
                "phase_boundaries.csv",
                "phase_spot_checks.csv",
                "phase_diagram.svg",
                "manifest.json",
            ]
            .iter()
            .flat_map(|f| fs::read(dir.path().join("out").join(f)).unwrap())
            .collect()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn manifest_lists_every_artifact_with_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"parameters": {"dts": [1e-2, 1e-3, 3e-4, 1e-4]}}"#;
    let out = fluxlab(dir.path(), "protocol", config, &["--svg"]);
    assert!(out.status.success());
    let root = dir.path().join("out");
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(root.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "protocol");
    assert_eq!(
        manifest["config_sha256"],
        fluxlab::output::sha256_hex(config.as_bytes())
    );
    let files: Vec<&str> = manifest["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["file"].as_str().unwrap())
        .collect();
    assert_eq!(
        files,
        [
            "protocol_scaling.csv",
            "protocol_fit.csv",
            "protocol_bipartite.csv",
            "protocol_scaling.svg"
        ]
    );
    for entry in manifest["artifacts"].as_array().unwrap() {
        let bytes = fs::read(root.join(entry["file"].as_str().unwrap())).unwrap();
        assert_eq!(entry["sha256"], fluxlab::output::sha256_hex(&bytes));
        assert_eq!(entry["bytes"], bytes.len());
    }
    assert!(
        !String::from_utf8_lossy(&fs::read(root.join("manifest.json")).unwrap()).contains("time")
    );
}

#[test]
fn protocol_fit_recovers_second_order() {
    let dir = tempfile::tempdir().unwrap();
    assert!(fluxlab(dir.path(), "protocol", "{}", &[]).status.success());
    let (headers, rows) = read_csv(&dir.path().join("out/protocol_fit.csv"));
    assert_eq!(headers, ["slope", "prefactor"]);
    let slope: f64 = rows[0][0].parse().unwrap();
    assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
    let (_, rows) = read_csv(&dir.path().join("out/protocol_bipartite.csv"));
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert!(row[5].parse::<f64>().unwrap().abs() < 1e-9);
    }
}

#[test]
fn cnot_flux_csv_has_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = fluxlab(
        dir.path(),
        "cnot-flux",
        r#"{"parameters": {"a": 0.3, "gamma": 0.1, "samples": 400}}"#,
        &[],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (headers, rows) = read_csv(&dir.path().join("out/cnot_flux.csv"));
    assert_eq!(
        headers,
        ["t", "F_Cx", "F_dep_x", "F_dep_y", "F_dep_z", "F_x", "F_dep", "F_total", "D", "dD_dt"]
    );
    assert_eq!(rows.len(), 400);
    assert!(!dir.path().join("out/cnot_flux.svg").exists());
    let num = |row: &Vec<String>, k: usize| row[k].parse::<f64>().unwrap();
    for row in &rows {
        for cell in row {
            let mantissa = cell.trim_start_matches('-').split('e').next().unwrap();
            assert_eq!(mantissa.replace('.', "").len(), 12, "{cell}");
        }
        assert!((num(row, 5) - num(row, 1) - num(row, 2)).abs() < 1e-10);
        assert!((num(row, 7) - num(row, 1) - num(row, 6)).abs() < 1e-10);
    }
    assert_eq!(num(&rows[0], 0), 0.01);
    // Weak damping: information flows back at some point of the window.
    assert!(rows.iter().any(|r| num(r, 7) > 1e-6));
}

#[test]
fn phase_diagram_boundaries_at_a_point_three() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"parameters": {"a_values": [0.0, 0.3, 1.0], "gamma_values": [0.1, 0.26, 0.265, 0.52, 0.53, 0.8]}}"#;
    assert!(fluxlab(dir.path(), "phase-diagram", config, &[])
        .status
        .success());
    let (_, rows) = read_csv(&dir.path().join("out/phase_boundaries.csv"));
    let parse = |s: &str| s.parse::<f64>().unwrap();
    assert_eq!((parse(&rows[1][1]), parse(&rows[1][2])), (0.265, 0.53));
    assert_eq!((parse(&rows[0][1]), parse(&rows[0][2])), (0.1, 0.1));
    assert_eq!((parse(&rows[2][1]), parse(&rows[2][2])), (0.1, 0.1));
    let (_, cells) = read_csv(&dir.path().join("out/phase_diagram.csv"));
    let labels: Vec<&str> = cells[6..12].iter().map(|r| r[2].as_str()).collect();
    assert_eq!(labels, ["PD0", "PD0", "PD1", "PD1", "PD2", "PD2"]);
}

#[test]
fn blp_table_follows_class_pattern() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"parameters": {"gamma_values": [0.1, 0.4], "grid_step": 0.02}}"#;
    let out = fluxlab(dir.path(), "blp", config, &["--svg"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (headers, rows) = read_csv(&dir.path().join("out/blp.csv"));
    assert_eq!(headers, ["gamma", "label", "blp_pm_z"]);
    assert_eq!(rows[0][1], "PD0");
    assert!(rows[0][2].parse::<f64>().unwrap() > 1e-4);
    assert_eq!(rows[1][1], "PD1");
    assert!(rows[1][2].parse::<f64>().unwrap().abs() < 1e-6);
    assert!(fs::read_to_string(dir.path().join("out/blp.svg"))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn simulate_thermal_qubit_closes_information_balance() {
    let dir = tempfile::tempdir().unwrap();
    let config = fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../configs/simulate-driven-qubit.json"
    ))
    .unwrap();
    let out = fluxlab(dir.path(), "simulate", &config, &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (headers, rows) = read_csv(&dir.path().join("out/simulate_trajectory.csv"));
    assert_eq!(headers[..4], ["t", "energy", "entropy", "F_total"]);
    assert!(headers.contains(&"F_down".to_string()) && headers.contains(&"dQdt_up".to_string()));
    assert_eq!(rows.len(), 501);
    let (_, energetics) = read_csv(&dir.path().join("out/simulate_energetics.csv"));
    assert!(energetics[0][4].parse::<f64>().unwrap().abs() < 1e-5);
}

#[test]
fn non_hermitian_hamiltonian_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"parameters": {
        "hamiltonian": {"static": {"re": [[1, 1], [0, 0]]}},
        "initial_state": {"re": [[1, 0], [0, 0]]},
        "t_end": 1}}"#;
    let out = fluxlab(dir.path(), "simulate", config, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parameters.hamiltonian.static"));
}
