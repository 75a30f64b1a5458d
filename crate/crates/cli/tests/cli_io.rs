//! Configuration parsing, output determinism and exit-code behavior of the
//! command-line tool.

use std::path::Path;
use std::process::Command;

use oligeq_cli::config::{parse_config, Command as Cmd, RunConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oligeq"))
}

fn run_with(dir: &Path, config: &str, out: &str) -> std::process::Output {
    let cfg_path = dir.join("config.json");
    std::fs::write(&cfg_path, config).unwrap();
    bin()
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.join(out))
        .output()
        .unwrap()
}

fn temp_dir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("oligeq_cli_io_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const CD_VERIFY: &str = r#"{"command":"verify","game":{"family":"cobb_douglas","alpha":0.6,"beta":0.8,"players":2,"discount":0.05}}"#;

#[test]
fn minimal_document_fills_defaults() {
    let cfg = parse_config(
        r#"{"command":"ci","game":{"family":"cobb_douglas","alpha":0.6,"beta":0.8,"N":2}}"#,
    )
    .unwrap();
    assert_eq!(cfg.command, Cmd::Ci);
    assert_eq!(cfg.numerics.grid, 200);
    assert_eq!(cfg.numerics.u_window, [0.1, 10.0]);
    assert_eq!(cfg.output.dir, "out");
}

#[test]
fn config_round_trips_through_serialization() {
    let cfg = parse_config(
        r#"{"command":"verify","game":{"family":"isoelastic_pricing","scale":2.0,"elasticity":3.0,"players":2,"discount":0.04},"numerics":{"grid":128,"rho":0.02},"output":{"dir":"elsewhere"}}"#,
    )
    .unwrap();
    let text = serde_json::to_string(&cfg).unwrap();
    let reparsed: RunConfig = parse_config(&text).unwrap();
    assert_eq!(cfg, reparsed);
}

#[test]
fn unknown_keys_are_rejected() {
    let err = parse_config(
        r#"{"command":"ci","game":{"family":"cobb_douglas","alpha":0.6,"beta":0.8,"N":2,"extra":1}}"#,
    )
    .unwrap_err();
    assert_eq!(err.kind, "SchemaError");
}

#[test]
fn unit_curvatures_are_a_value_error() {
    let err = parse_config(
        r#"{"command":"ci","game":{"family":"cobb_douglas","alpha":1.0,"beta":1.0,"N":2}}"#,
    )
    .unwrap_err();
    assert_eq!(err.kind, "ValueError");
}

#[test]
fn finite_horizon_without_bequest_is_a_schema_error() {
    let err = parse_config(
        r#"{"command":"mpne","game":{"family":"cobb_douglas","alpha":0.6,"beta":0.8,"N":2,"horizon":{"type":"finite","t_end":1.0}}}"#,
    )
    .unwrap_err();
    assert_eq!(err.kind, "SchemaError");
}

#[test]
fn nonpositive_tolerances_rejected() {
    let err = parse_config(
        r#"{"command":"ci","game":{"family":"cobb_douglas","alpha":0.6,"beta":0.8,"N":2},"numerics":{"tol_closed":0.0}}"#,
    )
    .unwrap_err();
    assert_eq!(err.kind, "ValueError");
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = temp_dir("determinism");
    let first = run_with(&dir, CD_VERIFY, "a");
    assert!(first.status.success());
    let second = run_with(&dir, CD_VERIFY, "b");
    assert!(second.status.success());
    for name in ["report.json", "curves.csv", "mpne.csv"] {
        let a = std::fs::read(dir.join("a").join(name)).unwrap();
        let b = std::fs::read(dir.join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn curves_round_trip_without_drift() {
    let dir = temp_dir("roundtrip");
    let out = run_with(&dir, CD_VERIFY, "out");
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.join("out/curves.csv")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(header, "u,f,gamma,ell");
    for line in lines {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let (u, f) = (cells[0], cells[1]);
        // the dynamics column re-evaluates exactly from the parsed rate
        assert!((f - (-0.75 * u)).abs() <= 1e-12 * u.max(1.0));
    }
}

#[test]
fn schema_error_exits_one_with_json_envelope() {
    let dir = temp_dir("schema_exit");
    let out = run_with(&dir, r#"{"command":"nope"}"#, "out");
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("\"kind\""), "stderr: {stderr}");
}

#[test]
fn rationalize_exit_codes_separate_verdicts() {
    let dir = temp_dir("rationalize");
    let blocked = r#"{"command":"rationalize","game":{"family":"additive_duopoly","own1":{"type":"cara","alpha":1.0},"own2":{"type":"cara","alpha":1.0},"cross2":{"type":"linear","slope":-2.0},"t_end":1.0,"bequest1":{"type":"exp_slope","scale":1.0,"rate":1.0},"bequest2":{"type":"exp_slope","scale":1.0,"rate":1.0}}}"#;
    let out = run_with(&dir, blocked, "blocked");
    assert_eq!(out.status.code(), Some(2));

    let open = r#"{"command":"rationalize","game":{"family":"additive_duopoly","own1":{"type":"cara","alpha":1.0},"own2":{"type":"cara","alpha":1.0},"t_end":1.0,"bequest1":{"type":"exp_slope","scale":1.0,"rate":1.0},"bequest2":{"type":"exp_slope","scale":1.0,"rate":1.0}}}"#;
    let out = run_with(&dir, open, "open");
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("open/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["verdict"], "rationalizable_candidate");
    assert_eq!(report["constants"]["bequest_link_pass"], 1.0);
}

#[test]
fn sweep_rows_match_oracle() {
    let dir = temp_dir("sweep");
    let cfg = r#"{"command":"sweep","game":{"family":"cobb_douglas","alpha":0.6,"beta":0.8,"players":2,"discount":0.05},"sweep":{"parameter":"beta","values":[0.7,0.9,1.1,1.3]}}"#;
    let out = run_with(&dir, cfg, "out");
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.join("out/sweep.csv")).unwrap();
    let mut lines = text.lines();
    lines.next().unwrap();
    let mut count = 0;
    for line in lines {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let (oracle_ci, pipeline_ci) = (cells[6], cells[7]);
        assert!((oracle_ci - pipeline_ci).abs() <= 1e-12);
        count += 1;
    }
    assert_eq!(count, 4);
}

#[test]
fn report_schema_is_stable() {
    let dir = temp_dir("schema");
    let out = run_with(&dir, CD_VERIFY, "out");
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/report.json")).unwrap())
            .unwrap();
    for key in [
        "verdict",
        "constants",
        "residuals",
        "witnesses",
        "provenance",
        "notes",
    ] {
        assert!(report.get(key).is_some(), "missing report field {key}");
    }
    assert_eq!(report["verdict"], "equivalent");
}
