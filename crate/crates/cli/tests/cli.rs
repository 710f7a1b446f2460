use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn jkolip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jkolip"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("examples")
        .join(format!("{name}.json"))
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.json");
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn list_shows_every_kind() {
    let out = jkolip(&["list-experiments"]);
    assert!(out.status.success());
    let stdout = text(&out.stdout);
    for (kind, _) in jkolip_cli::KINDS {
        assert!(stdout.contains(kind), "missing {kind}");
    }
}

#[test]
fn describe_prints_complete_defaults() {
    let out = jkolip(&["describe", "theorem-sweep"]);
    assert!(out.status.success());
    let stdout = text(&out.stdout);
    for key in [
        "\"alphas\"",
        "\"taus\"",
        "\"instances\"",
        "\"schema_version\"",
    ] {
        assert!(stdout.contains(key), "missing {key}");
    }
    let json = &stdout[stdout.find('{').unwrap()..];
    let parsed = jkolip_cli::RunConfig::from_json(json).expect("defaults parse back");
    assert_eq!(parsed.experiment.kind(), "theorem-sweep");
}

#[test]
fn describe_every_kind_round_trips() {
    for (kind, _) in jkolip_cli::KINDS {
        let s = jkolip_cli::describe_text(kind).unwrap();
        let parsed = jkolip_cli::RunConfig::from_json(&s[s.find('{').unwrap()..]).unwrap();
        assert_eq!(parsed.experiment.kind(), kind);
        parsed.validate().unwrap();
    }
}

#[test]
fn describe_rejects_unknown_or_missing_kind() {
    let out = jkolip(&["describe", "no-such-kind"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("no-such-kind"));
    assert_eq!(jkolip(&["describe"]).status.code(), Some(1));
    assert_eq!(jkolip(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(jkolip(&["--help"]).status.code(), Some(0));
}

#[test]
fn invalid_value_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "experiment": {"kind": "jko1d", "tau": 0.0}}"#,
    );
    let out = jkolip(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        text(&out.stderr).contains("experiment.tau"),
        "{}",
        text(&out.stderr)
    );
    assert!(!dir.path().join("o").exists());
}

#[test]
fn unknown_key_and_bad_schema_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "experiment": {"kind": "jko1d", "taus": 0.1}}"#,
    );
    let out = jkolip(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("taus"), "{}", text(&out.stderr));

    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 2, "experiment": {"kind": "jko1d"}}"#,
    );
    let out = jkolip(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("schema_version"));

    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "experiment": {"kind": "jko3d"}}"#,
    );
    assert_eq!(
        jkolip(&["run", cfg.to_str().unwrap()]).status.code(),
        Some(1)
    );

    let out = jkolip(&["run", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn zero_jobs_is_a_config_error() {
    let out = jkolip(&[
        "run",
        example("gibbs-sweep").to_str().unwrap(),
        "--jobs",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn passing_run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("gibbs");
    let out = jkolip(&[
        "run",
        example("gibbs-sweep").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
    assert!(text(&out.stdout).contains("result: PASS"));
    for f in [
        "config.json",
        "summary.json",
        "theorem_checks.json",
        "summary.txt",
        "sweep.csv",
    ] {
        assert!(out_dir.join(f).exists(), "missing {f}");
    }
    assert!(!out_dir.join("FAILED").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], serde_json::Value::Bool(true));
    assert_eq!(summary["seed"], 7);
}

#[test]
fn vacuous_sweep_passes_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let out = jkolip(&[
        "run",
        example("vacuous").to_str().unwrap(),
        "--out",
        dir.path().join("v").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(
        text(&out.stderr).contains("vacuous"),
        "{}",
        text(&out.stderr)
    );
}

#[test]
fn aborted_run_leaves_failed_marker() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "experiment": {"kind": "jko1d", "steps": 2,
            "potential": {"family": "csv", "path": "missing.csv", "alpha": 0.0}}}"#,
    );
    let out_dir = dir.path().join("o");
    let out = jkolip(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let marker = fs::read_to_string(out_dir.join("FAILED")).unwrap();
    assert!(marker.contains("missing.csv"));
    assert!(out_dir.join("config.json").exists());
}

#[test]
fn csv_inputs_resolve_against_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("index,value\n");
    for i in 0..50 {
        let x = -1.0 + (i as f64 + 0.5) * 2.0 / 50.0;
        csv.push_str(&format!("{i},{}\n", 0.5 * x * x));
    }
    fs::write(dir.path().join("v.csv"), csv).unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "experiment": {"kind": "jko1d", "steps": 3,
            "domain": {"shape": "interval", "a": -1.0, "b": 1.0, "n": 50},
            "potential": {"family": "csv", "path": "v.csv", "alpha": 1.0}}}"#,
    );
    let out = jkolip(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}{}",
        text(&out.stdout),
        text(&out.stderr)
    );
}

#[test]
fn declared_modulus_violation_is_warned() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("index,value\n");
    for i in 0..50 {
        let x = -1.0 + (i as f64 + 0.5) * 2.0 / 50.0;
        csv.push_str(&format!("{i},{}\n", -0.5 * x * x));
    }
    fs::write(dir.path().join("v.csv"), csv).unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "experiment": {"kind": "jko1d", "steps": 2,
            "domain": {"shape": "interval", "a": -1.0, "b": 1.0, "n": 50},
            "potential": {"family": "csv", "path": "v.csv", "alpha": 1.0}}}"#,
    );
    let out = jkolip(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert!(
        text(&out.stderr).contains("declared alpha"),
        "{}",
        text(&out.stderr)
    );
}

#[test]
fn same_seed_same_bytes_regardless_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "seed": 99, "experiment": {"kind": "theorem-sweep",
            "domain": {"shape": "interval", "a": -1.0, "b": 1.0, "n": 60},
            "refine_n": 120, "alphas": [0.0, 2.0], "taus": [0.1], "instances": 6}}"#,
    );
    let run = |name: &str, jobs: &str, seed: Option<&str>| {
        let d = dir.path().join(name);
        let mut args = vec![
            "run",
            cfg.to_str().unwrap(),
            "--out",
            d.to_str().unwrap(),
            "--jobs",
            jobs,
        ];
        if let Some(s) = seed {
            args.extend(["--seed", s]);
        }
        let out = jkolip(&args);
        assert!(out.status.code() == Some(0) || out.status.code() == Some(2));
        (
            fs::read(d.join("summary.json")).unwrap(),
            fs::read(d.join("theorem_checks.json")).unwrap(),
        )
    };
    let a = run("a", "1", None);
    let b = run("b", "4", None);
    assert_eq!(a, b);
    let c = run("c", "2", Some("100"));
    assert_ne!(a.1, c.1);
}
