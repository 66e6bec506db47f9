use std::path::Path;
use std::process::{Command, Output};

use anisowave::wavefront::angular_hausdorff;
use anisowave_cli::config::{self, GridKind, PartialConfig};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anisowave")).args(args).output().unwrap()
}

fn run_env(args: &[&str], key: &str, val: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anisowave")).args(args).env(key, val).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn angles(v: &serde_json::Value, key: &str) -> Vec<f64> {
    v[key].as_array().unwrap().iter().map(|a| a.as_f64().unwrap()).collect()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn wf_gaussian_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    let o = run(&["wf", "--datum", "gaussian:1", "--sigma", "1", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(angles(&json(&o), "singular_angles_deg").is_empty());
    for f in ["config.json", "estimate.json", "decay.csv", "stft.pgm"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let csv = std::fs::read_to_string(out.join("decay.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("direction_angle_deg,lambda,value,retained"));
    let pgm = std::fs::read(out.join("stft.pgm")).unwrap();
    let header = b"P5\n1024 1024\n65535\n";
    assert!(pgm.starts_with(header));
    assert_eq!(pgm.len(), header.len() + 2 * 1024 * 1024);
}

#[test]
fn wf_delta_is_vertical() {
    let o = run(&["wf", "--datum", "delta:0", "--sigma", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let got = angles(&json(&o), "singular_angles_deg");
    assert!(angular_hausdorff(&got, &[90.0, 270.0]) <= 5.0, "{got:?}");
}

#[test]
fn wf_tiny_grid_is_low_confidence() {
    let o = run(&["wf", "--datum", "delta:0", "--sigma", "1", "--n", "16"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(json(&o)["low_confidence"].as_bool().unwrap());
    assert!(stderr(&o).contains("window width raised"));
}

#[test]
fn flow_quarter_turn() {
    let dir = tempfile::tempdir().unwrap();
    let t = std::f64::consts::FRAC_PI_2.to_string();
    let o = run(&["flow", "--symbol", "harmonic:0.5", "--z0", "1,0", "--t", &t, "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!(row[1].abs() < 1e-9 && (row[2] + 1.0).abs() < 1e-9, "{row:?}");
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,x,xi,energy"));
    assert!(csv.lines().count() > 1000);
}

#[test]
fn flow_zero_time_is_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["flow", "--t", "0", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn flow_commutation_report() {
    let o = run(&["flow", "--symbol", "radial_power:1,1,2", "--sigma", "1/2", "--t", "0.2", "--check-commutation"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("commutation: pass"), "{}", stdout(&o));
    let o = run(&["flow", "--symbol", "airy:0,0,1:1", "--t", "0.2", "--check-commutation"]);
    assert!(stdout(&o).contains("commutation: fail"), "{}", stdout(&o));
}

#[test]
fn verify_airy_and_harmonic() {
    let o =
        run(&["verify", "--engine", "airy", "--datum", "delta:0", "--grid", "self-dual", "--n", "2048", "--t", "0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(&o);
    assert!(r["hausdorff_deg"].as_f64().unwrap() < 6.0, "{r}");
    let o = run(&[
        "verify",
        "--engine",
        "harmonic",
        "--datum",
        "constant",
        "--grid",
        "self-dual",
        "--n",
        "512",
        "--t",
        "0.4",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(json(&o)["hausdorff_deg"].as_f64().unwrap() < 6.0);
}

#[test]
fn usage_errors_exit_one() {
    let o = run(&["verify", "--engine", "warp", "--datum", "delta:0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage:"), "{}", stderr(&o));
    for args in [
        &["bogus"][..],
        &["wf"],
        &["wf", "--datum", "nothing:1"],
        &["wf", "--datum", "delta:0", "--n", "100"],
        &["wf", "--datum", "delta:0", "--window-width", "0.01"],
        &["flow", "--symbol", "wobble"],
        &[
            "verify", "--datum", "delta:0", "--symbol", "harmonic", "--sigma", "1/2", "--engine", "harmonic", "--n",
            "256",
        ],
        &["propagate", "--datum", "delta:0", "--engine", "cn"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn config_files_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    for bad in [r#"{"datum": "delta:0"}"#, r#"{"schema_version": 9}"#, r#"{"schema_version": 1, "extra": 0}"#, "{"] {
        std::fs::write(&p, bad).unwrap();
        let o = run(&["wf", "--config", path(&p)]);
        assert_eq!(o.status.code(), Some(1), "{bad}");
    }
    std::fs::write(&p, r#"{"schema_version": 1, "command": "flow"}"#).unwrap();
    assert_eq!(run(&["wf", "--config", path(&p), "--datum", "delta:0"]).status.code(), Some(1));
    std::fs::write(&p, r#"{"schema_version": 1, "datum": "gaussian:1", "grid": {"n": 256, "length": 30}}"#).unwrap();
    let o = run(&["wf", "--config", path(&p)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn config_round_trips() {
    let text =
        r#"{"schema_version": 1, "datum": "chirp:0.5,2", "sigma": "1/2", "grid": {"kind": "balanced", "n": 512}}"#;
    let parsed: PartialConfig = serde_json::from_str(text).unwrap();
    let again: PartialConfig = serde_json::from_str(&serde_json::to_string(&parsed).unwrap()).unwrap();
    assert_eq!(again, parsed);

    let (cfg, _) = parsed.resolve(config::Command::Verify).unwrap();
    assert_eq!(cfg.grid.kind, GridKind::Balanced);
    let dx = cfg.grid.length / 512.0;
    assert_eq!(cfg.window_width, (4.0 * dx).max(1.0));
    let (back, notes) = cfg.to_partial().resolve(config::Command::Verify).unwrap();
    assert_eq!(back, cfg);
    assert!(notes.is_empty());
    let json = serde_json::to_string(&cfg).unwrap();
    assert_eq!(serde_json::from_str::<config::ExperimentConfig>(&json).unwrap(), cfg);
}

#[test]
fn archives_rerun_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = [
        "verify",
        "--engine",
        "cn",
        "--datum",
        "delta:0",
        "--grid",
        "self-dual",
        "--n",
        "256",
        "--t",
        "0.3",
        "--steps",
        "50",
    ];
    let o = run(&[&args[..], &["--out", path(&a)]].concat());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["verify", "--config", path(&a.join("config.json")), "--out", path(&b)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["config.json", "report.json", "diagnostics.csv", "states/initial.json", "states/final.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    // Re-running into an existing directory replaces it.
    let o = run(&["verify", "--config", path(&a.join("config.json")), "--out", path(&b)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn thread_cap_does_not_change_results() {
    let args = ["wf", "--datum", "chirp:0.5,2", "--n", "512", "--length", "30"];
    let a = run(&args);
    let b = run_env(&args, "ANISOWAVE_THREADS", "1");
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn propagate_archives_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p");
    let o = run(&[
        "propagate",
        "--engine",
        "cn",
        "--datum",
        "gaussian:1",
        "--n",
        "256",
        "--length",
        "30",
        "--symbol",
        "airy:0,0,1",
        "--t",
        "0.5",
        "--steps",
        "20",
        "--out",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(&o);
    assert!(r["max_norm_drift"].as_f64().unwrap() < 1e-10);
    let states = std::fs::read_dir(out.join("states")).unwrap().count();
    assert_eq!(states, 11);
    let diag = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().count(), 22);
    let o = run(&["propagate", "--engine", "airy", "--datum", "gaussian:1", "--t", "-0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}
