use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL_CARTPOLE: &str = r#"
name = "small"

[env]
kind = "cartpole"

[topology]
n_input = 40
n_exc = 120
n_inh = 30
k_in = 3
c_rec = 4

[agent]
epoch_length = 200
epochs = 3
eval_steps = 100

[run]
window_ms = 20
"#;

fn lsm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsm"))
        .args(args)
        .output()
        .unwrap()
}

fn config_file(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn usage_errors_exit_one_runtime_errors_exit_two() {
    assert_eq!(lsm(&[]).status.code(), Some(1));
    assert_eq!(lsm(&["train", "--bogus"]).status.code(), Some(1));
    assert_eq!(lsm(&["--help"]).status.code(), Some(0));
    let o = lsm(&["eval", "/nonexistent/model.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error:"));
    assert_eq!(lsm(&["presets", "nope"]).status.code(), Some(2));
}

#[test]
fn train_writes_per_seed_outputs_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_file(dir.path(), SMALL_CARTPOLE);
    let out = dir.path().join("runs");
    let args = [
        "train",
        "--config",
        config.to_str().unwrap(),
        "--seeds",
        "10",
        "--epochs",
        "2",
        "--quiet",
        "--out",
    ];
    let o = lsm(&[&args[..], &[out.to_str().unwrap()]].concat());
    assert!(o.status.success(), "{}", stderr(&o));

    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().filter(|l| !l.starts_with('#')).collect();
    let header: Vec<&str> = rows[0].split(',').collect();
    let seeds_col = header.iter().position(|&h| h == "seeds").unwrap();
    assert_eq!(rows.len(), 3);
    for row in &rows[1..] {
        assert_eq!(row.split(',').nth(seeds_col), Some("10"));
    }
    for seed in 0..10 {
        let metrics = fs::read_to_string(out.join(format!("seed-{seed}/metrics.csv"))).unwrap();
        assert_eq!(metrics.lines().filter(|l| !l.starts_with('#')).count(), 3);
        assert!(out.join(format!("seed-{seed}/model.json")).exists());
    }

    // same seed, same bytes
    let again = dir.path().join("again");
    let args = [
        "train",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "3",
        "--epochs",
        "2",
        "--quiet",
        "--out",
    ];
    let o = lsm(&[&args[..], &[again.to_str().unwrap()]].concat());
    assert!(o.status.success());
    assert_eq!(
        fs::read(out.join("seed-3/metrics.csv")).unwrap(),
        fs::read(again.join("seed-3/metrics.csv")).unwrap()
    );
    assert_eq!(
        fs::read(out.join("seed-3/model.json")).unwrap(),
        fs::read(again.join("seed-3/model.json")).unwrap()
    );

    let trace = dir.path().join("trace.csv");
    let model = out.join("seed-0/model.json");
    let o = lsm(&[
        "eval",
        model.to_str().unwrap(),
        "--steps",
        "50",
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 51);
}

#[test]
fn diagnose_writes_spectrum_traces_and_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("diag");
    let o = lsm(&[
        "diagnose",
        "--preset",
        "cartpole",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let eigenvalues: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("eigenvalues.json")).unwrap()).unwrap();
    assert_eq!(eigenvalues.as_array().unwrap().len(), 150);
    let stability: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("stability.json")).unwrap()).unwrap();
    assert_eq!(stability["inside_unit_circle_fraction"], 1.0);
    assert_eq!(stability["verdict"], "stable");
    let traces = fs::read_to_string(out.join("traces.csv")).unwrap();
    let mut lines = traces.lines();
    assert_eq!(lines.next(), Some("# schema: lsm-membrane v1"));
    assert_eq!(lines.next().unwrap().split(',').count(), 11);
    assert_eq!(lines.count(), 500);
}

#[test]
fn liquid_without_recurrence_is_stable_and_memoryless() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_file(
        dir.path(),
        &SMALL_CARTPOLE.replace("c_rec = 4", "c_rec = 0"),
    );
    let out = dir.path().join("diag");
    let o = lsm(&[
        "diagnose",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stability: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("stability.json")).unwrap()).unwrap();
    assert_eq!(stability["verdict"], "stable");
    assert_eq!(stability["memoryless"], true);
    assert_eq!(stability["spectral_radius"], 0.0);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_file(
        dir.path(),
        &SMALL_CARTPOLE.replace("k_in = 3", "k_in = 3\nk_inn = 4"),
    );
    let o = lsm(&[
        "train",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("k_inn"), "{}", stderr(&o));
}

#[test]
fn presets_are_listed_and_printable() {
    let o = lsm(&["presets"]);
    assert!(o.status.success());
    let names = String::from_utf8(o.stdout).unwrap();
    for name in [
        "cartpole",
        "cartpole-sparse",
        "pacman-7x7",
        "pacman-7x17",
        "pacman-17x19",
        "unbalanced-500",
    ] {
        assert!(names.lines().any(|l| l == name), "{name}");
        let o = lsm(&["presets", name]);
        assert!(o.status.success());
        assert!(String::from_utf8(o.stdout).unwrap().contains("[topology]"));
    }
}
