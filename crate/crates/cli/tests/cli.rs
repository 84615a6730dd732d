use std::fs;
use std::path::Path;
use std::process::Command;

fn lab(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_nodal-lab")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const BOX_NODAL: &str = r#"{
  "kind": "nodal",
  "geometry": {"kind": "dirichlet_box", "d": 2, "sides": [1, 1]},
  "box_modes": [[1, 1], [2, 2]],
  "output_dir": "unused"
}"#;

#[test]
fn nodal_run_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", BOX_NODAL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(
        lab(&["nodal", "--config", &cfg, "--out", a.to_str().unwrap(), "--threads", "1"]).0,
        0
    );
    assert_eq!(lab(&["nodal", "--config", &cfg, "--out", b.to_str().unwrap()]).0, 0);
    let csv = fs::read(a.join("domains.csv")).unwrap();
    assert_eq!(csv, fs::read(b.join("domains.csv")).unwrap());
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 6);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["artifacts"][0]["path"], "domains.csv");
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"kind": "chain", "geometry": {"kind": "flat_torus", "d": 2, "sides": [1, 1]}, "A": [7], "output_dir": "x"}"#,
    );
    assert_eq!(lab(&["chain", "--config", &bad]).0, 2);
    let cfg = write(dir.path(), "c.json", BOX_NODAL);
    assert_eq!(lab(&["scaling", "--config", &cfg]).0, 2);
    assert_eq!(lab(&["nodal", "--config", "/nonexistent/config.json"]).0, 2);
}

#[test]
fn failing_instances_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"kind": "nodal", "geometry": {"kind": "flat_torus", "d": 2, "sides": [1, 1]}, "levels": [4], "seeds": [1], "deltas": [100.0], "output_dir": "x"}"#,
    );
    let out = dir.path().join("o");
    assert_eq!(lab(&["nodal", "--config", &cfg, "--out", out.to_str().unwrap()]).0, 3);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["failures"].as_array().unwrap().len(), 1);
}

#[test]
fn scaling_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"kind": "scaling", "geometry": {"kind": "flat_torus", "d": 2, "sides": [1, 1]}, "levels": [4, 5, 8, 9], "seeds": [1, 2], "output_dir": "x"}"#,
    );
    let out = dir.path().join("s");
    assert_eq!(
        lab(&["scaling", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed-override", "3"]).0,
        0
    );
    let table = out.join("scaling.csv");
    assert_eq!(fs::read_to_string(&table).unwrap().lines().count(), 5);
    let (code, text) = lab(&["fit", "--table", table.to_str().unwrap(), "--model", "pure_power"]);
    assert_eq!(code, 0);
    let fit: serde_json::Value = serde_json::from_str(&text).unwrap();
    let slope = fit["slope"].as_f64().unwrap();
    assert!(slope < 0.0 && slope > -1.0, "{slope}");
}

#[test]
fn spectrum_writes_grids() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", BOX_NODAL);
    let out = dir.path().join("g");
    assert_eq!(lab(&["spectrum", "--config", &cfg, "--out", out.to_str().unwrap()]).0, 0);
    for name in ["box_1_1.bin", "box_1_1.json", "box_2_2.mode.json"] {
        assert!(out.join(name).exists(), "{name}");
    }
}
