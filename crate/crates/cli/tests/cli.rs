//! End-to-end runs of the `dgin` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn dgin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dgin")).args(args).output().expect("run dgin")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.in.toml");
    fs::write(&path, body).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn manifest(out: &Path) -> Value {
    read_json(&out.join("manifest.json"))
}

/// Runs `command` with `config` into `<tmp>/<label>` and returns the exit code
/// and output directory.
fn run(tmp: &TempDir, label: &str, command: &str, config: &str, extra: &[&str]) -> (i32, PathBuf) {
    let out = tmp.path().join(label);
    let cfg = write_config(tmp.path(), config);
    let mut args = vec![command, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = dgin(&args);
    (o.status.code().expect("exit code"), out)
}

#[test]
fn detequiv_at_the_origin_of_the_circular_law() {
    let tmp = TempDir::new().unwrap();
    let (code, out) = run(&tmp, "ok", "detequiv", "n = 16\n", &[]);
    assert_eq!(code, 0);
    let report = read_json(&out.join("detequiv.json"));
    assert!((report["params"]["u_star"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((report["params"]["rho"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let m = manifest(&out);
    assert_eq!(m["exit_code"], 0);
    let listed: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|o| o["path"].as_str().unwrap()).collect();
    assert!(listed.contains(&"detequiv.json"));
}

#[test]
fn outside_the_bulk_exits_with_2() {
    let tmp = TempDir::new().unwrap();
    let (code, out) = run(&tmp, "outside", "detequiv", "n = 16\nz0 = [2.0, 0.0]\n", &[]);
    assert_eq!(code, 2);
    let m = manifest(&out);
    assert_eq!(m["exit_code"], 2);
    assert!(m["error"].as_str().unwrap().contains("outside the bulk"));
}

#[test]
fn malformed_config_exits_with_64_and_still_writes_a_manifest() {
    let tmp = TempDir::new().unwrap();
    let (code, out) = run(&tmp, "bad", "detequiv", "n = = 3\n", &[]);
    assert_eq!(code, 64);
    assert_eq!(manifest(&out)["exit_code"], 64);

    let (code, out) = run(&tmp, "invalid", "detequiv", "n = 1\n", &[]);
    assert_eq!(code, 64);
    assert_eq!(manifest(&out)["exit_code"], 64);
}

#[test]
fn unparsable_arguments_exit_with_64() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("usage");
    let o = dgin(&["detequiv", "--bogus", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(64));
    assert_eq!(manifest(&out)["command"], "usage");
    let o = dgin(&["detequiv", "--n", "many", &format!("--out={}", out.display())]);
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn support_scan_traces_the_unit_circle() {
    let tmp = TempDir::new().unwrap();
    let (code, out) = run(&tmp, "support", "support", "n = 4\n[support]\nresolution = 120\n", &[]);
    assert_eq!(code, 0);
    let step = read_json(&out.join("support.json"))["grid_step"].as_f64().unwrap();
    let text = fs::read_to_string(out.join("contour.csv")).unwrap();
    assert!(text.starts_with("# config_hash="));
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for line in text.lines().skip(2) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        worst = worst.max((v[1].hypot(v[2]) - 1.0).abs());
        rows += 1;
    }
    assert!(rows > 100 && worst < step, "{rows} points, worst deviation {worst}");
}

const UNIVERSALITY: &str = "n = 24\ntrials = 6\nmaster_seed = 9\nwindow_radius = 4.0\n[bins]\nwidth = 0.5\nmax_radius = 2.0\ncompare_up_to = 2.0\n";

fn csv_bytes(out: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn repeated_runs_are_byte_identical_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let (c1, a) = run(&tmp, "a", "universality", UNIVERSALITY, &["--threads", "1"]);
    let (c2, b) = run(&tmp, "b", "universality", UNIVERSALITY, &["--threads", "3"]);
    assert_eq!(c1, c2);
    let (fa, fb) = (csv_bytes(&a), csv_bytes(&b));
    assert_eq!(fa.len(), 2);
    assert_eq!(fa, fb);
    assert_eq!(manifest(&a)["config_hash"], manifest(&b)["config_hash"]);

    let (_, s1) = run(&tmp, "s1", "simulate", UNIVERSALITY, &["--trials", "3"]);
    let (_, s2) = run(&tmp, "s2", "simulate", UNIVERSALITY, &["--trials", "3", "--threads", "2"]);
    let dir = |p: &Path| csv_bytes(&p.join("eigenvalues"));
    assert_eq!(dir(&s1).len(), 3);
    assert_eq!(dir(&s1), dir(&s2));
}

#[test]
fn a_single_trial_is_marked_unreliable() {
    let tmp = TempDir::new().unwrap();
    let (code, out) = run(&tmp, "one", "universality", UNIVERSALITY, &["--trials", "1"]);
    assert_ne!(code, 64);
    let notes = manifest(&out)["notes"].to_string();
    assert!(notes.contains("unreliable"), "{notes}");
    assert_eq!(read_json(&out.join("universality.json"))["reliable"], false);
}

#[test]
fn girko_and_susy_battery_pass_on_defaults() {
    let tmp = TempDir::new().unwrap();
    let (code, out) = run(&tmp, "girko", "girko", "n = 16\n", &[]);
    assert_eq!(code, 0);
    assert!(read_json(&out.join("girko.json"))["result"]["rel_err"].as_f64().unwrap() < 1e-2);

    let (code, out) = run(&tmp, "susy", "verify-susy", "", &[]);
    assert_eq!(code, 0);
    let report = read_json(&out.join("verify_susy.json"));
    assert_eq!(report["all_passed"], true);
    let m = manifest(&out);
    assert!(m["notes"].to_string().contains("Hubbard-Stratonovich"));
    assert!(m["notes"].to_string().contains("Girko"));
}
