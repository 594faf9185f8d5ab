use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cnls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cnls")).args(args).output().expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn effective_reports_frequencies() {
    let out = cnls(&["effective", "--p", "1", "--q", "2", "--nu", "0.1", "--rho1", "1", "--rho2", "2"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["omega"], serde_json::json!([1.2, 4.1]));
    assert_eq!(v["result"]["verdict"], "unstable");
    assert_eq!(v["config"]["rho2"], 2.0);
    assert!(v["prng"].as_str().unwrap().contains("ChaCha8"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = cnls(&["effective", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn gate_failures_exit_two_and_name_the_gate() {
    let out = cnls(&["effective", "--nu", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gate: torus parameters"));
    let out = cnls(&["simulate", "--init", "random", "--norm", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eps0"));
    let out = cnls(&["nonres", "measure", "--kappa", "0.2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_one_with_the_error_serialized() {
    let out = cnls(&["simulate", "--init", "random", "--norm", "0.09", "--J", "32", "--dt", "0.5", "--T", "5"]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"], "DriftExceeded");
}

#[test]
fn identical_config_gives_identical_artifacts() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    // same relative paths, run from different working directories
    let run = |dir: &Path| {
        let (csv, js) = (Path::new("run.csv"), Path::new("run.json"));
        let out = Command::new(env!("CARGO_BIN_EXE_cnls")).current_dir(dir).args([
            "simulate", "--init", "random", "--seed", "11", "--norm", "0.08", "--J", "8", "--T", "2", "--stride", "50",
            "--csv", csv.to_str().unwrap(), "--out", js.to_str().unwrap(),
        ]).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (fs::read(dir.join(csv)).unwrap(), fs::read(dir.join(js)).unwrap())
    };
    let (c1, j1) = run(d1.path());
    let (c2, j2) = run(d2.path());
    assert_eq!(c1, c2);
    assert_eq!(j1, j2);
    let m1 = cnls(&["nonres-measure", "--samples", "300", "--J", "16"]).stdout;
    let m2 = cnls(&["nonres", "measure", "--samples", "300", "--J", "16", "--threads", "2"]).stdout;
    assert_eq!(m1, m2);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# torus\nnu = 0.05\nrho2 = 1.5\nstable = true\n").unwrap();
    let out_path = dir.path().join("eff.json");
    let out = cnls(&["effective", "--config", cfg.to_str().unwrap(), "--nu", "0.2", "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out_path);
    assert_eq!(v["config"]["nu"], 0.2);
    assert_eq!(v["config"]["rho2"], 1.5);
    assert_eq!(v["result"]["verdict"], "stable");
    fs::write(&cfg, "warp = 9\n").unwrap();
    assert_eq!(cnls(&["effective", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn birkhoff_verify_exports_polynomials() {
    let dir = tempfile::tempdir().unwrap();
    let chi = dir.path().join("chi4.txt");
    let out = cnls(&["birkhoff", "verify", "--J", "2", "--export-chi4", chi.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["homological_residual"], serde_json::json!([]));
    let text = fs::read_to_string(chi).unwrap();
    assert_eq!(text.lines().filter(|l| !l.trim().is_empty()).count(), v["result"]["chi4_terms"].as_u64().unwrap() as usize);
}

#[test]
fn scan_emits_json_lines() {
    let out = cnls(&["nonres", "scan", "--J", "12", "--N", "3", "--rho1", "1.3", "--rho2", "1.8"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    let n = lines.filter(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()).count();
    assert_eq!(header["records"].as_u64().unwrap() as usize, n);
}

#[test]
fn state_files_feed_simulations() {
    let dir = tempfile::tempdir().unwrap();
    let fin = dir.path().join("final.json");
    let out = cnls(&["simulate", "--init", "beating", "--T", "0.5", "--final-state", fin.to_str().unwrap()]);
    assert!(out.status.success());
    let out = cnls(&["simulate", "--init", "file", "--state", fin.to_str().unwrap(), "--T", "0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
