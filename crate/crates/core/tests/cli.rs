use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_waveleton"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn filters_prints_json() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["--out", "out", "filters", "--family", "daubechies", "--order", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["h"].as_array().unwrap().len(), 4);
    assert!(tmp.path().join("out/manifest.json").exists());
}

#[test]
fn usage_and_validation_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["filters", "--bogus"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(code(&run(tmp.path(), &["filters", "--family", "haar", "--order", "3"])), 1);
    assert_eq!(code(&run(tmp.path(), &["synth", "--matrix", "band:0,5,1", "--size", "64", "--level", "2"])), 1);
    assert_eq!(code(&run(tmp.path(), &["--help"])), 0);
}

#[test]
fn config_files_are_validated() {
    let tmp = tempfile::tempdir().unwrap();
    let good = tmp.path().join("good.json");
    std::fs::write(
        &good,
        r#"{"subcommand": "evolve", "params": {"grid": {"nq": 32, "np": 32, "q_min": -6, "q_max": 6, "p_min": -6, "p_max": 6},
            "steps": 5, "initial": {"kind": "gaussian", "q0": 0.5, "p0": 0, "sigma_q": 0.8, "sigma_p": 0.8},
            "lindblad": {"gamma": 0.1, "diffusion": 0.05}, "cadence": 1}}"#,
    )
    .unwrap();
    let o = run(tmp.path(), &["--out", "ev", "--config", "good.json", "evolve", "--steps", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&tmp.path().join("ev"));
    assert_eq!(m["config"]["params"]["steps"], 3);
    assert!(tmp.path().join("ev/snapshot_000003.wgrd").exists());
    let csv = std::fs::read_to_string(tmp.path().join("ev/diagnostics.csv")).unwrap();
    assert!(csv.starts_with("step,time,mass,purity,negativity"));
    assert_eq!(csv.lines().count(), 5);

    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"subcommand": "evolve", "params": {"stpes": 5}}"#).unwrap();
    assert_eq!(code(&run(tmp.path(), &["--config", "bad.json", "evolve"])), 1);
    let wrong = tmp.path().join("wrong.json");
    std::fs::write(&wrong, r#"{"subcommand": "synth"}"#).unwrap();
    assert_eq!(code(&run(tmp.path(), &["--config", "wrong.json", "evolve"])), 1);
    assert_eq!(code(&run(tmp.path(), &["--tol", "bogus=1", "evolve", "--steps", "1"])), 1);
}

#[test]
fn write_failures_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("taken"), b"x").unwrap();
    let o = run(tmp.path(), &["--out", "taken", "conn-coeffs", "--filter", "db3"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn manifest_checksums_match_and_reruns_are_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec!["--out", out, "synth", "--matrix", "random:3", "--filter", "symmlet8", "--level", "3", "--size", "64"]
    };
    for out in ["a", "b"] {
        assert_eq!(code(&run(tmp.path(), &args(out))), 0);
    }
    let (ma, mb) = (manifest(&tmp.path().join("a")), manifest(&tmp.path().join("b")));
    let outputs = ma["outputs"].as_array().unwrap();
    assert!(outputs.len() >= 3);
    for (x, y) in outputs.iter().zip(mb["outputs"].as_array().unwrap()) {
        assert_eq!(x["sha256"], y["sha256"]);
        let bytes = std::fs::read(tmp.path().join("a").join(x["path"].as_str().unwrap())).unwrap();
        assert_eq!(hex::encode(Sha256::digest(&bytes)), x["sha256"].as_str().unwrap());
        assert_eq!(bytes.len() as u64, x["bytes"].as_u64().unwrap());
    }
}

#[test]
fn every_subcommand_produces_its_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: Vec<(Vec<&str>, Vec<&str>)> = vec![
        (vec!["dwt", "--signal", "multikick", "--length", "128", "--packet-depth", "3"], vec!["coefficients.csv", "packet.json"]),
        (vec!["mra-demo", "--signal", "rw", "--length", "512"], vec!["levels.csv", "levels.json"]),
        (vec!["conn-coeffs", "--filter", "db4", "--order", "2"], vec!["connection.json"]),
        (vec!["nsform", "--op", "d2dx2", "--size", "128", "--levels", "3", "--dump"], vec!["nsform_stats.json", "nsform_blocks.csv"]),
        (vec!["wigner-transform", "--eigen", "0.6,0,0.8", "--nq", "64"], vec!["wigner.wgrd", "wigner.pgm", "wigner.json"]),
        (vec!["synth", "--matrix", "band:4,5,1", "--size", "64", "--level", "3"], vec!["pattern.wgrd", "pattern.pgm", "metrics.json"]),
    ];
    for (k, (args, files)) in cases.iter().enumerate() {
        let out = format!("o{k}");
        let mut full = vec!["--out", out.as_str()];
        full.extend(args);
        let o = run(tmp.path(), &full);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        for f in files {
            assert!(tmp.path().join(&out).join(f).exists(), "{args:?} missing {f}");
        }
    }
    let o = run(tmp.path(), &["--out", "m", "metrics", "--input", "o4/wigner.wgrd", "--hbar", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(tmp.path().join("m/metrics.json")).unwrap()).unwrap();
    assert!((v["quantumness"]["purity"].as_f64().unwrap() - 1.0).abs() < 1e-4);
    let o = run(tmp.path(), &["--out", "c", "metrics", "--input", "m/grid.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}
