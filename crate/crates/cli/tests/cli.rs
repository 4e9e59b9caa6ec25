use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn phasecone(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasecone"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .env_remove("PHASECONE_CONFIG")
        .env_remove("RUST_LOG")
        .output()
        .expect("spawn phasecone")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = phasecone(dir, args);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("{key} missing in {v}"))
}

#[test]
fn state_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["state", "vacuum"]);
    assert!(d.join("vacuum.json").exists() && d.join("vacuum.bin").exists());
    assert!((num(&json(&d.join("vacuum_cert.json")), "purity") - 1.0).abs() < 1e-12);

    ok(d, &["state", "thermal", "--nbar", "1"]);
    assert!((num(&json(&d.join("thermal_cert.json")), "purity") - 1.0 / 3.0).abs() < 1e-6);

    let out = phasecone(d, &["state", "fock", "--k", "200"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let out = phasecone(d, &["state", "coherent"]);
    assert_eq!(out.status.code(), Some(1), "missing --alpha must be an error");
}

#[test]
fn char_and_wigner_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["state", "vacuum"]);
    ok(d, &["char", d.join("vacuum.json").to_str().unwrap()]);
    let s = json(&d.join("vacuum_char_summary.json"));
    assert!((num(&s, "chi_origin_re") - 1.0).abs() < 1e-12);
    assert!((num(&s, "wigner_integral") - 1.0).abs() < 1e-6);
    assert!((num(&s, "chi_sup_norm") - num(&s, "chi_origin_re")).abs() < 1e-8);

    ok(d, &["state", "fock", "--k", "1"]);
    ok(d, &["wigner", d.join("fock1.json").to_str().unwrap()]);
    let s = json(&d.join("fock1_wigner_summary.json"));
    assert!((num(&s, "wigner_min") + 1.0 / std::f64::consts::PI).abs() < 1e-4);
    assert!((num(&s, "chi_sup_norm") - num(&s, "chi_origin_re")).abs() < 1e-8);
}

#[test]
fn positivity_verdicts_and_expectations() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["positivity", "quantum", "--fn", "gauss:c=0.15", "--expect", "fail"]);
    let r = json(&d.join("positivity_quantum.json"));
    assert_eq!(r["verdict"], "fail");
    assert!(num(&r, "min_eig") / num(&r, "max_eig") <= -1e-2);

    let out = phasecone(d, &["positivity", "quantum", "--fn", "gauss:c=0.15", "--expect", "pass"]);
    assert_eq!(out.status.code(), Some(2));
    // Without an expectation the verdict does not touch the exit code.
    ok(d, &["positivity", "quantum", "--fn", "gauss:c=0.15"]);

    ok(d, &["positivity", "classical", "--fn", "one", "--expect", "pass"]);
    ok(d, &["positivity", "quantum", "--fn", "gauss:c=0.3", "--expect", "pass"]);

    ok(d, &["state", "vacuum"]);
    ok(d, &["char", d.join("vacuum.json").to_str().unwrap()]);
    ok(d, &["positivity", "quantum", "--field", d.join("vacuum_char.bin").to_str().unwrap(), "--expect", "pass"]);

    let out = phasecone(d, &["positivity", "quantum", "--fn", "gauss:k=1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn evolve_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["state", "vacuum"]);
    let vac = d.join("vacuum.json");
    ok(d, &["evolve", vac.to_str().unwrap(), "--sigma2", "0.5", "--times", "0,0.5", "--mode", "both"]);
    let mut rows = csv::Reader::from_path(d.join("vacuum_evolve.csv")).unwrap();
    let rows: Vec<Vec<f64>> =
        rows.records().map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 2);
    assert!((rows[0][1] - 1.0).abs() < 1e-10 && (rows[0][2] - 1.0).abs() < 1e-10 && rows[0][3] <= 1e-10);
    assert!((rows[1][1] - 2.0 / 3.0).abs() < 1e-3 && (rows[1][2] - 2.0 / 3.0).abs() < 1e-3 && rows[1][3] <= 1e-3);

    ok(d, &["state", "coherent", "--alpha", "0.5,-0.5"]);
    let coh = d.join("coherent.json");
    ok(d, &["evolve", coh.to_str().unwrap(), "--sigma2", "0", "--drift", "1,-0.5", "--times", "0,0.5,1,2", "--mode", "twirl"]);
    let mut rows = csv::Reader::from_path(d.join("coherent_evolve.csv")).unwrap();
    for r in rows.records() {
        let r = r.unwrap();
        assert!(r[1].is_empty() && r[3].is_empty());
        assert!((r[2].parse::<f64>().unwrap() - 1.0).abs() < 1e-6);
    }

    let out = phasecone(d, &["evolve", vac.to_str().unwrap(), "--times", "0.5,0.25"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_suites() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["verify", "multiplier"]);
    let r = json(&d.join("verify_multiplier.json"));
    assert_eq!(r["passed"], true);
    assert!(num(&r["checks"][0], "measured") <= 1e-8);

    let out = phasecone(d, &["verify", "star", "--flip-multiplier"]);
    assert_eq!(out.status.code(), Some(2));
    let out = phasecone(d, &["verify", "multiplier", "--flip-multiplier"]);
    assert_eq!(out.status.code(), Some(2));

    ok(d, &["verify", "all"]);
    assert_eq!(json(&d.join("verify_all.json"))["passed"], true);
}

#[test]
fn outputs_are_reproducible() {
    let runs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for dir in &runs {
        let d = dir.path();
        ok(d, &["--seed", "7", "state", "cat", "--alpha", "1,0.5"]);
        ok(d, &["char", d.join("cat.json").to_str().unwrap()]);
        ok(d, &["--encoding", "csv", "wigner", d.join("cat.json").to_str().unwrap()]);
        ok(d, &["positivity", "quantum", "--state", d.join("cat.json").to_str().unwrap(), "--samples", "random-50"]);
        ok(d, &["evolve", d.join("cat.json").to_str().unwrap(), "--times", "0,0.25"]);
    }
    let names = [
        "cat.json",
        "cat.bin",
        "cat_cert.json",
        "cat_char.json",
        "cat_char.bin",
        "cat_wigner.json",
        "cat_wigner.csv",
        "cat_evolve.csv",
    ];
    for name in names {
        let a = std::fs::read(runs[0].path().join(name)).unwrap();
        let b = std::fs::read(runs[1].path().join(name)).unwrap();
        assert!(a == b, "{name} differs between runs");
    }
    // These embed the input path, which differs per directory by construction.
    for (name, key) in [("cat_char_summary.json", "state"), ("positivity_quantum.json", "input")] {
        let strip = |d: &Path| {
            let mut v = json(&d.join(name));
            assert!(v.as_object_mut().unwrap().remove(key).is_some());
            v
        };
        assert_eq!(strip(runs[0].path()), strip(runs[1].path()), "{name}");
    }
}

#[test]
fn manifest_tracks_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["state", "vacuum"]);
    ok(d, &["char", d.join("vacuum.json").to_str().unwrap()]);
    let m = json(&d.join("manifest.json"));
    let files: Vec<&str> = m["files"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap()).collect();
    for name in ["vacuum.json", "vacuum.bin", "vacuum_cert.json", "vacuum_char.json", "vacuum_char.bin", "vacuum_char_summary.json"] {
        assert!(files.contains(&name), "{name} missing from {files:?}");
    }
    let out = ok(d, &["check-manifest"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("manifest ok"));

    std::fs::write(d.join("vacuum_cert.json"), "{}").unwrap();
    let out = phasecone(d, &["check-manifest"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("vacuum_cert.json"));
}

#[test]
fn config_layers_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = d.join("cfg.json");
    std::fs::write(&cfg, r#"{"fock_dim": 16, "points": 64, "half_extent": 6.0}"#).unwrap();
    ok(d, &["--config", cfg.to_str().unwrap(), "state", "vacuum"]);
    let m = json(&d.join("manifest.json"));
    assert_eq!(m["config"]["fock_dim"], 16);
    assert_eq!(json(&d.join("vacuum_cert.json"))["dim"], 16);

    // Flags override the file.
    ok(d, &["--config", cfg.to_str().unwrap(), "--fock-dim", "20", "state", "vacuum"]);
    assert_eq!(json(&d.join("vacuum_cert.json"))["dim"], 20);

    // Environment layer sits under --config.
    let env_cfg = d.join("env.json");
    std::fs::write(&env_cfg, r#"{"fock_dim": 12}"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_phasecone"))
        .args(["--out-dir", d.to_str().unwrap(), "state", "vacuum"])
        .env("PHASECONE_CONFIG", &env_cfg)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(json(&d.join("vacuum_cert.json"))["dim"], 12);

    // Aliasing rule.
    let out = phasecone(d, &["--half-extent", "10", "--points", "32", "state", "vacuum"]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::write(&cfg, r#"{"fock_dimension": 16}"#).unwrap();
    let out = phasecone(d, &["--config", cfg.to_str().unwrap(), "state", "vacuum"]);
    assert_eq!(out.status.code(), Some(1));
}
