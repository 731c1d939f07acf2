use std::fs;
use std::process::Command;

const LAGUERRE0: &str = r#"{"variant":"laguerre","p":0}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_jacobi-jost"))
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["classify", LAGUERRE0]).0, 0);
    assert_eq!(run(&["classify", r#"{"variant":"nope"}"#]).0, 2);
    assert_eq!(run(&["classify", r#"{"variant":"stieltjes_carlitz","k":1}"#]).0, 3);
    assert_eq!(run(&["jost", LAGUERRE0, "--z", "1"]).0, 3);
    assert_eq!(run(&["poly", LAGUERRE0, "--z", "not-a-number"]).0, 2);
    assert_eq!(run(&["poly", LAGUERRE0, "--tol", "2"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["poly", "/no/such/config.json"]).0, 2);
}

#[test]
fn laguerre_zero_at_origin() {
    // orthonormal Laguerre with p = 0 has |P_n(0)| = 1
    let (code, out) = run(&["poly", LAGUERRE0, "--z", "0", "--n-max", "40", "--format", "csv"]);
    assert_eq!(code, 0);
    let rows: Vec<&str> = out.lines().skip_while(|l| !l.starts_with("n,")).skip(1).collect();
    assert_eq!(rows.len(), 41);
    for (n, row) in rows.iter().enumerate() {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[0].parse::<usize>().unwrap(), n);
        let re: f64 = cols[1].parse().unwrap();
        assert!((re.abs() - 1.0).abs() < 1e-14, "n={n}: {re}");
    }
}

#[test]
fn manifest_replay_is_byte_identical() {
    let cfg = r#"{"variant":"powerlaw","sigma":2.0,"alpha":0.0,"beta":-3.0,"gamma":1.0}"#;
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let (code, _) = run(&["jost", cfg, "--z", "0.5+0.25i", "--n-max", "300", "--format", "csv", "--out", d.to_str().unwrap()]);
        assert_eq!(code, 0);
    }
    for f in ["jost.json", "jost.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let man: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(man["command"], "jost");
    assert_eq!(man["params"]["n_max"], 300);
    let outs = man["outputs"].as_array().unwrap();
    assert_eq!(outs.len(), 2);
    for o in outs {
        let body = fs::read(a.join(o["path"].as_str().unwrap())).unwrap();
        use sha2::Digest;
        assert_eq!(o["sha256"].as_str().unwrap(), hex::encode(sha2::Sha256::digest(&body)));
    }
}

#[test]
fn config_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.json");
    fs::write(&p, r#"{"variant":"hermite"}"#).unwrap();
    let (code, out) = run(&["classify", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("regular"), "{out}");
}
