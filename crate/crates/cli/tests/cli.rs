use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn seacorr(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seacorr"))
        .args(args)
        .env("SEACORR_OUT_DIR", out)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = seacorr(out, args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

#[test]
fn waves_simulate_extract_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ok(out, &["waves", "--spectrum", "bretschneider", "--hs", "1", "--peak", "1", "--duration", "200", "--seed", "3"]);
    let waves = out.join("waves.json");
    assert!(out.join("waves.csv").exists());
    let w = waves.to_str().unwrap();

    ok(out, &["simulate", "--waves", w, "--duration", "200"]);
    let reference = out.join("reference.csv");
    let r = reference.to_str().unwrap();
    let header = fs::read_to_string(&reference).unwrap();
    assert!(header.starts_with("t,eta,z,z_dot,z_ddot,delta_z"));
    assert_eq!(header.lines().count(), 2002);
    let sidecar: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("reference.json")).unwrap()).unwrap();
    assert_eq!(sidecar["system"], "duffing");
    assert_eq!(sidecar["dt"], 0.1);
    assert_eq!(sidecar["physics"]["c3"], 0.01);
    assert!(sidecar["realization"].is_object());

    ok(out, &["extract-delta", "--model", "C", "--trajectory", r, "--waves", w]);
    let delta = fs::read_to_string(out.join("delta.csv")).unwrap();
    assert!(delta.starts_with("t,delta_z\n0,"));

    let table = ok(out, &["metrics", "--prediction", r, "--reference", r]);
    let rows: Vec<&str> = table.lines().filter(|l| l.starts_with("z,")).collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(&f[2..5], ["0", "0", "0"], "{row}");
    }
}

#[test]
fn same_seed_same_waves() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["waves", "--spectrum", "jonswap", "--hs", "4", "--peak", "8.5", "--duration", "100", "--seed", "9"];
    ok(a.path(), &args);
    ok(b.path(), &args);
    assert_eq!(fs::read(a.path().join("waves.json")).unwrap(), fs::read(b.path().join("waves.json")).unwrap());
}

#[test]
fn train_and_predict_with_a_corrector() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let cfg = out.join("cfg.json");
    fs::write(&cfg, r#"{"train": {"epochs": 5, "batch_size": 32, "learning_rate": 0.001, "seed": 0, "validation_fraction": 0.1, "patience": 100}}"#).unwrap();
    let c = cfg.to_str().unwrap();
    ok(out, &["waves", "--spectrum", "bretschneider", "--hs", "1", "--peak", "1", "--duration", "300", "--seed", "1"]);
    let w = out.join("waves.json");
    ok(out, &["simulate", "--waves", w.to_str().unwrap(), "--duration", "300"]);
    let r = out.join("reference.csv");
    ok(out, &["train", "--config", c, "--trajectory", r.to_str().unwrap(), "--waves", w.to_str().unwrap(), "--k", "3"]);
    let net = out.join("models/z.json");
    assert!(net.exists());
    let spec = format!("z={}", net.display());
    ok(out, &["predict", "--waves", w.to_str().unwrap(), "--duration", "300", "--net", &spec]);
    let pred = fs::read_to_string(out.join("prediction.csv")).unwrap();
    assert_eq!(pred.lines().count(), 3002);
}

#[test]
fn error_categories_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();

    let missing = seacorr(out, &["simulate", "--waves", "does-not-exist.json"]);
    assert_eq!(missing.status.code(), Some(6));

    let bad = out.join("bad.json");
    fs::write(&bad, "{not json").unwrap();
    let o = seacorr(out, &["study", "duffing-hs-sweep", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    // train and test seeds overlap
    let leak = out.join("leak.json");
    fs::write(&leak, r#"{"test_seeds": [2]}"#).unwrap();
    let o = seacorr(out, &["study", "duffing-hs-sweep", "--config", leak.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("training and testing"));

    let o = seacorr(out, &["study", "no-such-study"]);
    assert_eq!(o.status.code(), Some(2));

    let o = seacorr(out, &["waves", "--spectrum", "bretschneider", "--hs", "-1", "--peak", "1"]);
    assert_eq!(o.status.code(), Some(2));

    let traj = out.join("short.csv");
    fs::write(&traj, "t,eta\n0,0\n").unwrap();
    let o = seacorr(out, &["metrics", "--prediction", traj.to_str().unwrap(), "--reference", traj.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn out_dir_flag_overrides_environment() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    ok(
        env_dir.path(),
        &["waves", "--spectrum", "bretschneider", "--hs", "1", "--peak", "1", "--duration", "50", "--out-dir", flag_dir.path().to_str().unwrap()],
    );
    assert!(flag_dir.path().join("waves.json").exists());
    assert!(!env_dir.path().join("waves.json").exists());
}
