//! End-to-end tests of the `qgs` binary: exit codes, reproducibility of
//! emitted bytes, and the manifest contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qgs(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgs"))
        .args(args)
        .current_dir(dir)
        .env_remove("QGS_WORKERS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

const SMALL_RUN: &str = r#"{
  "model": "exp",
  "rule": {
    "beta": 1.5,
    "k_max": 200,
    "checkpoints": [10, 100, 200],
    "seed": 7,
    "n_paths": 8
  }
}"#;

#[test]
fn simulate_is_byte_identical_across_reruns_and_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", SMALL_RUN);

    let mut outputs = Vec::new();
    for (tag, workers) in [
        ("a", None),
        ("b", None),
        ("w1", Some("1")),
        ("w8", Some("8")),
    ] {
        let out = dir.path().join(tag);
        let out_s = out.to_str().unwrap().to_owned();
        let mut args = vec!["simulate", "--config", &cfg, "--out", &out_s];
        if let Some(w) = workers {
            args.extend(["--workers", w]);
        }
        let res = qgs(&args, dir.path());
        assert!(
            res.status.success(),
            "{}",
            String::from_utf8_lossy(&res.stderr)
        );
        outputs.push(fs::read(out.with_extension("csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "rerun changed bytes");
    assert_eq!(outputs[0], outputs[2], "one worker changed bytes");
    assert_eq!(outputs[0], outputs[3], "eight workers changed bytes");

    // The env fallback must behave exactly like the flag.
    let out = dir.path().join("env");
    let out_s = out.to_str().unwrap().to_owned();
    let res = Command::new(env!("CARGO_BIN_EXE_qgs"))
        .args(["simulate", "--config", &cfg, "--out", &out_s])
        .env("QGS_WORKERS", "3")
        .output()
        .unwrap();
    assert!(res.status.success());
    assert_eq!(outputs[0], fs::read(out.with_extension("csv")).unwrap());
}

#[test]
fn manifest_records_the_exact_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", SMALL_RUN);
    let out = dir.path().join("run");
    let out_s = out.to_str().unwrap().to_owned();
    let res = qgs(&["simulate", "--config", &cfg, "--out", &out_s], dir.path());
    assert!(res.status.success());

    let csv = fs::read(out.with_extension("csv")).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.with_extension("manifest.json")).unwrap())
            .unwrap();

    // Refreshing the hash: sha256 of the CSV bytes matches the manifest.
    let digest = {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(&csv);
        format!("{:x}", h.finalize())
    };
    assert_eq!(manifest["csv_sha256"].as_str().unwrap(), digest);
    assert_eq!(manifest["seed"].as_u64().unwrap(), 7);
    assert_eq!(manifest["n_rows"].as_u64().unwrap(), 24); // 8 paths x 3 checkpoints

    // The embedded config is sufficient to rerun: do so and compare bytes.
    let cfg2 = write_config(
        dir.path(),
        "rerun.json",
        &serde_json::to_string(&manifest["config"]).unwrap(),
    );
    let out2 = dir.path().join("rerun");
    let out2_s = out2.to_str().unwrap().to_owned();
    let res = qgs(
        &["simulate", "--config", &cfg2, "--out", &out2_s],
        dir.path(),
    );
    assert!(res.status.success());
    assert_eq!(csv, fs::read(out2.with_extension("csv")).unwrap());
}

#[test]
fn seed_override_changes_the_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", SMALL_RUN);
    let base = dir.path().join("base");
    let reseeded = dir.path().join("reseeded");
    let (base_s, reseeded_s) = (
        base.to_str().unwrap().to_owned(),
        reseeded.to_str().unwrap().to_owned(),
    );
    assert!(qgs(
        &["simulate", "--config", &cfg, "--out", &base_s],
        dir.path()
    )
    .status
    .success());
    let res = qgs(
        &[
            "simulate",
            "--config",
            &cfg,
            "--seed",
            "8",
            "--out",
            &reseeded_s,
        ],
        dir.path(),
    );
    assert!(res.status.success());
    assert_ne!(
        fs::read(base.with_extension("csv")).unwrap(),
        fs::read(reseeded.with_extension("csv")).unwrap()
    );
    let manifest: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(reseeded.with_extension("manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["seed"].as_u64().unwrap(), 8);
}

#[test]
fn invalid_configs_exit_one_with_a_message() {
    let dir = tempfile::tempdir().unwrap();

    // Power term exponent must stay below the leading exponent.
    let bad_gamma = write_config(
        dir.path(),
        "bad_gamma.json",
        r#"{
          "model": {"c": 1.0, "alpha": 2.0, "terms": [{"kind": "power", "kappa": 1.0, "gamma": 3.0}], "x0": 0.0},
          "rule": {"beta": 1.0, "k_max": 10, "checkpoints": [10], "seed": 1, "n_paths": 2}
        }"#,
    );
    let res = qgs(&["simulate", "--config", &bad_gamma], dir.path());
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(
        err.contains("gamma") || err.contains("constraint"),
        "stderr: {err}"
    );

    let bad_preset = write_config(
        dir.path(),
        "bad_preset.json",
        r#"{"model": "cauchy", "rule": {"beta": 1.0, "k_max": 10, "checkpoints": [10], "seed": 1, "n_paths": 2}}"#,
    );
    let res = qgs(&["simulate", "--config", &bad_preset], dir.path());
    assert_eq!(res.status.code(), Some(1));

    let res = qgs(&["simulate", "--config", "does-not-exist.json"], dir.path());
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn verify_runs_suites_and_reports_unknown_names() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let report_s = report.to_str().unwrap().to_owned();
    let res = qgs(
        &["verify", "weights-normalization", "--out", &report_s],
        dir.path(),
    );
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("[PASS]"), "stdout: {stdout}");
    assert!(stdout.contains("suite weights-normalization: PASS"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["suite"].as_str().unwrap(), "weights-normalization");
    assert!(json["passed"].as_bool().unwrap());

    let res = qgs(&["verify", "no-such-suite"], dir.path());
    assert_eq!(res.status.code(), Some(1));

    // The index of suite names is itself part of the interface.
    let res = qgs(&["verify", "list"], dir.path());
    assert_eq!(res.status.code(), Some(0));
    let listing = String::from_utf8_lossy(&res.stdout);
    for name in [
        "gumbel-beta1",
        "oracle-equivalence",
        "quadrature-closed-form",
    ] {
        assert!(listing.contains(name), "missing {name} in: {listing}");
    }
}

#[test]
fn regime_grid_matches_the_classification_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("regimes.csv");
    let out_s = out.to_str().unwrap().to_owned();
    let res = qgs(
        &[
            "regime",
            "--alpha",
            "1",
            "--beta",
            "1,1.2,1.5,2,3",
            "--out",
            &out_s,
        ],
        dir.path(),
    );
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "alpha,beta,mean_regime,t_star_regime,beta_lo,beta_hi"
    );
    let t_star: Vec<&str> = lines.map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(
        t_star,
        [
            "almost_sure",
            "almost_sure",
            "in_probability",
            "mixture",
            "exp_limit"
        ]
    );

    // beta = 1 must classify as almost-sure for every alpha.
    let res = qgs(
        &["regime", "--alpha", "0.5,1,2,4", "--beta", "1"],
        dir.path(),
    );
    assert_eq!(res.status.code(), Some(0));
    for line in String::from_utf8_lossy(&res.stdout).lines().skip(1) {
        assert_eq!(line.split(',').nth(3).unwrap(), "almost_sure");
        assert_eq!(line.split(',').nth(2).unwrap(), "additive_as");
    }

    // Invalid grids are usage errors.
    let res = qgs(&["regime", "--alpha", "-1", "--beta", "1"], dir.path());
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn dump_grid_tabulates_monotone_g() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.json", SMALL_RUN);
    let res = qgs(&["dump-grid", "--config", &cfg, "--g-max", "5"], dir.path());
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let text = String::from_utf8_lossy(&res.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "x,overshoot_mean,g");
    let mut prev_g = f64::NEG_INFINITY;
    let mut rows = 0;
    for line in lines {
        let g: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(g >= prev_g, "G not monotone at row {rows}");
        prev_g = g;
        rows += 1;
    }
    assert!(rows > 10, "grid unexpectedly small: {rows} rows");
    assert!(prev_g >= 5.0, "grid stops below requested g_max");
}
