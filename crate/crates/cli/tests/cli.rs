use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn fme(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fme"))
        .args(args)
        .env("FME_LOG_LEVEL", "error")
        .output()
        .expect("binary runs")
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        sub,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    fme(&args)
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

/// Writes a variant of a shipped config into `dir`.
fn variant(dir: &Path, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut cfg = json(&configs().join(name));
    edit(&mut cfg);
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_vec(&cfg).unwrap()).unwrap();
    path
}

#[test]
fn shipped_config_validates() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("v");
    let o = run(
        "validate",
        &configs().join("constant_improvement_vol.json"),
        &out,
        &[],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report = json(&out.join("validation.json"));
    assert_eq!(report["passed"], true);
    let statuses: Vec<(&str, &str)> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["name"].as_str().unwrap(), c["status"].as_str().unwrap()))
        .collect();
    for name in [
        "drift_oracle",
        "martingale",
        "identity",
        "lln",
        "compensator",
    ] {
        assert!(statuses.contains(&(name, "pass")), "{name}: {statuses:?}");
    }
    assert_eq!(json(&out.join("manifest.json"))["status"], "ok");
}

#[test]
fn zeroed_drift_fails_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = variant(tmp.path(), "constant_improvement_vol.json", |c| {
        c["simulation"]["drift"] = "zero".into();
        c["volatility"]["levy"]["scale"] = 3.0.into();
        c["queries"] = serde_json::json!([{ "t": 2.0, "T": 2.0, "x": -1.9 }]);
        c.as_object_mut().unwrap().remove("cohort");
    });
    let out = tmp.path().join("v");
    let o = run("validate", &cfg, &out, &["--paths", "2000"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(json(&out.join("validation.json"))["passed"], false);
    assert_eq!(
        json(&out.join("manifest.json"))["status"],
        "diagnostics_failed"
    );
}

#[test]
fn malformed_config_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, b"{ \"schema_version\": 1, \"grid\": ").unwrap();
    let out = tmp.path().join("out");
    for sub in ["simulate", "drift-table", "cohort", "price", "validate"] {
        let o = run(sub, &bad, &out, &[]);
        assert_eq!(o.status.code(), Some(2), "{sub}");
        assert!(!out.exists(), "{sub} left outputs behind");
    }
    let missing = run("simulate", &tmp.path().join("nope.json"), &out, &[]);
    assert_eq!(missing.status.code(), Some(2));

    let future = variant(tmp.path(), "constant_hazard.json", |c| {
        c["schema_version"] = 2.into();
    });
    assert_eq!(run("simulate", &future, &out, &[]).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn domain_error_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    // the maturity runs past the genuine rows left after shifting
    let cfg = variant(tmp.path(), "constant_hazard.json", |c| {
        c["queries"] = serde_json::json!([{ "t": 5.0, "T": 19.0, "x": 0.0 }]);
    });
    let out = tmp.path().join("out");
    let o = run("simulate", &cfg, &out, &[]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(!out.exists());
}

#[test]
fn missing_section_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = variant(tmp.path(), "constant_hazard.json", |c| {
        let obj = c.as_object_mut().unwrap();
        obj.remove("cohort");
        obj.remove("pricing");
    });
    let out = tmp.path().join("out");
    assert_eq!(run("cohort", &cfg, &out, &[]).status.code(), Some(2));
    assert_eq!(run("price", &cfg, &out, &[]).status.code(), Some(2));
    assert!(!out.exists());
}

fn strip_times(mut m: Value) -> Value {
    let obj = m.as_object_mut().unwrap();
    obj.remove("started_unix_ms");
    obj.remove("finished_unix_ms");
    m
}

#[test]
fn same_seed_same_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("constant_improvement_vol.json");
    let args = ["--paths", "200", "--seed", "11"];
    let (a, b, c) = (
        tmp.path().join("a"),
        tmp.path().join("b"),
        tmp.path().join("c"),
    );
    assert!(run("simulate", &cfg, &a, &args).status.success());
    assert!(run(
        "simulate",
        &cfg,
        &b,
        &[&args[..], &["--threads", "2"]].concat()
    )
    .status
    .success());
    assert!(
        run("simulate", &cfg, &c, &["--paths", "200", "--seed", "12"])
            .status
            .success()
    );

    let (ma, mut mb) = (
        json(&a.join("manifest.json")),
        json(&b.join("manifest.json")),
    );
    assert_eq!(mb["threads"], 2);
    mb["threads"] = Value::Null;
    assert_eq!(strip_times(ma.clone()), strip_times(mb));
    assert_eq!(ma["seed"], 11);
    assert_eq!(ma["n_paths"], 200);
    assert_eq!(
        std::fs::read(a.join("summary.csv")).unwrap(),
        std::fs::read(b.join("summary.csv")).unwrap()
    );
    let mc = json(&c.join("manifest.json"));
    assert_eq!(ma["config_sha256"], mc["config_sha256"]);
    assert_ne!(ma["outputs"], mc["outputs"]);
}

#[test]
fn simulate_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    let o = run(
        "simulate",
        &configs().join("constant_improvement_vol.json"),
        &out,
        &["--paths", "50", "--dump-paths", "2"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("t,T,x,mean_G,std_err,z"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "5.00000000000e-1");
    assert_eq!(summary.lines().count(), 21);

    let diag = json(&out.join("diagnostics.json"));
    assert_eq!(diag["n_paths"], 50);
    assert_eq!(diag["checkpoint_times"].as_array().unwrap().len(), 21);
    assert!(diag["identity"]["sup_by_checkpoint"].is_array());
    for stem in ["path_00000_mu_bar", "path_00001_j_bar"] {
        let csv = std::fs::read_to_string(out.join(format!("{stem}.csv"))).unwrap();
        assert!(csv.starts_with("s\\z,"));
        let meta = json(&out.join(format!("{stem}.json")));
        assert_eq!(meta["n_s"], 31);
        assert_eq!(meta["valid_rows"], 11);
    }
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 10);
}

#[test]
fn drift_table_round_trips_through_core() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("d");
    let o = run(
        "drift-table",
        &configs().join("constant_improvement_vol.json"),
        &out,
        &[],
    );
    assert!(o.status.success());
    let report = json(&out.join("drift_report.json"));
    assert_eq!(report["kind"], "improvement_vol");
    assert_eq!(report["oracle"]["example"], 1);
    let a: fme_core::Surface64 =
        fme_core::surface::io::load_surface(&out.join("drift_a.csv")).unwrap();
    assert_eq!((a.grid().n_s(), a.grid().n_z()), (31, 61));
    // constant unit loading: a(0, y) = 0 in the general form, −Ψ'(0) = −1 in
    // the Lévy form that drift-table reports
    assert!((a.get(0, 10) + 1.0).abs() < 1e-10);
}

#[test]
fn cohort_and_price_match_closed_forms() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("constant_hazard.json");
    let out = tmp.path().join("c");
    assert!(run("cohort", &cfg, &out, &[]).status.success());
    let deaths = std::fs::read_to_string(out.join("deaths.csv")).unwrap();
    assert_eq!(deaths.lines().next(), Some("index,tau,censored"));
    assert_eq!(deaths.lines().count(), 100_001);
    let report = json(&out.join("cohort_report.json"));
    for e in report["lln"].as_array().unwrap() {
        assert_eq!(e["pass"], true);
    }
    let g10 = report["lln"][2]["model_g"].as_f64().unwrap();
    assert!((g10 - (-0.5f64).exp()).abs() < 1e-12);
    assert!(report["doubled_hazard_max_score"].as_f64().unwrap() > 5.0);

    let out = tmp.path().join("p");
    assert!(run("price", &cfg, &out, &[]).status.success());
    let prices = std::fs::read_to_string(out.join("prices.csv")).unwrap();
    let rows: Vec<Vec<&str>> = prices
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    let num = |s: &str| s.parse::<f64>().unwrap();
    // bond to T = 10 at t = 0: exp(−(r + m)·10)
    assert!((num(rows[0][5]) - (-0.8f64).exp()).abs() < 1e-10);
    // annuity paying at 6, 7, 8
    let annuity: f64 = [6.0, 7.0, 8.0]
        .iter()
        .map(|k: &f64| (-0.08 * k).exp())
        .sum();
    assert!((num(rows[1][5]) - annuity).abs() < 1e-10);
    // at t = 5 the discounted price equals the time-0 price
    assert!((num(rows[2][7]) - num(rows[2][8])).abs() < 1e-10);
}
