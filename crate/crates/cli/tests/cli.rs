use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cutinit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cutinit")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = cutinit(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn small_config(dir: &Path) -> PathBuf {
    let cfg = serde_json::json!({
        "learning": {"n_max": 3, "pool_instances": 5, "n_initial": 3, "budget": 3, "n_test": 3, "seed": 11},
        "paths": {"runs_dir": dir.join("runs")},
    });
    let p = dir.join("config.json");
    fs::write(&p, cfg.to_string()).unwrap();
    p
}

/// pool-gen, label, train and evaluate; returns the run dir.
fn pipeline(cfg: &Path) -> PathBuf {
    let c = cfg.to_str().unwrap();
    let run = PathBuf::from(ok(&["--config", c, "pool-gen"]).trim());
    let r = run.to_str().unwrap();
    ok(&["label", "--run", r]);
    ok(&["train", "--run", r, "--strategy", "al", "--model", "gp"]);
    let policy = run.join("policy-gp-al.json");
    ok(&["evaluate", "--run", r, "--policy", policy.to_str().unwrap()]);
    run
}

#[test]
fn pipeline_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = pipeline(&small_config(a.path()));
    let rb = pipeline(&small_config(b.path()));
    for f in ["pool.csv", "labeled.csv", "report-gp-al.csv"] {
        assert_eq!(fs::read(ra.join(f)).unwrap(), fs::read(rb.join(f)).unwrap(), "{f}");
    }
    assert_eq!(fs::read_dir(ra.join("instances")).unwrap().count(), 5);
    let report = fs::read_to_string(ra.join("report-gp-al.csv")).unwrap();
    assert!(report.lines().any(|l| l.starts_with("nc,")));
    assert!(report.lines().any(|l| l.starts_with("learned,")));

    let other = ra.join("policy-dt-random.json");
    ok(&["train", "--run", ra.to_str().unwrap(), "--strategy", "random", "--model", "dt"]);
    assert!(other.exists());
}

#[test]
fn solve_one_instance() {
    let d = tempfile::tempdir().unwrap();
    let cfg = small_config(d.path());
    let c = cfg.to_str().unwrap();
    let run = PathBuf::from(ok(&["--config", c, "pool-gen"]).trim());
    let inst = fs::read_dir(run.join("instances")).unwrap().next().unwrap().unwrap().path();
    let lp = d.path().join("master.lp");
    let out = ok(&["--config", c, "solve", "--instance", inst.to_str().unwrap(), "--cuts", "3", "--dump-lp", lp.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["n_cuts"], 3);
    assert_eq!(v["converged"], true);
    let dump = fs::read_to_string(&lp).unwrap();
    assert!(dump.starts_with("max:") || dump.starts_with("min:"));
    assert!(dump.lines().any(|l| l.starts_with("binary ")));

    let base: serde_json::Value =
        serde_json::from_str(&ok(&["--config", c, "solve", "--instance", inst.to_str().unwrap()])).unwrap();
    let (x, y) = (v["objective"].as_f64().unwrap(), base["objective"].as_f64().unwrap());
    assert!((x - y).abs() <= 2e-3 * y.abs());
}

#[test]
fn config_errors_exit_with_one() {
    let d = tempfile::tempdir().unwrap();
    let bad = d.path().join("bad.json");
    fs::write(&bad, r#"{"learning": {"n_max": 1}}"#).unwrap();
    assert_eq!(cutinit(&["--config", bad.to_str().unwrap(), "pool-gen"]).status.code(), Some(1));
    let missing = d.path().join("missing.json");
    assert_eq!(cutinit(&["--config", missing.to_str().unwrap(), "pool-gen"]).status.code(), Some(1));
    assert_eq!(cutinit(&["label", "--run", d.path().to_str().unwrap()]).status.code(), Some(1));
}
