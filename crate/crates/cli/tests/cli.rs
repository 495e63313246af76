use std::path::Path;
use std::process::{Command, Output};

fn ts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ts-sandbox")).args(args).env("TS_SANDBOX_LOG", "warn").output().unwrap()
}

fn ok(args: &[&str]) {
    let out = ts(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn files(dir: &Path) -> serde_json::Value {
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    m["files"].clone()
}

fn p(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

#[test]
fn same_seed_runs_write_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    let base = ["simulate", "--ues", "6", "--duration-ms", "2000", "--policy", "rrm"];
    ok(&[&base[..], &["--seed", "4", "--out", p(&a)]].concat());
    ok(&[&base[..], &["--seed", "4", "--out", p(&b)]].concat());
    ok(&[&base[..], &["--seed", "5", "--out", p(&c)]].concat());
    assert_eq!(files(&a), files(&b));
    assert_ne!(files(&a)["events.csv"], files(&c)["events.csv"]);

    let replay = tmp.path().join("replay");
    let m = a.join("manifest.json");
    ok(&["simulate", "--from-manifest", p(&m), "--out", p(&replay)]);
    assert_eq!(files(&a), files(&replay));
}

#[test]
fn evaluate_reproduces_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let (run, ev) = (tmp.path().join("run"), tmp.path().join("ev"));
    ok(&["simulate", "--ues", "5", "--duration-ms", "1500", "--seed", "2", "--out", p(&run)]);
    ok(&["evaluate", "--run", p(&run), "--out", p(&ev)]);
    for f in ["metrics.csv", "per_ue.csv", "sinr_cdf.csv"] {
        assert_eq!(std::fs::read(run.join(f)).unwrap(), std::fs::read(ev.join(f)).unwrap(), "{f}");
    }
    let per_ue = std::fs::read_to_string(run.join("per_ue.csv")).unwrap();
    assert_eq!(per_ue.lines().count(), 6);
}

#[test]
fn missing_model_fails_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let model = tmp.path().join("nope.tsq");
    let out = ts(&["simulate", "--policy", &format!("rl:{}", p(&model)), "--out", p(&out_dir)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot load model"));
    assert!(!out_dir.exists());
}

#[test]
fn bad_arguments_are_rejected() {
    assert!(!ts(&["simulate", "--policy", "greedy"]).status.success());
    assert!(!ts(&["simulate", "--explore", "1.5", "--out", "/nonexistent/x"]).status.success());
}

#[test]
fn collect_train_compare_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let (ds, model, cfg) = (t.join("ds"), t.join("model"), t.join("train.json"));
    ok(&[
        "collect", "--ues", "4", "--duration-ms", "2000", "--seeds", "1,2", "--policies", "son1,rrm",
        "--explore", "0.2", "--out", p(&ds),
    ]);
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(ds.join("dataset.json")).unwrap()).unwrap();
    // Four runs, four UEs, 20 records each, one row lost per UE.
    assert_eq!(meta["rows"], 4 * 4 * 19);

    std::fs::write(&cfg, r#"{"min_replay_history": 100, "batch_size": 8}"#).unwrap();
    ok(&["train", "--dataset", p(&ds), "--config", p(&cfg), "--steps", "200", "--out", p(&model)]);
    let loss = std::fs::read_to_string(model.join("loss.csv")).unwrap();
    assert_eq!(loss.lines().count(), 3);

    let (r1, r2) = (t.join("r1"), t.join("r2"));
    let m = model.join("model.tsq");
    let rl = format!("rl:{}", p(&m));
    ok(&["simulate", "--ues", "4", "--duration-ms", "1000", "--policy", &rl, "--out", p(&r1)]);
    ok(&["simulate", "--ues", "4", "--duration-ms", "1000", "--policy", "son2", "--out", p(&r2)]);
    let cmp = t.join("cmp");
    ok(&["compare", p(&r1), p(&r2), "--out", p(&cmp)]);
    let csv = std::fs::read_to_string(cmp.join("compare.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().any(|l| l.starts_with("son2,1,")));
}
