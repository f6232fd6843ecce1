use std::process::{Command, Output};

fn geocast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geocast")).args(args).output().expect("spawn geocast")
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().next().expect("stderr line")).expect("first stderr line is JSON")
}

#[test]
fn experiment_writes_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let out = geocast(&[
        "experiment",
        "--id",
        "fig1ab",
        "--seed",
        "7",
        "--n",
        "1000",
        "--dims",
        "2",
        "--seeds",
        "1",
        "--roots",
        "25",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("experiment,run_id,seed,N,D,K,strategy,metric_name,value\n"));
    assert!(text.contains(",messages_sent,999\n"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["experiment"], "fig1ab");
    assert_eq!(report["passed"], true);
    assert_eq!(report["config"]["seed"], 7);
    assert!(report.get("wall_time_ms").is_none());
}

#[test]
fn wall_time_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("o.csv");
    let out = geocast(&["overlay", "--n", "30", "--wall-time", "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o.json")).unwrap()).unwrap();
    assert!(report["wall_time_ms"].is_u64());
}

#[test]
fn verify_exits_zero() {
    let out = geocast(&["verify", "--n", "200", "--d", "2", "--seeds", "1", "--roots", "20"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains(",oracle_mismatches,0\n"));
}

#[test]
fn single_peer_multicast() {
    let out = geocast(&["multicast", "--n", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains(",messages_sent,0\n"));
}

#[test]
fn usage_errors_exit_2_with_json() {
    for args in [
        &["bogus"][..],
        &["overlay", "--nope", "1"],
        &["overlay", "--k", "0"],
        &["experiment"],
        &["verify", "--n", "501"],
    ] {
        let out = geocast(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(stderr_json(&out)["error"].is_string(), "{args:?}");
    }
}

#[test]
fn io_errors_exit_1() {
    let out = geocast(&["overlay", "--n", "5", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "io");
}

#[test]
fn non_convergence_is_reported() {
    let out = geocast(&["overlay", "--n", "40", "--max-rounds", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "non_convergence");
}

#[test]
fn help_documents_every_flag() {
    let out = geocast(&["experiment", "--help"]);
    assert_eq!(out.status.code(), Some(0));
    let help = String::from_utf8_lossy(&out.stdout);
    for flag in [
        "--id",
        "--config",
        "--preset",
        "--seed",
        "--n",
        "--d",
        "--vmax",
        "--br",
        "--freshness-rounds",
        "--k",
        "--strategy",
        "--knowledge",
        "--insertion",
        "--distance",
        "--time-coord-index",
        "--max-rounds",
        "--update-order",
        "--seeds",
        "--dims",
        "--ns",
        "--ks",
        "--roots",
        "--jobs",
        "--out",
        "--report",
        "--wall-time",
    ] {
        assert!(help.contains(flag), "missing {flag}");
    }
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"experiment": "stability", "N": 80, "d": 3, "k": 2, "seed": 9}"#).unwrap();
    let a = geocast(&["stability", "--config", cfg.to_str().unwrap()]);
    let b = geocast(&["stability", "--n", "80", "--d", "3", "--k", "2", "--seed", "9"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stdout).contains(",is_single_tree,1\n"));
}
