//! Full-size acceptance checks, one test per criterion. Each prints a PASS/FAIL line
//! straight to stderr so it shows up even when the harness captures output.

use std::io::Write;
use std::process::Command;
use std::sync::OnceLock;

use geocast::harness::{
    exp_fig1ab, exp_fig1c, exp_fig1de, exp_verify, Assertion, ExperimentId, ExperimentOutput, Insertion, RunConfig,
};
use geocast::KnowledgeMode;

fn report(criterion: u32, title: &str, passed: bool, summary: &str) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {criterion} [{verdict}] {title}: {summary}");
}

fn summarize(assertions: &[&Assertion]) -> String {
    assertions
        .iter()
        .map(|a| {
            let mut s = format!("{} {}/{} ok", a.name, a.checked - a.failures, a.checked);
            if let Some(d) = a.detail.first() {
                s.push_str(&format!(" (first failure: {d})"));
            }
            s
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn require<'a>(out: &'a ExperimentOutput, name: &str) -> &'a Assertion {
    out.assertion(name).unwrap_or_else(|| panic!("assertion {name} was not evaluated"))
}

const NS_OPTIMALITY: [usize; 3] = [100, 300, 1000];

/// Full-knowledge empty-rectangle multicast runs shared by criteria 1 and 2.
fn optimality_runs() -> &'static Vec<(usize, ExperimentOutput)> {
    static RUNS: OnceLock<Vec<(usize, ExperimentOutput)>> = OnceLock::new();
    RUNS.get_or_init(|| {
        NS_OPTIMALITY
            .iter()
            .map(|&n| {
                let cfg = RunConfig {
                    n,
                    seed: 1,
                    seeds: 10,
                    dims: Some(vec![2, 3, 4, 5]),
                    ..RunConfig::new(ExperimentId::Fig1ab)
                };
                (n, exp_fig1ab(&cfg).expect("fig1ab run"))
            })
            .collect()
    })
}

#[test]
fn criterion_1_message_optimality() {
    let runs = optimality_runs();
    let expected_trees: usize = NS_OPTIMALITY.iter().map(|n| n * 4 * 10).sum();
    let checks: Vec<&Assertion> = runs.iter().map(|(_, o)| require(o, "message_optimality")).collect();
    let trees: usize = checks.iter().map(|a| a.checked).sum();
    let passed = checks.iter().all(|a| a.passed) && trees == expected_trees;
    report(
        1,
        "every tree sends N-1 messages, no duplicates, none unreached",
        passed,
        &format!("{trees} trees; {}", summarize(&checks)),
    );
    assert!(passed);
}

#[test]
fn criterion_2_children_bound() {
    let runs = optimality_runs();
    let checks: Vec<&Assertion> = runs.iter().map(|(_, o)| require(o, "children_bound")).collect();
    let worst = runs
        .iter()
        .flat_map(|(_, o)| {
            o.rows.iter().filter(|r| r.metric_name == "children_max").map(|r| (r.d, r.value.to_string()))
        })
        .fold(std::collections::BTreeMap::new(), |mut m, (d, v)| {
            let v: usize = v.parse().unwrap();
            let e = m.entry(d).or_insert(0);
            *e = v.max(*e);
            m
        });
    let passed = checks.iter().all(|a| a.passed && a.checked > 0);
    report(2, "children per tree node <= 2^D", passed, &format!("max children by D {worst:?}; {}", summarize(&checks)));
    assert!(passed);
}

#[test]
fn criterion_3_stability_tree() {
    let cfg = RunConfig {
        n: 1000,
        seed: 3,
        seeds: 5,
        dims: Some(vec![2, 5, 10]),
        ks: Some(vec![1, 5, 20, 50]),
        ..RunConfig::new(ExperimentId::Fig1de)
    };
    let out = exp_fig1de(&cfg).expect("fig1de run");
    let checks = [require(&out, "single_tree"), require(&out, "lifetime_monotone"), require(&out, "leaf_departures")];
    let passed = checks.iter().all(|a| a.passed && a.checked == 3 * 4 * 5);
    report(3, "single tree, lifetime-monotone, leaf-only departures", passed, &summarize(&checks));
    assert!(passed);
}

#[test]
fn criterion_4_log_degree_trend() {
    let cfg = RunConfig { seed: 4, seeds: 5, ..RunConfig::new(ExperimentId::Fig1c) };
    let out = exp_fig1c(&cfg).expect("fig1c run");
    let checks = [
        require(&out, "degree_over_log2n_within_factor_2"),
        require(&out, "degree_sublinear"),
        require(&out, "degree_monotone"),
    ];
    let passed = checks.iter().all(|a| a.passed && a.checked > 0);
    report(4, "avg degree tracks log2(N) within x2, monotone and sublinear", passed, &summarize(&checks));
    assert!(passed);
}

#[test]
fn criterion_5_oracle_equivalence() {
    let cfg = RunConfig { n: 300, seed: 5, seeds: 10, dims: Some(vec![2, 3]), ..RunConfig::new(ExperimentId::Verify) };
    let out = exp_verify(&cfg).expect("verify run");
    let checks = [
        require(&out, "knowledge_round_matches_bfs"),
        require(&out, "equilibrium_matches_brute_force"),
        require(&out, "step_partition"),
        require(&out, "delivery"),
    ];
    let passed = checks.iter().all(|a| a.passed && a.checked > 0) && checks[3].checked == 300 * 2 * 10;
    report(5, "knowledge rounds, equilibrium, step partition and delivery match oracles", passed, &summarize(&checks));
    assert!(passed);
}

fn run_cli(args: &[&str], dir: &std::path::Path, tag: &str) -> (Vec<u8>, Vec<u8>) {
    let csv = dir.join(format!("{tag}.csv"));
    let json = dir.join(format!("{tag}.json"));
    let status = Command::new(env!("CARGO_BIN_EXE_geocast"))
        .args(args)
        .arg("--out")
        .arg(&csv)
        .arg("--report")
        .arg(&json)
        .status()
        .expect("spawn geocast");
    assert_eq!(status.code(), Some(0), "{args:?}");
    (std::fs::read(csv).unwrap(), std::fs::read(json).unwrap())
}

#[test]
fn criterion_6_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let invocations: [&[&str]; 6] = [
        &["experiment", "--id", "fig1ab", "--preset", "reduced", "--seed", "6", "--roots", "40"],
        &["experiment", "--id", "fig1c", "--preset", "reduced", "--seed", "6"],
        &["experiment", "--id", "fig1de", "--preset", "reduced", "--seed", "6", "--ks", "1,5"],
        &["verify", "--preset", "reduced", "--seed", "6", "--n", "60"],
        &["stability", "--n", "200", "--d", "3", "--k", "2", "--seed", "6"],
        &["multicast", "--n", "120", "--d", "3", "--knowledge", "gossip", "--seed", "6"],
    ];
    let mut identical = 0;
    let mut differing = Vec::new();
    for (i, args) in invocations.iter().enumerate() {
        let runs: Vec<_> = ["1", "3", "1"]
            .iter()
            .enumerate()
            .map(|(j, jobs)| {
                let mut a = args.to_vec();
                a.extend(["--jobs", jobs]);
                run_cli(&a, dir.path(), &format!("r{i}-{j}"))
            })
            .collect();
        if runs.windows(2).all(|w| w[0] == w[1]) && !runs[0].0.is_empty() {
            identical += 1;
        } else {
            differing.push(args.join(" "));
        }
    }
    let passed = differing.is_empty();
    report(
        6,
        "byte-identical CSV and JSON across repeated runs and --jobs 1/3",
        passed,
        &format!("{identical}/{} invocations identical; differing: {differing:?}", invocations.len()),
    );
    assert!(passed);
}

#[test]
fn criterion_7_gossip_accounting() {
    let batch = RunConfig {
        n: 300,
        seed: 7,
        seeds: 3,
        knowledge: KnowledgeMode::Gossip,
        dims: Some(vec![2, 3, 4, 5]),
        ..RunConfig::new(ExperimentId::Fig1ab)
    };
    let incremental =
        RunConfig { n: 100, seeds: 2, insertion: Insertion::Incremental, dims: Some(vec![2, 3]), ..batch.clone() };
    let mut checks = Vec::new();
    let mut unreached_rows = 0;
    let mut unreached_total = 0usize;
    let mut cells = 0;
    let outs: Vec<ExperimentOutput> = [batch, incremental].iter().map(|c| exp_fig1ab(c).expect("gossip run")).collect();
    for (out, cfg_cells) in outs.iter().zip([4 * 3, 2 * 2]) {
        checks.push(require(out, "message_accounting"));
        cells += cfg_cells;
        for r in out.rows.iter().filter(|r| r.metric_name == "unreached") {
            unreached_rows += 1;
            unreached_total += r.value.to_string().parse::<usize>().unwrap();
        }
    }
    let passed = checks.iter().all(|a| a.passed && a.checked > 0) && unreached_rows == cells;
    report(
        7,
        "gossip runs satisfy messages_sent = N - 1 - |unreached|",
        passed,
        &format!("{unreached_rows} unreached rows (max-per-cell sum {unreached_total}); {}", summarize(&checks)),
    );
    assert!(passed);
}
