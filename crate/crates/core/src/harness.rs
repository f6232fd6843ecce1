//! Experiment sweeps, seeded cell derivation, metric rows, and CSV/JSON output.
//!
//! Every experiment is a pure function of its [`RunConfig`]. Cells of a sweep
//! run in parallel on the ambient rayon pool; rows are sorted before they are
//! written, so output bytes do not depend on scheduling or thread count.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, OverlayError, Result};
use crate::geometry::{HyperplaneSet, SpaceSpec};
use crate::multicast::{build_tree, tree_metrics, verify_step_partition, MulticastTree};
use crate::oracle::{self, ORACLE_MAX_N};
use crate::overlay::{
    converge, generate_peers, knowledge_round, neighbor_jaccard, topology_metrics, Distance, GossipConfig,
    KnowledgeMode, Peer, PeerId, SelectionStrategy, Topology, UpdateOrder,
};
use crate::stability::{build_stability_tree, embed_lifetimes, simulate_departures, verify_monotone, StabilityConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    Fig1ab,
    Fig1c,
    Fig1de,
    Overlay,
    Multicast,
    Stability,
    Verify,
}

impl ExperimentId {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Fig1ab => "fig1ab",
            ExperimentId::Fig1c => "fig1c",
            ExperimentId::Fig1de => "fig1de",
            ExperimentId::Overlay => "overlay",
            ExperimentId::Multicast => "multicast",
            ExperimentId::Stability => "stability",
            ExperimentId::Verify => "verify",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyId {
    #[default]
    EmptyRect,
    OrthoHp,
    GenHp,
    KClosest,
}

impl StrategyId {
    pub fn name(self) -> &'static str {
        match self {
            StrategyId::EmptyRect => "empty-rect",
            StrategyId::OrthoHp => "ortho-hp",
            StrategyId::GenHp => "gen-hp",
            StrategyId::KClosest => "k-closest",
        }
    }

    /// `gen-hp` uses every plane with coefficients in {-1, 0, +1}.
    pub fn build(self, k: usize, distance: Distance, dims: usize) -> SelectionStrategy {
        match self {
            StrategyId::EmptyRect => SelectionStrategy::EmptyRect,
            StrategyId::OrthoHp => SelectionStrategy::OrthogonalHyperplanes { k, distance },
            StrategyId::GenHp => {
                SelectionStrategy::GeneralHyperplanes { planes: HyperplaneSet::all_ternary(dims), k, distance }
            }
            StrategyId::KClosest => SelectionStrategy::KClosest { k, distance },
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Insertion {
    /// Peers join one at a time and the overlay converges after each join.
    Incremental,
    /// All peers join, then the overlay converges once.
    #[default]
    Batch,
}

impl Insertion {
    fn name(self) -> &'static str {
        match self {
            Insertion::Incremental => "incremental",
            Insertion::Batch => "batch",
        }
    }
}

fn knowledge_name(mode: KnowledgeMode) -> &'static str {
    match mode {
        KnowledgeMode::Gossip => "gossip",
        KnowledgeMode::Full => "full",
    }
}

/// Fully resolved parameters of one experiment invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: ExperimentId,
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub vmax: f64,
    pub br: usize,
    pub freshness_rounds: usize,
    pub k: usize,
    pub strategy: StrategyId,
    pub knowledge: KnowledgeMode,
    pub insertion: Insertion,
    pub distance: Distance,
    pub time_coord_index: usize,
    /// Per convergence; `None` means 10 x N.
    pub max_rounds: Option<usize>,
    pub update_order: UpdateOrder,
    /// Seeds per sweep cell.
    pub seeds: usize,
    /// Sweep axes; `None` takes the experiment's own default.
    pub dims: Option<Vec<usize>>,
    pub ns: Option<Vec<usize>>,
    pub ks: Option<Vec<usize>>,
    /// Roots per overlay for multicast runs; `None` means every peer.
    pub roots: Option<usize>,
}

impl RunConfig {
    /// Full-size defaults for `experiment`.
    pub fn new(experiment: ExperimentId) -> Self {
        let base = Self {
            experiment,
            seed: 0,
            n: 1000,
            d: 2,
            vmax: 1000.0,
            br: 2,
            freshness_rounds: 2,
            k: 1,
            strategy: StrategyId::EmptyRect,
            knowledge: KnowledgeMode::Full,
            insertion: Insertion::Batch,
            distance: Distance::L1,
            time_coord_index: 1,
            max_rounds: None,
            update_order: UpdateOrder::Synchronous,
            seeds: 10,
            dims: None,
            ns: None,
            ks: None,
            roots: None,
        };
        match experiment {
            ExperimentId::Fig1de | ExperimentId::Stability => Self { strategy: StrategyId::OrthoHp, ..base },
            ExperimentId::Overlay | ExperimentId::Multicast => Self { seeds: 1, ..base },
            ExperimentId::Verify => Self { n: 200, ..base },
            _ => base,
        }
    }

    /// Reduced-scale preset (N <= 300) that stays within the oracle cap.
    pub fn reduced(experiment: ExperimentId) -> Self {
        let base = Self::new(experiment);
        match experiment {
            ExperimentId::Fig1ab => Self { n: 300, seeds: 2, ..base },
            ExperimentId::Fig1c => Self { ns: Some(vec![50, 100, 200, 300]), seeds: 2, ..base },
            ExperimentId::Fig1de => {
                Self { n: 300, seeds: 2, dims: Some(vec![2, 3, 5]), ks: Some(vec![1, 2, 5, 10]), ..base }
            }
            ExperimentId::Verify => Self { n: 100, seeds: 2, ..base },
            _ => Self { n: 300, ..base },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n == 0 {
            return bad("n must be >= 1".into());
        }
        if self.d == 0 {
            return bad("d must be >= 1".into());
        }
        SpaceSpec::new(self.d, self.vmax)?;
        if self.br < 2 {
            return bad(format!("br must be >= 2, got {}", self.br));
        }
        if self.freshness_rounds == 0 {
            return bad("freshness_rounds must be >= 1".into());
        }
        if self.k == 0 {
            return bad("k must be >= 1".into());
        }
        if self.seeds == 0 {
            return bad("seeds must be >= 1".into());
        }
        if self.max_rounds == Some(0) {
            return bad("max_rounds must be >= 1".into());
        }
        if self.roots == Some(0) {
            return bad("roots must be >= 1".into());
        }
        for (name, axis) in [("dims", &self.dims), ("ns", &self.ns), ("ks", &self.ks)] {
            if let Some(v) = axis {
                if v.is_empty() || v.contains(&0) {
                    return bad(format!("{name} must be a non-empty list of positive values"));
                }
            }
        }
        let dims = self.dims_or(&[self.d]);
        if matches!(self.experiment, ExperimentId::Fig1de | ExperimentId::Stability) {
            if let Some(&d) = dims.iter().find(|&&d| self.time_coord_index == 0 || self.time_coord_index > d) {
                return bad(format!("time_coord_index {} outside 1..={d}", self.time_coord_index));
            }
        }
        if self.strategy == StrategyId::GenHp && dims.iter().any(|&d| d > 6) {
            return bad("gen-hp is limited to d <= 6 ((3^d - 1) / 2 planes)".into());
        }
        if self.experiment == ExperimentId::Verify && self.n > ORACLE_MAX_N {
            return bad(format!("verify is capped at n <= {ORACLE_MAX_N}"));
        }
        Ok(())
    }

    fn dims_or(&self, default: &[usize]) -> Vec<usize> {
        self.dims.clone().unwrap_or_else(|| default.to_vec())
    }

    fn gossip(&self) -> GossipConfig {
        GossipConfig { br: self.br, freshness_rounds: self.freshness_rounds, order: self.update_order }
    }
}

/// Per-cell seed: SHA-256 over the master seed, experiment, cell parameters and seed index.
pub fn derive_seed(master: u64, experiment: ExperimentId, params: &[(&str, u64)], index: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(experiment.name().as_bytes());
    for (k, v) in params {
        h.update(k.as_bytes());
        h.update(v.to_le_bytes());
    }
    h.update((index as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricValue {
    Int(i64),
    Real(f64),
}

impl fmt::Display for MetricValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricValue::Int(v) => write!(f, "{v}"),
            MetricValue::Real(v) => write!(f, "{v:.6}"),
        }
    }
}

impl From<usize> for MetricValue {
    fn from(v: usize) -> Self {
        MetricValue::Int(v as i64)
    }
}

impl From<bool> for MetricValue {
    fn from(v: bool) -> Self {
        MetricValue::Int(i64::from(v))
    }
}

impl From<f64> for MetricValue {
    fn from(v: f64) -> Self {
        MetricValue::Real(v)
    }
}

/// Metric names that may appear in a [`MetricsRow`].
pub const METRIC_NAMES: &[&str] = &[
    "max_topo_degree",
    "avg_topo_degree",
    "max_root_leaf_path",
    "avg_max_root_leaf_path",
    "messages_sent",
    "duplicates",
    "unreached",
    "children_max",
    "tree_diameter",
    "stab_tree_max_degree",
    "is_single_tree",
    "convergence_rounds",
    "jaccard_vs_full",
    "monotone_pass",
    "departure_disconnections",
    "root_candidates",
    "oracle_mismatches",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub experiment: ExperimentId,
    pub run_id: String,
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub strategy: StrategyId,
    pub metric_name: &'static str,
    pub value: MetricValue,
}

impl MetricsRow {
    fn sort_key(&self) -> (ExperimentId, &str, u64, usize, usize, usize, &str, &str, String) {
        (
            self.experiment,
            &self.run_id,
            self.seed,
            self.n,
            self.d,
            self.k,
            self.strategy.name(),
            self.metric_name,
            self.value.to_string(),
        )
    }
}

/// Sorts rows by every key column.
pub fn sort_rows(rows: &mut [MetricsRow]) {
    rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

pub const CSV_HEADER: &str = "experiment,run_id,seed,N,D,K,strategy,metric_name,value";

/// CSV text for `rows` in sorted order.
pub fn to_csv(rows: &[MetricsRow]) -> String {
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    let mut out = String::with_capacity(64 * (sorted.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &sorted {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.experiment,
            r.run_id,
            r.seed,
            r.n,
            r.d,
            r.k,
            r.strategy.name(),
            r.metric_name,
            r.value
        ));
    }
    out
}

pub fn write_csv(rows: &[MetricsRow], path: &Path) -> Result<()> {
    std::fs::write(path, to_csv(rows)).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

/// A pass/fail check evaluated while an experiment runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub checked: usize,
    pub failures: usize,
    /// First few failure descriptions.
    pub detail: Vec<String>,
}

impl Assertion {
    fn new(name: &str) -> Self {
        Self { name: name.to_string(), passed: true, checked: 0, failures: 0, detail: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.passed = false;
            self.failures += 1;
            if self.detail.len() < 10 {
                self.detail.push(what());
            }
        }
    }

    fn merge(&mut self, other: Assertion) {
        self.checked += other.checked;
        self.failures += other.failures;
        self.passed &= other.passed;
        for d in other.detail {
            if self.detail.len() < 10 {
                self.detail.push(d);
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<MetricsRow>,
    pub assertions: Vec<Assertion>,
}

impl ExperimentOutput {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    /// Folds cell outputs in the given order, merging assertions by name.
    fn collect(parts: Vec<ExperimentOutput>) -> Self {
        let mut rows = Vec::new();
        let mut merged: Vec<Assertion> = Vec::new();
        for part in parts {
            rows.extend(part.rows);
            for a in part.assertions {
                match merged.iter_mut().find(|m| m.name == a.name) {
                    Some(m) => m.merge(a),
                    None => merged.push(a),
                }
            }
        }
        sort_rows(&mut rows);
        Self { rows, assertions: merged }
    }
}

/// JSON run report written next to the CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub experiment: ExperimentId,
    pub config: RunConfig,
    pub passed: bool,
    pub rows: usize,
    pub assertions: Vec<Assertion>,
    /// Present only when timing was requested; omitted by default so reports are byte-reproducible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

impl RunReport {
    pub fn new(config: &RunConfig, output: &ExperimentOutput, wall_time_ms: Option<u64>) -> Self {
        Self {
            experiment: config.experiment,
            config: config.clone(),
            passed: output.passed(),
            rows: output.rows.len(),
            assertions: output.assertions.clone(),
            wall_time_ms,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Parameters of one overlay build inside a sweep.
#[derive(Clone, Debug)]
struct Cell {
    run_id: String,
    seed: u64,
    n: usize,
    d: usize,
    k: usize,
}

impl Cell {
    fn new(cfg: &RunConfig, n: usize, d: usize, k: usize, index: usize) -> Self {
        let params = [("n", n as u64), ("d", d as u64), ("k", k as u64)];
        let seed = derive_seed(cfg.seed, cfg.experiment, &params, index);
        let run_id = format!(
            "{}:{}-{}:n{n}:d{d}:k{k}:s{index}",
            cfg.experiment,
            knowledge_name(cfg.knowledge),
            cfg.insertion.name()
        );
        Self { run_id, seed, n, d, k }
    }

    fn row(&self, cfg: &RunConfig, metric_name: &'static str, value: impl Into<MetricValue>) -> MetricsRow {
        debug_assert!(METRIC_NAMES.contains(&metric_name));
        MetricsRow {
            experiment: cfg.experiment,
            run_id: self.run_id.clone(),
            seed: self.seed,
            n: self.n,
            d: self.d,
            k: self.k,
            strategy: cfg.strategy,
            metric_name,
            value: value.into(),
        }
    }
}

/// Overlay built for one cell, with bookkeeping for the report.
pub struct BuiltOverlay {
    pub topology: Topology,
    pub strategy: SelectionStrategy,
    pub rounds: usize,
}

/// Builds and converges an overlay for `peers` under `cfg`'s knowledge and insertion modes.
///
/// Joining peers bootstrap from one uniformly chosen earlier peer.
pub fn build_overlay(
    cfg: &RunConfig,
    peers: Vec<Peer>,
    strategy: SelectionStrategy,
    seed: u64,
) -> Result<BuiltOverlay> {
    let n = peers.len();
    let max_rounds = cfg.max_rounds.unwrap_or(10 * n.max(1));
    let gossip = cfg.gossip();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6f76_6572_6c61_7921);
    let mut topology = Topology::new(cfg.knowledge);
    let mut rounds = 0;
    if cfg.insertion == Insertion::Batch && cfg.knowledge == KnowledgeMode::Full {
        topology = Topology::from_peers(peers, KnowledgeMode::Full)?;
        rounds += converge(&mut topology, &gossip, &strategy, max_rounds)?;
        return Ok(BuiltOverlay { topology, strategy, rounds });
    }
    let mut ids: Vec<PeerId> = Vec::with_capacity(n);
    for p in peers {
        let boot = if ids.is_empty() { Vec::new() } else { vec![ids[rng.gen_range(0..ids.len())]] };
        ids.push(p.id);
        topology.insert_peer(p, &boot)?;
        if cfg.insertion == Insertion::Incremental {
            rounds += converge(&mut topology, &gossip, &strategy, max_rounds)?;
        }
    }
    if cfg.insertion == Insertion::Batch {
        rounds += converge(&mut topology, &gossip, &strategy, max_rounds)?;
    }
    Ok(BuiltOverlay { topology, strategy, rounds })
}

fn full_equilibrium(cfg: &RunConfig, topology: &Topology, strategy: &SelectionStrategy) -> Result<Topology> {
    let mut full = Topology::from_peers(topology.peers().to_vec(), KnowledgeMode::Full)?;
    converge(&mut full, &cfg.gossip(), strategy, cfg.max_rounds.unwrap_or(10 * topology.len().max(1)))?;
    Ok(full)
}

fn space(cfg: &RunConfig, d: usize) -> Result<SpaceSpec> {
    Ok(SpaceSpec::new(d, cfg.vmax)?)
}

/// Topology rows shared by every overlay-building experiment.
fn overlay_rows(cfg: &RunConfig, cell: &Cell, built: &BuiltOverlay, out: &mut ExperimentOutput) -> Result<()> {
    let m = topology_metrics(&built.topology);
    out.rows.push(cell.row(cfg, "max_topo_degree", m.max_degree));
    out.rows.push(cell.row(cfg, "avg_topo_degree", m.avg_degree));
    out.rows.push(cell.row(cfg, "convergence_rounds", built.rounds));
    if cfg.knowledge == KnowledgeMode::Gossip || cfg.insertion == Insertion::Incremental {
        let full = full_equilibrium(cfg, &built.topology, &built.strategy)?;
        out.rows.push(cell.row(cfg, "jaccard_vs_full", neighbor_jaccard(&built.topology, &full)?));
    }
    Ok(())
}

fn root_sample(topology: &Topology, roots: Option<usize>) -> Vec<PeerId> {
    let ids: Vec<PeerId> = topology.peers().iter().map(|p| p.id).collect();
    match roots {
        Some(r) if r < ids.len() => (0..r).map(|i| ids[i * ids.len() / r]).collect(),
        _ => ids,
    }
}

/// Multicast trees from each sampled root, with delivery assertions.
fn multicast_cell(cfg: &RunConfig, cell: &Cell, topology: &Topology, out: &mut ExperimentOutput) -> Result<()> {
    let roots = root_sample(topology, cfg.roots);
    let trees: Vec<MulticastTree> = roots.par_iter().map(|&r| build_tree(topology, r)).collect::<Result<_>>()?;
    let n = topology.len();
    let mut optimal = Assertion::new("message_optimality");
    let mut children = Assertion::new("children_bound");
    let mut accounting = Assertion::new("message_accounting");
    let mut no_dups = Assertion::new("no_duplicates");
    let (mut max_path, mut path_sum, mut max_sent, mut dups, mut max_unreached, mut child_max, mut diameter) =
        (0usize, 0usize, 0usize, 0usize, 0usize, 0usize, 0usize);
    let bound = 1usize << cell.d;
    for tree in &trees {
        let m = tree_metrics(tree);
        max_path = max_path.max(m.longest_root_leaf_hops);
        path_sum += m.longest_root_leaf_hops;
        max_sent = max_sent.max(tree.messages_sent);
        dups += tree.duplicates;
        max_unreached = max_unreached.max(tree.unreached.len());
        child_max = child_max.max(m.children_max);
        diameter = diameter.max(m.diameter_hops);
        let tag = || format!("{} root {}", cell.run_id, tree.root);
        if cfg.knowledge == KnowledgeMode::Full && cfg.strategy == StrategyId::EmptyRect {
            optimal.check(tree.messages_sent == n - 1 && tree.duplicates == 0 && tree.unreached.is_empty(), || {
                format!(
                    "{}: sent={} dups={} unreached={}",
                    tag(),
                    tree.messages_sent,
                    tree.duplicates,
                    tree.unreached.len()
                )
            });
        }
        children.check(m.children_max <= bound, || format!("{}: {} children > {bound}", tag(), m.children_max));
        accounting.check(tree.messages_sent + tree.unreached.len() == n - 1, || {
            format!("{}: sent={} unreached={} n={n}", tag(), tree.messages_sent, tree.unreached.len())
        });
        no_dups.check(tree.duplicates == 0, || format!("{}: {} duplicates", tag(), tree.duplicates));
    }
    out.rows.push(cell.row(cfg, "max_root_leaf_path", max_path));
    out.rows.push(cell.row(cfg, "avg_max_root_leaf_path", path_sum as f64 / trees.len().max(1) as f64));
    out.rows.push(cell.row(cfg, "messages_sent", max_sent));
    out.rows.push(cell.row(cfg, "duplicates", dups));
    out.rows.push(cell.row(cfg, "unreached", max_unreached));
    out.rows.push(cell.row(cfg, "children_max", child_max));
    out.rows.push(cell.row(cfg, "tree_diameter", diameter));
    if cfg.knowledge == KnowledgeMode::Full && cfg.strategy == StrategyId::EmptyRect {
        out.assertions.push(optimal);
    }
    out.assertions.extend([children, accounting, no_dups]);
    Ok(())
}

fn fig1ab_cell(cfg: &RunConfig, cell: &Cell) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput::default();
    let peers = generate_peers(cell.n, space(cfg, cell.d)?, cell.seed, false)?;
    let built = build_overlay(cfg, peers, cfg.strategy.build(cell.k, cfg.distance, cell.d), cell.seed)?;
    overlay_rows(cfg, cell, &built, &mut out)?;
    multicast_cell(cfg, cell, &built.topology, &mut out)?;
    Ok(out)
}

fn run_cells(
    cells: Vec<Cell>,
    f: impl Fn(&Cell) -> Result<ExperimentOutput> + Sync + Send,
) -> Result<ExperimentOutput> {
    let parts = cells.par_iter().map(f).collect::<Result<Vec<_>>>()?;
    Ok(ExperimentOutput::collect(parts))
}

/// Topology degree and multicast path lengths for D in 2..=5 (or `dims`), trees from every peer.
pub fn exp_fig1ab(cfg: &RunConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let cells = cfg
        .dims_or(&[2, 3, 4, 5])
        .into_iter()
        .flat_map(|d| (0..cfg.seeds).map(move |s| (d, s)))
        .map(|(d, s)| Cell::new(cfg, cfg.n, d, cfg.k, s))
        .collect();
    run_cells(cells, |c| fig1ab_cell(cfg, c))
}

/// Topology degree versus N at D = 2, with the logarithmic-growth checks per seed.
pub fn exp_fig1c(cfg: &RunConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let ns = cfg.ns.clone().unwrap_or_else(|| vec![100, 500, 1000, 2000, 5000]);
    let dims = cfg.dims_or(&[2]);
    let mut cells = Vec::new();
    for &d in &dims {
        for s in 0..cfg.seeds {
            for &n in &ns {
                cells.push(Cell::new(cfg, n, d, cfg.k, s));
            }
        }
    }
    let per_cell = cells
        .par_iter()
        .map(|cell| {
            let mut out = ExperimentOutput::default();
            let peers = generate_peers(cell.n, space(cfg, cell.d)?, cell.seed, false)?;
            let built = build_overlay(cfg, peers, cfg.strategy.build(cell.k, cfg.distance, cell.d), cell.seed)?;
            let avg = topology_metrics(&built.topology).avg_degree;
            overlay_rows(cfg, cell, &built, &mut out)?;
            Ok(((cell.d, cell.seed_index(), cell.n), avg, out))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut series: BTreeMap<(usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
    for ((d, s, n), avg, _) in &per_cell {
        series.entry((*d, *s)).or_default().push((*n, *avg));
    }
    let mut log_band = Assertion::new("degree_over_log2n_within_factor_2");
    let mut sublinear = Assertion::new("degree_sublinear");
    let mut monotone = Assertion::new("degree_monotone");
    for ((d, s), mut pts) in series {
        pts.sort_by_key(|p| p.0);
        let ratios: Vec<f64> = pts.iter().filter(|p| p.0 > 1).map(|&(n, a)| a / (n as f64).log2()).collect();
        if let (Some(lo), Some(hi)) = (ratios.iter().copied().reduce(f64::min), ratios.iter().copied().reduce(f64::max))
        {
            log_band.check(hi <= 2.0 * lo, || format!("d{d} s{s}: avg/log2(N) spans [{lo:.4}, {hi:.4}]"));
        }
        if let (Some(first), Some(last)) = (pts.first(), pts.last()) {
            if last.0 > first.0 {
                let growth = last.1 / first.1;
                let scale = last.0 as f64 / first.0 as f64;
                sublinear.check(growth < scale, || format!("d{d} s{s}: degree grew x{growth:.3} over x{scale}"));
            }
        }
        for w in pts.windows(2) {
            monotone.check(w[1].1 >= w[0].1, || {
                format!("d{d} s{s}: avg degree {:.4} at N={} < {:.4} at N={}", w[1].1, w[1].0, w[0].1, w[0].0)
            });
        }
    }
    let mut output = ExperimentOutput::collect(per_cell.into_iter().map(|(_, _, o)| o).collect());
    output.assertions.extend([log_band, sublinear, monotone]);
    Ok(output)
}

impl Cell {
    fn seed_index(&self) -> usize {
        self.run_id.rsplit(":s").next().and_then(|s| s.parse().ok()).unwrap_or(0)
    }
}

fn stability_cell(cfg: &RunConfig, cell: &Cell) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput::default();
    let spec = space(cfg, cell.d)?;
    let peers = generate_peers(cell.n, spec, cell.seed, true)?;
    let peers = embed_lifetimes(&peers, StabilityConfig { time_coord_index: cfg.time_coord_index }, spec)?;
    let built = build_overlay(cfg, peers, cfg.strategy.build(cell.k, cfg.distance, cell.d), cell.seed)?;
    overlay_rows(cfg, cell, &built, &mut out)?;
    let tree = build_stability_tree(&built.topology)?;
    let mono = verify_monotone(&tree);
    let dep = simulate_departures(&tree);
    out.rows.push(cell.row(cfg, "is_single_tree", tree.is_single_tree));
    out.rows.push(cell.row(cfg, "monotone_pass", mono.passed()));
    out.rows.push(cell.row(cfg, "stab_tree_max_degree", mono.max_degree));
    out.rows.push(cell.row(cfg, "tree_diameter", mono.diameter));
    out.rows.push(cell.row(cfg, "departure_disconnections", dep.disconnections));
    out.rows.push(cell.row(cfg, "root_candidates", tree.root_candidates.len()));

    let mut single = Assertion::new("single_tree");
    single.check(tree.is_single_tree, || {
        format!(
            "{}: {} root candidates, component sizes {:?}",
            cell.run_id,
            tree.root_candidates.len(),
            &tree.component_sizes[..tree.component_sizes.len().min(8)]
        )
    });
    let mut monotone = Assertion::new("lifetime_monotone");
    monotone.check(mono.passed(), || format!("{}: {} violations", cell.run_id, mono.violations.len()));
    let mut departures = Assertion::new("leaf_departures");
    departures.check(dep.passed(), || {
        format!(
            "{}: {} non-leaf departures, {} disconnections",
            cell.run_id,
            dep.non_leaf_departures.len(),
            dep.disconnections
        )
    });
    out.assertions.extend([single, monotone, departures]);
    Ok(out)
}

/// Stability trees over the (D, K) grid with the orthogonal-hyperplanes overlay.
pub fn exp_fig1de(cfg: &RunConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let dims = cfg.dims_or(&(2..=10).collect::<Vec<_>>());
    let ks = cfg.ks.clone().unwrap_or_else(|| (1..=50).collect());
    let mut cells = Vec::new();
    for &d in &dims {
        for &k in &ks {
            for s in 0..cfg.seeds {
                cells.push(Cell::new(cfg, cfg.n, d, k, s));
            }
        }
    }
    run_cells(cells, |c| stability_cell(cfg, c))
}

/// One overlay per seed: topology metrics only.
pub fn exp_overlay(cfg: &RunConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let cells = (0..cfg.seeds).map(|s| Cell::new(cfg, cfg.n, cfg.d, cfg.k, s)).collect();
    run_cells(cells, |cell| {
        let mut out = ExperimentOutput::default();
        let peers = generate_peers(cell.n, space(cfg, cell.d)?, cell.seed, false)?;
        let built = build_overlay(cfg, peers, cfg.strategy.build(cell.k, cfg.distance, cell.d), cell.seed)?;
        overlay_rows(cfg, cell, &built, &mut out)?;
        Ok(out)
    })
}

/// One overlay per seed plus multicast trees from the sampled roots.
pub fn exp_multicast(cfg: &RunConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let cells = (0..cfg.seeds).map(|s| Cell::new(cfg, cfg.n, cfg.d, cfg.k, s)).collect();
    run_cells(cells, |c| fig1ab_cell(cfg, c))
}

/// One stability tree per seed.
pub fn exp_stability(cfg: &RunConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let cells = (0..cfg.seeds).map(|s| Cell::new(cfg, cfg.n, cfg.d, cfg.k, s)).collect();
    run_cells(cells, |c| stability_cell(cfg, c))
}

/// Knowledge rounds checked against the BFS oracle while a gossip overlay converges from random bootstrap links.
pub fn verify_knowledge_rounds(
    cfg: &RunConfig,
    peers: Vec<Peer>,
    strategy: &SelectionStrategy,
    seed: u64,
) -> Result<(Assertion, Topology)> {
    let gossip = cfg.gossip();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6b6e_6f77);
    let mut topology = Topology::new(KnowledgeMode::Gossip);
    let mut ids = Vec::new();
    for p in peers {
        let boot = if ids.is_empty() { Vec::new() } else { vec![ids[rng.gen_range(0..ids.len())]] };
        ids.push(p.id);
        topology.insert_peer(p, &boot)?;
    }
    let mut check = Assertion::new("knowledge_round_matches_bfs");
    let max_rounds = cfg.max_rounds.unwrap_or(10 * topology.len().max(1));
    for _ in 0..max_rounds {
        let graph = oracle::undirected_graph(&topology);
        let fresh = knowledge_round(&mut topology.clone(), &gossip);
        for (id, got) in &fresh {
            let want = oracle::bfs_hops(&graph, *id, gossip.br)?;
            check.check(&want == got, || format!("peer {id}: bfs {} vs round {}", want.len(), got.len()));
        }
        match converge(&mut topology, &gossip, strategy, 1) {
            Ok(_) => return Ok((check, topology)),
            Err(OverlayError::NonConvergence { .. }) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(Error::Config(format!("gossip overlay did not converge within {max_rounds} rounds")))
}

/// Oracle cross-checks on small instances. Caps N at [`ORACLE_MAX_N`].
pub fn exp_verify(cfg: &RunConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let cells = cfg
        .dims_or(&[cfg.d])
        .into_iter()
        .flat_map(|d| (0..cfg.seeds).map(move |s| (d, s)))
        .map(|(d, s)| Cell::new(cfg, cfg.n, d, cfg.k, s))
        .collect();
    run_cells(cells, |cell| verify_cell(cfg, cell))
}

fn verify_cell(cfg: &RunConfig, cell: &Cell) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput::default();
    let peers = generate_peers(cell.n, space(cfg, cell.d)?, cell.seed, false)?;
    let strategy = cfg.strategy.build(cell.k, cfg.distance, cell.d);

    let (knowledge, _) = verify_knowledge_rounds(cfg, peers.clone(), &strategy, cell.seed)?;

    let full_cfg = RunConfig { knowledge: KnowledgeMode::Full, insertion: Insertion::Batch, ..cfg.clone() };
    let built = build_overlay(&full_cfg, peers, strategy.clone(), cell.seed)?;
    let eq = oracle::check_full_knowledge_equilibrium(&built.topology, &strategy)?;
    let mut equilibrium = Assertion::new("equilibrium_matches_brute_force");
    equilibrium.check(eq.passed(), || format!("{}: {} mismatched peers", cell.run_id, eq.mismatches.len()));

    let topology = &built.topology;
    let roots = root_sample(topology, cfg.roots);
    let checks = roots
        .par_iter()
        .map(|&root| {
            let tree = build_tree(topology, root)?;
            let mut steps = Assertion::new("step_partition");
            for (p, kids) in &tree.children {
                let me = topology.peer(*p).expect("reached peers exist");
                let child_refs: Vec<(&Peer, &crate::multicast::Zone)> =
                    kids.iter().map(|c| (topology.peer(*c).expect("child exists"), &tree.zone_trace[c])).collect();
                let report = verify_step_partition(me, &tree.zone_trace[p], &child_refs, topology.peers());
                steps.check(report.passed(), || format!("{} root {root} peer {p}: {report:?}", cell.run_id));
            }
            let del = oracle::check_delivery(&tree, topology.peers())?;
            let mut delivery = Assertion::new("delivery");
            delivery.check(del.passed() && tree.unreached.is_empty(), || {
                format!(
                    "{} root {root}: {} mismatches, {} unreached",
                    cell.run_id,
                    del.mismatches.len(),
                    tree.unreached.len()
                )
            });
            Ok((steps, delivery, del.mismatches.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut steps = Assertion::new("step_partition");
    let mut delivery = Assertion::new("delivery");
    let mut mismatches = eq.mismatches.len() + knowledge.failures;
    for (s, d, m) in checks {
        steps.merge(s);
        delivery.merge(d);
        mismatches += m;
    }
    out.rows.push(cell.row(cfg, "oracle_mismatches", mismatches + steps.failures));
    out.assertions.extend([knowledge, equilibrium, steps, delivery]);
    Ok(out)
}

/// Dispatches on `cfg.experiment`.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentOutput> {
    match cfg.experiment {
        ExperimentId::Fig1ab => exp_fig1ab(cfg),
        ExperimentId::Fig1c => exp_fig1c(cfg),
        ExperimentId::Fig1de => exp_fig1de(cfg),
        ExperimentId::Overlay => exp_overlay(cfg),
        ExperimentId::Multicast => exp_multicast(cfg),
        ExperimentId::Stability => exp_stability(cfg),
        ExperimentId::Verify => exp_verify(cfg),
    }
}
