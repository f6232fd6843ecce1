//! C ABI over the geocast core.
//!
//! Objects are opaque handles created by `*_new`/`*_build` functions and released
//! with the matching `*_free`. Every fallible call returns a [`GeocastStatus`];
//! on failure, [`geocast_last_error`] gives a message for the calling thread.
//! Enumerated inputs are plain `uint32_t` values from the `GEOCAST_*` constants.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use geocast::error::{Error, OverlayError};
use geocast::harness::{self, build_overlay, ExperimentId, Insertion, RunConfig, StrategyId};
use geocast::multicast::{build_tree, tree_metrics, MulticastTree};
use geocast::overlay::{generate_peers, topology_metrics, Distance};
use geocast::stability::{build_stability_tree, embed_lifetimes, simulate_departures, verify_monotone, StabilityTree};
use geocast::{KnowledgeMode, PeerId, SpaceSpec, StabilityConfig, Topology};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeocastStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NonConvergence = 3,
    UnknownPeer = 4,
    Io = 5,
    AssertionFailed = 6,
    BufferTooSmall = 7,
    Internal = 8,
}

pub const GEOCAST_STRATEGY_EMPTY_RECT: u32 = 0;
pub const GEOCAST_STRATEGY_ORTHO_HP: u32 = 1;
pub const GEOCAST_STRATEGY_GEN_HP: u32 = 2;
pub const GEOCAST_STRATEGY_K_CLOSEST: u32 = 3;

pub const GEOCAST_DISTANCE_L1: u32 = 0;
pub const GEOCAST_DISTANCE_L2: u32 = 1;

pub const GEOCAST_KNOWLEDGE_FULL: u32 = 0;
pub const GEOCAST_KNOWLEDGE_GOSSIP: u32 = 1;

pub const GEOCAST_INSERTION_BATCH: u32 = 0;
pub const GEOCAST_INSERTION_INCREMENTAL: u32 = 1;

/// Parameters for [`geocast_overlay_new`]. Start from [`geocast_overlay_config_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct GeocastOverlayConfig {
    pub n: u32,
    pub d: u32,
    pub vmax: f64,
    pub seed: u64,
    pub strategy: u32,
    pub k: u32,
    pub distance: u32,
    pub knowledge: u32,
    pub insertion: u32,
    pub br: u32,
    pub freshness_rounds: u32,
    /// 0 means 10 x n.
    pub max_rounds: u32,
    /// Draw lifetimes and embed them in coordinate `time_coord_index`.
    pub with_lifetimes: bool,
    pub time_coord_index: u32,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GeocastTopologyMetrics {
    pub max_degree: usize,
    pub avg_degree: f64,
    pub convergence_rounds: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GeocastTreeMetrics {
    pub messages_sent: usize,
    pub duplicates: usize,
    pub unreached: usize,
    pub max_tree_degree: usize,
    pub children_max: usize,
    pub longest_root_leaf_hops: usize,
    pub diameter_hops: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GeocastStabilitySummary {
    pub is_single_tree: bool,
    pub root_candidates: usize,
    pub components: usize,
    pub largest_component: usize,
    pub monotone: bool,
    pub max_degree: usize,
    pub diameter: usize,
    pub disconnections: usize,
}

/// Converged overlay.
pub struct GeocastOverlay {
    topology: Topology,
    rounds: usize,
}

/// Multicast tree built over an overlay.
pub struct GeocastTree {
    tree: MulticastTree,
}

/// Preferred-neighbour tree built over a lifetime-embedded overlay.
pub struct GeocastStabilityTree {
    tree: StabilityTree,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: GeocastStatus, msg: impl Into<String>) -> GeocastStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> GeocastStatus {
    match e {
        Error::Overlay(OverlayError::NonConvergence { .. }) => GeocastStatus::NonConvergence,
        Error::Overlay(OverlayError::UnknownPeer(_)) | Error::UnknownRoot(_) => GeocastStatus::UnknownPeer,
        Error::Io { .. } => GeocastStatus::Io,
        _ => GeocastStatus::InvalidArgument,
    }
}

fn from_error(e: Error) -> GeocastStatus {
    fail(status_of(&e), e.to_string())
}

/// Runs `f`, turning panics into `Internal`.
fn guard(f: impl FnOnce() -> GeocastStatus) -> GeocastStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(GeocastStatus::Internal, "internal panic"),
    }
}

/// Message for the last failed call on this thread, or null. Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn geocast_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn geocast_overlay_config_default() -> GeocastOverlayConfig {
    GeocastOverlayConfig {
        n: 100,
        d: 2,
        vmax: 1000.0,
        seed: 0,
        strategy: GEOCAST_STRATEGY_EMPTY_RECT,
        k: 1,
        distance: GEOCAST_DISTANCE_L1,
        knowledge: GEOCAST_KNOWLEDGE_FULL,
        insertion: GEOCAST_INSERTION_BATCH,
        br: 2,
        freshness_rounds: 2,
        max_rounds: 0,
        with_lifetimes: false,
        time_coord_index: 1,
    }
}

fn run_config(c: &GeocastOverlayConfig) -> Result<RunConfig, String> {
    let strategy = match c.strategy {
        GEOCAST_STRATEGY_EMPTY_RECT => StrategyId::EmptyRect,
        GEOCAST_STRATEGY_ORTHO_HP => StrategyId::OrthoHp,
        GEOCAST_STRATEGY_GEN_HP => StrategyId::GenHp,
        GEOCAST_STRATEGY_K_CLOSEST => StrategyId::KClosest,
        s => return Err(format!("unknown strategy {s}")),
    };
    let distance = match c.distance {
        GEOCAST_DISTANCE_L1 => Distance::L1,
        GEOCAST_DISTANCE_L2 => Distance::L2,
        v => return Err(format!("unknown distance {v}")),
    };
    let knowledge = match c.knowledge {
        GEOCAST_KNOWLEDGE_FULL => KnowledgeMode::Full,
        GEOCAST_KNOWLEDGE_GOSSIP => KnowledgeMode::Gossip,
        v => return Err(format!("unknown knowledge mode {v}")),
    };
    let insertion = match c.insertion {
        GEOCAST_INSERTION_BATCH => Insertion::Batch,
        GEOCAST_INSERTION_INCREMENTAL => Insertion::Incremental,
        v => return Err(format!("unknown insertion mode {v}")),
    };
    let experiment = if c.with_lifetimes { ExperimentId::Stability } else { ExperimentId::Overlay };
    let cfg = RunConfig {
        seed: c.seed,
        n: c.n as usize,
        d: c.d as usize,
        vmax: c.vmax,
        br: c.br as usize,
        freshness_rounds: c.freshness_rounds as usize,
        k: c.k as usize,
        strategy,
        knowledge,
        insertion,
        distance,
        time_coord_index: c.time_coord_index as usize,
        max_rounds: (c.max_rounds > 0).then_some(c.max_rounds as usize),
        seeds: 1,
        ..RunConfig::new(experiment)
    };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn new_overlay(c: &GeocastOverlayConfig) -> Result<GeocastOverlay, GeocastStatus> {
    let cfg = run_config(c).map_err(|m| fail(GeocastStatus::InvalidArgument, m))?;
    let spec = SpaceSpec::new(cfg.d, cfg.vmax).map_err(|e| from_error(e.into()))?;
    let mut peers = generate_peers(cfg.n, spec, cfg.seed, c.with_lifetimes).map_err(|e| from_error(e.into()))?;
    if c.with_lifetimes {
        peers = embed_lifetimes(&peers, StabilityConfig { time_coord_index: cfg.time_coord_index }, spec)
            .map_err(|e| from_error(e.into()))?;
    }
    let strategy = cfg.strategy.build(cfg.k, cfg.distance, cfg.d);
    let built = build_overlay(&cfg, peers, strategy, cfg.seed).map_err(from_error)?;
    Ok(GeocastOverlay { topology: built.topology, rounds: built.rounds })
}

/// Generates `config.n` peers and converges their overlay. Peer ids are `0..n`.
///
/// # Safety
/// `config` must point to a valid config and `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn geocast_overlay_new(
    config: *const GeocastOverlayConfig,
    out: *mut *mut GeocastOverlay,
) -> GeocastStatus {
    guard(|| {
        if config.is_null() || out.is_null() {
            return fail(GeocastStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        match new_overlay(&*config) {
            Ok(o) => {
                *out = Box::into_raw(Box::new(o));
                GeocastStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// # Safety
/// `overlay` must be null or a handle from [`geocast_overlay_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn geocast_overlay_free(overlay: *mut GeocastOverlay) {
    if !overlay.is_null() {
        drop(Box::from_raw(overlay));
    }
}

/// Peer count; 0 for a null handle.
///
/// # Safety
/// `overlay` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn geocast_overlay_len(overlay: *const GeocastOverlay) -> usize {
    overlay.as_ref().map_or(0, |o| o.topology.len())
}

/// # Safety
/// `overlay` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn geocast_overlay_metrics(
    overlay: *const GeocastOverlay,
    out: *mut GeocastTopologyMetrics,
) -> GeocastStatus {
    guard(|| {
        let (Some(o), false) = (overlay.as_ref(), out.is_null()) else {
            return fail(GeocastStatus::NullPointer, "null argument");
        };
        let m = topology_metrics(&o.topology);
        *out =
            GeocastTopologyMetrics { max_degree: m.max_degree, avg_degree: m.avg_degree, convergence_rounds: o.rounds };
        GeocastStatus::Ok
    })
}

/// Copies `values` into `buf` when it fits; always stores the full length in `len`.
unsafe fn copy_out<T: Copy>(values: &[T], buf: *mut T, cap: usize, len: *mut usize) -> GeocastStatus {
    *len = values.len();
    if values.len() > cap {
        return fail(GeocastStatus::BufferTooSmall, format!("need {} slots, have {cap}", values.len()));
    }
    if !values.is_empty() {
        if buf.is_null() {
            return fail(GeocastStatus::NullPointer, "null buffer");
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    }
    GeocastStatus::Ok
}

/// Out-neighbour ids of `peer`, ascending. Call with `cap = 0` to query the length.
///
/// # Safety
/// `overlay` must be a live handle, `buf` valid for `cap` writes, `len` writable.
#[no_mangle]
pub unsafe extern "C" fn geocast_overlay_neighbors(
    overlay: *const GeocastOverlay,
    peer: u32,
    buf: *mut u32,
    cap: usize,
    len: *mut usize,
) -> GeocastStatus {
    guard(|| {
        let (Some(o), false) = (overlay.as_ref(), len.is_null()) else {
            return fail(GeocastStatus::NullPointer, "null argument");
        };
        let Some(ids) = o.topology.out_neighbors(PeerId(peer)) else {
            return fail(GeocastStatus::UnknownPeer, format!("unknown peer {peer}"));
        };
        let raw: Vec<u32> = ids.into_iter().map(|p| p.0).collect();
        copy_out(&raw, buf, cap, len)
    })
}

/// Coordinates of `peer`, one value per dimension.
///
/// # Safety
/// `overlay` must be a live handle, `buf` valid for `cap` writes, `len` writable.
#[no_mangle]
pub unsafe extern "C" fn geocast_overlay_coord(
    overlay: *const GeocastOverlay,
    peer: u32,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> GeocastStatus {
    guard(|| {
        let (Some(o), false) = (overlay.as_ref(), len.is_null()) else {
            return fail(GeocastStatus::NullPointer, "null argument");
        };
        let Some(p) = o.topology.peer(PeerId(peer)) else {
            return fail(GeocastStatus::UnknownPeer, format!("unknown peer {peer}"));
        };
        copy_out(p.coord.as_slice(), buf, cap, len)
    })
}

/// Builds the multicast tree rooted at `root`.
///
/// # Safety
/// `overlay` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn geocast_tree_build(
    overlay: *const GeocastOverlay,
    root: u32,
    out: *mut *mut GeocastTree,
) -> GeocastStatus {
    guard(|| {
        let (Some(o), false) = (overlay.as_ref(), out.is_null()) else {
            return fail(GeocastStatus::NullPointer, "null argument");
        };
        *out = ptr::null_mut();
        match build_tree(&o.topology, PeerId(root)) {
            Ok(tree) => {
                *out = Box::into_raw(Box::new(GeocastTree { tree }));
                GeocastStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `tree` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn geocast_tree_free(tree: *mut GeocastTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// # Safety
/// `tree` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn geocast_tree_metrics(tree: *const GeocastTree, out: *mut GeocastTreeMetrics) -> GeocastStatus {
    guard(|| {
        let (Some(t), false) = (tree.as_ref(), out.is_null()) else {
            return fail(GeocastStatus::NullPointer, "null argument");
        };
        let m = tree_metrics(&t.tree);
        *out = GeocastTreeMetrics {
            messages_sent: t.tree.messages_sent,
            duplicates: t.tree.duplicates,
            unreached: t.tree.unreached.len(),
            max_tree_degree: m.max_tree_degree,
            children_max: m.children_max,
            longest_root_leaf_hops: m.longest_root_leaf_hops,
            diameter_hops: m.diameter_hops,
        };
        GeocastStatus::Ok
    })
}

/// Parent of `peer` in the tree. `has_parent` is false for the root and for unreached peers.
///
/// # Safety
/// `tree` must be a live handle; `parent` and `has_parent` writable.
#[no_mangle]
pub unsafe extern "C" fn geocast_tree_parent(
    tree: *const GeocastTree,
    peer: u32,
    parent: *mut u32,
    has_parent: *mut bool,
) -> GeocastStatus {
    guard(|| {
        let (Some(t), false, false) = (tree.as_ref(), parent.is_null(), has_parent.is_null()) else {
            return fail(GeocastStatus::NullPointer, "null argument");
        };
        match t.tree.parent.get(&PeerId(peer)) {
            Some(p) => {
                *parent = p.0;
                *has_parent = true;
            }
            None => {
                *parent = 0;
                *has_parent = false;
            }
        }
        GeocastStatus::Ok
    })
}

/// Builds the preferred-neighbour tree. The overlay should have been created `with_lifetimes`.
///
/// # Safety
/// `overlay` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn geocast_stability_build(
    overlay: *const GeocastOverlay,
    out: *mut *mut GeocastStabilityTree,
) -> GeocastStatus {
    guard(|| {
        let (Some(o), false) = (overlay.as_ref(), out.is_null()) else {
            return fail(GeocastStatus::NullPointer, "null argument");
        };
        *out = ptr::null_mut();
        match build_stability_tree(&o.topology) {
            Ok(tree) => {
                *out = Box::into_raw(Box::new(GeocastStabilityTree { tree }));
                GeocastStatus::Ok
            }
            Err(e) => from_error(e.into()),
        }
    })
}

/// # Safety
/// `tree` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn geocast_stability_free(tree: *mut GeocastStabilityTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Tree shape, monotonicity check and departure simulation in one summary.
///
/// # Safety
/// `tree` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn geocast_stability_summary(
    tree: *const GeocastStabilityTree,
    out: *mut GeocastStabilitySummary,
) -> GeocastStatus {
    guard(|| {
        let (Some(t), false) = (tree.as_ref(), out.is_null()) else {
            return fail(GeocastStatus::NullPointer, "null argument");
        };
        let tree = &t.tree;
        let mono = verify_monotone(tree);
        let dep = simulate_departures(tree);
        *out = GeocastStabilitySummary {
            is_single_tree: tree.is_single_tree,
            root_candidates: tree.root_candidates.len(),
            components: tree.component_sizes.len(),
            largest_component: tree.component_sizes.first().copied().unwrap_or(0),
            monotone: mono.passed(),
            max_degree: mono.max_degree,
            diameter: mono.diameter,
            disconnections: dep.disconnections,
        };
        GeocastStatus::Ok
    })
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Runs an experiment described by a JSON config (same keys as the command-line config file).
/// Writes the CSV text and JSON report to `out_csv` and `out_report`; release both with
/// [`geocast_string_free`]. Returns `AssertionFailed` (with outputs set) when an embedded check fails.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out_csv` and `out_report` writable.
#[no_mangle]
pub unsafe extern "C" fn geocast_run_experiment(
    config_json: *const c_char,
    out_csv: *mut *mut c_char,
    out_report: *mut *mut c_char,
) -> GeocastStatus {
    guard(|| {
        if config_json.is_null() || out_csv.is_null() || out_report.is_null() {
            return fail(GeocastStatus::NullPointer, "null argument");
        }
        *out_csv = ptr::null_mut();
        *out_report = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(config_json).to_str() else {
            return fail(GeocastStatus::InvalidArgument, "config is not UTF-8");
        };
        let resolved = match geocast::cli::resolve_json(text) {
            Ok(r) => r,
            Err(e) => return from_error(e),
        };
        let output = match harness::run_experiment(&resolved.config) {
            Ok(o) => o,
            Err(e) => return from_error(e),
        };
        let report = match harness::RunReport::new(&resolved.config, &output, None).to_json() {
            Ok(r) => r,
            Err(e) => return from_error(e),
        };
        *out_csv = into_c_string(harness::to_csv(&output.rows));
        *out_report = into_c_string(report);
        if output.passed() {
            GeocastStatus::Ok
        } else {
            fail(GeocastStatus::AssertionFailed, "embedded assertions failed")
        }
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn geocast_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
