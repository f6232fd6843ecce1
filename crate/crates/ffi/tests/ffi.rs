use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use geocast_ffi::*;

fn last_error() -> String {
    let p = geocast_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn overlay(cfg: &GeocastOverlayConfig) -> *mut GeocastOverlay {
    let mut o = ptr::null_mut();
    assert_eq!(unsafe { geocast_overlay_new(cfg, &mut o) }, GeocastStatus::Ok);
    assert!(!o.is_null());
    o
}

#[test]
fn overlay_tree_and_metrics() {
    let cfg = GeocastOverlayConfig { n: 150, d: 2, seed: 3, ..geocast_overlay_config_default() };
    let o = overlay(&cfg);
    unsafe {
        assert_eq!(geocast_overlay_len(o), 150);
        let mut m = GeocastTopologyMetrics::default();
        assert_eq!(geocast_overlay_metrics(o, &mut m), GeocastStatus::Ok);
        assert!(m.avg_degree > 0.0 && m.max_degree >= 1);

        let mut len = 0usize;
        assert_eq!(geocast_overlay_neighbors(o, 5, ptr::null_mut(), 0, &mut len), GeocastStatus::BufferTooSmall);
        let mut buf = vec![0u32; len];
        assert_eq!(geocast_overlay_neighbors(o, 5, buf.as_mut_ptr(), buf.len(), &mut len), GeocastStatus::Ok);
        assert!(buf.windows(2).all(|w| w[0] < w[1]));

        let mut coord = [0f64; 2];
        assert_eq!(geocast_overlay_coord(o, 5, coord.as_mut_ptr(), 2, &mut len), GeocastStatus::Ok);
        assert_eq!(len, 2);

        let mut t = ptr::null_mut();
        assert_eq!(geocast_tree_build(o, 10, &mut t), GeocastStatus::Ok);
        let mut tm = GeocastTreeMetrics::default();
        assert_eq!(geocast_tree_metrics(t, &mut tm), GeocastStatus::Ok);
        assert_eq!((tm.messages_sent, tm.duplicates, tm.unreached), (149, 0, 0));
        assert!(tm.children_max <= 4);

        let (mut parent, mut has) = (0u32, true);
        assert_eq!(geocast_tree_parent(t, 10, &mut parent, &mut has), GeocastStatus::Ok);
        assert!(!has);
        assert_eq!(geocast_tree_parent(t, buf[0], &mut parent, &mut has), GeocastStatus::Ok);
        assert!(has);

        geocast_tree_free(t);
        geocast_overlay_free(o);
    }
}

#[test]
fn stability_summary() {
    let cfg = GeocastOverlayConfig {
        n: 200,
        d: 3,
        k: 2,
        seed: 8,
        strategy: GEOCAST_STRATEGY_ORTHO_HP,
        with_lifetimes: true,
        ..geocast_overlay_config_default()
    };
    let o = overlay(&cfg);
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(geocast_stability_build(o, &mut s), GeocastStatus::Ok);
        let mut sum = GeocastStabilitySummary::default();
        assert_eq!(geocast_stability_summary(s, &mut sum), GeocastStatus::Ok);
        assert!(sum.is_single_tree && sum.monotone);
        assert_eq!((sum.root_candidates, sum.components, sum.largest_component, sum.disconnections), (1, 1, 200, 0));
        geocast_stability_free(s);

        let plain = overlay(&GeocastOverlayConfig { n: 5, ..geocast_overlay_config_default() });
        assert_eq!(geocast_stability_build(plain, &mut s), GeocastStatus::InvalidArgument);
        assert!(s.is_null());
        assert!(last_error().contains("lifetime"));
        geocast_overlay_free(plain);
        geocast_overlay_free(o);
    }
}

#[test]
fn errors_are_reported_with_messages() {
    unsafe {
        let mut o = ptr::null_mut();
        assert_eq!(geocast_overlay_new(ptr::null(), &mut o), GeocastStatus::NullPointer);
        let bad = GeocastOverlayConfig { strategy: 99, ..geocast_overlay_config_default() };
        assert_eq!(geocast_overlay_new(&bad, &mut o), GeocastStatus::InvalidArgument);
        assert!(last_error().contains("strategy"));
        let bad = GeocastOverlayConfig { br: 1, ..geocast_overlay_config_default() };
        assert_eq!(geocast_overlay_new(&bad, &mut o), GeocastStatus::InvalidArgument);
        let stuck = GeocastOverlayConfig { n: 40, max_rounds: 1, ..geocast_overlay_config_default() };
        assert_eq!(geocast_overlay_new(&stuck, &mut o), GeocastStatus::NonConvergence);
        assert!(o.is_null());

        let good = overlay(&geocast_overlay_config_default());
        let mut t = ptr::null_mut();
        assert_eq!(geocast_tree_build(good, 100_000, &mut t), GeocastStatus::UnknownPeer);
        let mut len = 0;
        assert_eq!(geocast_overlay_neighbors(good, 100_000, ptr::null_mut(), 0, &mut len), GeocastStatus::UnknownPeer);
        geocast_overlay_free(good);
        geocast_overlay_free(ptr::null_mut());
        geocast_tree_free(ptr::null_mut());
        geocast_string_free(ptr::null_mut());
    }
}

#[test]
fn experiment_through_json() {
    let cfg = CString::new(r#"{"id": "multicast", "n": 40, "d": 3, "seed": 5}"#).unwrap();
    let (mut csv, mut report) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(geocast_run_experiment(cfg.as_ptr(), &mut csv, &mut report), GeocastStatus::Ok);
        let text = CStr::from_ptr(csv).to_str().unwrap().to_owned();
        let rep = CStr::from_ptr(report).to_str().unwrap().to_owned();
        assert!(text.contains(",messages_sent,39\n"));
        assert!(rep.contains("\"passed\": true"));
        geocast_string_free(csv);
        geocast_string_free(report);

        let bad = CString::new(r#"{"id": "multicast", "bogus": 1}"#).unwrap();
        assert_eq!(geocast_run_experiment(bad.as_ptr(), &mut csv, &mut report), GeocastStatus::InvalidArgument);
        assert!(csv.is_null() && report.is_null());
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/geocast.h")).unwrap();
    for name in [
        "geocast_overlay_new",
        "geocast_overlay_free",
        "geocast_tree_build",
        "geocast_tree_metrics",
        "geocast_stability_summary",
        "geocast_run_experiment",
        "geocast_string_free",
        "geocast_last_error",
        "typedef struct GeocastOverlay GeocastOverlay",
        "GEOCAST_STATUS_NON_CONVERGENCE",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

/// Compiles and runs a C program against the generated header and the static library.
#[test]
fn c_program_links_and_runs() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    // target/<profile>/deps/<test> -> target/<profile>
    let profile_dir = exe.parent().and_then(|p| p.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libgeocast_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let out_dir = tempfile::tempdir().unwrap();
    let bin = out_dir.path().join("smoke");
    let status = Command::new(&cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc.to_string());
        }
    }
    Err(())
}
