use std::ffi::{CStr, CString};
use std::ptr;

use gkflow_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(gk_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn null_arguments_are_reported() {
    unsafe {
        assert_eq!(gk_state_from_recipe(ptr::null(), 8, 0.0, ptr::null_mut()), GkStatus::NullPointer);
        let mut st: *mut GkState = ptr::null_mut();
        assert_eq!(gk_state_from_recipe(ptr::null(), 8, 0.0, &mut st), GkStatus::NullPointer);
        assert!(last_error().contains("name"));
        let mut r = GkResiduals::default();
        assert_eq!(gk_state_residuals(ptr::null(), &mut r), GkStatus::NullPointer);
        gk_state_free(ptr::null_mut());
    }
}

#[test]
fn unknown_recipe_and_bad_resolution() {
    unsafe {
        let mut st: *mut GkState = ptr::null_mut();
        assert_eq!(gk_state_from_recipe(cstr("NOPE").as_ptr(), 8, 0.0, &mut st), GkStatus::UnknownName);
        assert!(st.is_null());
        assert!(last_error().contains("NOPE"));
        assert_eq!(
            gk_state_from_recipe(cstr("FLAT_KAHLER_TORUS").as_ptr(), 3, 0.0, &mut st),
            GkStatus::InvalidArgument
        );
        assert!(!last_error().is_empty());
    }
}

#[test]
fn flat_torus_round_trip_and_flow() {
    unsafe {
        let mut st: *mut GkState = ptr::null_mut();
        assert_eq!(gk_state_from_recipe(cstr("FLAT_KAHLER_TORUS").as_ptr(), 8, 0.0, &mut st), GkStatus::Ok);
        assert!(last_error().is_empty());
        let (mut dim, mut np) = (0usize, 0usize);
        assert_eq!(gk_state_shape(st, &mut dim, &mut np), GkStatus::Ok);
        assert_eq!((dim, np), (4, 64));

        let mut r = GkResiduals::default();
        assert_eq!(gk_state_residuals(st, &mut r), GkStatus::Ok);
        for v in [r.compat_plus, r.compat_minus, r.nijenhuis_plus, r.nijenhuis_minus, r.r1, r.r2, r.r3] {
            assert!(v < 1e-12, "{r:?}");
        }

        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("res.csv");
        let status = gk_state_flow(st, cstr("GK_COUPLED").as_ptr(), 0.01, 5, cstr(csv.to_str().unwrap()).as_ptr());
        assert_eq!(status, GkStatus::Ok, "{}", last_error());
        let text = std::fs::read_to_string(&csv).unwrap();
        assert!(text.lines().count() >= 6);

        assert_eq!(gk_state_flow(st, cstr("BFIELD").as_ptr(), 0.01, 5, ptr::null()), GkStatus::InvalidArgument);
        assert_eq!(gk_state_flow(st, cstr("GK_COUPLED").as_ptr(), -1.0, 5, ptr::null()), GkStatus::InvalidArgument);

        let saved = dir.path().join("state");
        assert_eq!(gk_state_save(st, cstr(saved.to_str().unwrap()).as_ptr()), GkStatus::Ok, "{}", last_error());
        let mut back: *mut GkState = ptr::null_mut();
        assert_eq!(gk_state_load(cstr(saved.to_str().unwrap()).as_ptr(), &mut back), GkStatus::Ok, "{}", last_error());
        let mut r2 = GkResiduals::default();
        gk_state_residuals(back, &mut r2);
        assert!(r2.r1 < 1e-12);

        gk_state_free(back);
        gk_state_free(st);
    }
}

#[test]
fn commuting_torus_is_gk() {
    unsafe {
        let mut st: *mut GkState = ptr::null_mut();
        assert_eq!(
            gk_state_from_recipe(cstr("COMMUTING_GK_TORUS").as_ptr(), 16, 0.05, &mut st),
            GkStatus::Ok,
            "{}",
            last_error()
        );
        let mut r = GkResiduals::default();
        assert_eq!(gk_state_residuals(st, &mut r), GkStatus::Ok);
        assert!(r.r1 < 1e-9 && r.r2 < 1e-9 && r.r3 < 1e-9, "{r:?}");
        gk_state_free(st);
    }
}

#[test]
fn missing_state_directory_is_io_error() {
    unsafe {
        let mut st: *mut GkState = ptr::null_mut();
        let s = gk_state_load(cstr("/nonexistent/gkflow/state").as_ptr(), &mut st);
        assert_eq!(s, GkStatus::Io, "{}", last_error());
        assert!(st.is_null());
    }
}

#[test]
fn scenario_runs_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.cfg");
    std::fs::write(
        &cfg,
        "name = ffi_flat\nrecipe = FLAT_KAHLER_TORUS\nresolution = 8,8,1,1\nsystem = GK_COUPLED\ndt = 0.01\nsteps = 3\nchecks = gk_residuals\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let mut code = -1;
    unsafe {
        let s = gk_run_scenario(cstr(cfg.to_str().unwrap()).as_ptr(), cstr(out.to_str().unwrap()).as_ptr(), &mut code);
        assert_eq!(s, GkStatus::Ok, "{}", last_error());
    }
    assert_eq!(code, 0);
    assert!(out.join("ffi_flat").join("residuals.csv").exists());

    std::fs::write(&cfg, "name = x\nbogus = 1\n").unwrap();
    unsafe {
        let s = gk_run_scenario(cstr(cfg.to_str().unwrap()).as_ptr(), cstr("unused").as_ptr(), ptr::null_mut());
        assert_eq!(s, GkStatus::Parse);
    }
    assert!(last_error().contains("bogus"));
}

#[test]
fn header_declares_every_entry_point() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/gkflow.h")).unwrap();
    for sym in [
        "gk_last_error",
        "gk_state_from_recipe",
        "gk_state_load",
        "gk_state_save",
        "gk_state_shape",
        "gk_state_residuals",
        "gk_state_flow",
        "gk_run_scenario",
        "gk_state_free",
        "typedef struct GkState GkState",
        "GK_STATUS_OK = 0",
        "GK_STATUS_PANIC",
    ] {
        assert!(h.contains(sym), "missing {sym}");
    }
}
