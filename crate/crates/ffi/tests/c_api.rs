use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use interlock_ffi::*;

fn last_error() -> String {
    let p = interlock_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = CStr::from_ptr(p).to_string_lossy().into_owned();
    interlock_string_free(p);
    s
}

#[test]
fn angles_through_handles() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(interlock_config_default(&mut cfg), InterlockStatus::Ok);
        let mut a = 0.0;
        assert_eq!(
            interlock_alpha_deg(cfg, InterlockSide::Left, &mut a),
            InterlockStatus::Ok
        );
        assert!((a + 21.0).abs() < 0.5, "{a}");
        let mut b = 0.0;
        assert_eq!(
            interlock_beta_deg(cfg, InterlockSide::Left, &mut b),
            InterlockStatus::Ok
        );
        assert!(b < 0.0);
        let mut c = 0.0;
        assert_eq!(
            interlock_cycle_turn_deg(cfg, InterlockSide::Left, &mut c),
            InterlockStatus::Ok
        );
        assert!((c - (a.abs() + b.abs())).abs() < 1e-9);
        assert_eq!(
            interlock_alpha_deg(cfg, InterlockSide::Left, ptr::null_mut()),
            InterlockStatus::NullPointer
        );
        interlock_config_free(cfg);
    }
}

#[test]
fn run_and_inspect() {
    unsafe {
        let json = CString::new(r#"{"dt":0.1,"rng_seed":3}"#).unwrap();
        let mut cfg = ptr::null_mut();
        assert_eq!(
            interlock_config_from_json(json.as_ptr(), &mut cfg),
            InterlockStatus::Ok
        );
        let program = CString::new(
            r#"{"program":[{"primitive":"straight","cycles":2}],"tool_engaged":true}"#,
        )
        .unwrap();
        let mut run = ptr::null_mut();
        assert_eq!(
            interlock_run_program(cfg, program.as_ptr(), &mut run),
            InterlockStatus::Ok
        );
        let n = interlock_run_sample_count(run);
        assert!(n > 100);
        let (mut t, mut x, mut y, mut h) = (0.0, 0.0, 0.0, 0.0);
        assert_eq!(
            interlock_run_sample(run, n - 1, &mut t, &mut x, &mut y, &mut h),
            InterlockStatus::Ok
        );
        assert!((y - 2.0 * 1.12 * (1.0 - 0.107)).abs() < 1e-6, "{y}");
        assert_eq!(
            interlock_run_sample(run, n, &mut t, &mut x, &mut y, &mut h),
            InterlockStatus::IndexOutOfRange
        );
        let mut out = ptr::null_mut();
        assert_eq!(
            interlock_run_summary_json(run, &mut out),
            InterlockStatus::Ok
        );
        let summary: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
        assert_eq!(summary["seed"], 3);
        assert_eq!(summary["cycles"], 2);

        let dir = std::env::temp_dir().join(format!("interlock-ffi-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = CString::new(dir.join("t.csv").to_str().unwrap()).unwrap();
        assert_eq!(
            interlock_run_write_telemetry_csv(run, path.as_ptr()),
            InterlockStatus::Ok
        );
        let text = std::fs::read_to_string(dir.join("t.csv")).unwrap();
        assert_eq!(text.lines().count(), n + 1);
        std::fs::remove_dir_all(&dir).unwrap();

        interlock_run_free(run);
        interlock_config_free(cfg);
    }
}

#[test]
fn errors_carry_messages() {
    unsafe {
        let mut cfg = ptr::null_mut();
        let bad = CString::new(r#"{"dt":-1}"#).unwrap();
        assert_eq!(
            interlock_config_from_json(bad.as_ptr(), &mut cfg),
            InterlockStatus::InvalidInput
        );
        assert!(last_error().contains("dt"));
        assert!(cfg.is_null());

        assert_eq!(interlock_config_default(&mut cfg), InterlockStatus::Ok);
        let program = CString::new(r#"{"program":[],"tool_engaged":false}"#).unwrap();
        let mut run = ptr::null_mut();
        assert_eq!(
            interlock_run_program(cfg, program.as_ptr(), &mut run),
            InterlockStatus::InvalidInput
        );
        assert_eq!(
            interlock_run_program(ptr::null(), program.as_ptr(), &mut run),
            InterlockStatus::NullPointer
        );
        interlock_config_free(cfg);
        interlock_config_free(ptr::null_mut());
        interlock_run_free(ptr::null_mut());
        interlock_string_free(ptr::null_mut());
    }
}

#[test]
fn plan_headland() {
    unsafe {
        let goal = CString::new(r#"{"goal":"headland_turn","direction":"left"}"#).unwrap();
        let cal = CString::new(r#"{"advance_per_cycle":1.0,"turn_per_cycle_deg":60.0}"#).unwrap();
        let mut out = ptr::null_mut();
        assert_eq!(
            interlock_plan_json(goal.as_ptr(), cal.as_ptr(), &mut out),
            InterlockStatus::Ok
        );
        let v: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
        assert_eq!(v["program"]["program"][0]["cycles"], 3);
        assert_eq!(v["prediction"]["net_turn_deg"], 180.0);
        let bad = CString::new(r#"{"goal":"turn","angle":400,"direction":"left"}"#).unwrap();
        assert_eq!(
            interlock_plan_json(bad.as_ptr(), ptr::null(), &mut out),
            InterlockStatus::InvalidInput
        );
    }
}

fn target_dir() -> PathBuf {
    // tests/<name>-<hash> lives in <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest.join("include");
    assert!(header_dir.join("interlock_ffi.h").exists());
    let src = r#"
#include <stdio.h>
#include "interlock_ffi.h"
int main(void) {
    InterlockConfig *cfg = NULL;
    if (interlock_config_default(&cfg) != INTERLOCK_STATUS_OK) return 1;
    double a = 0.0;
    if (interlock_alpha_deg(cfg, INTERLOCK_SIDE_RIGHT, &a) != INTERLOCK_STATUS_OK) return 2;
    if (interlock_config_from_json("{", &cfg) != INTERLOCK_STATUS_INVALID_INPUT) return 3;
    if (interlock_last_error_message() == NULL) return 4;
    interlock_config_free(cfg);
    printf("%.3f\n", a);
    return 0;
}
"#;
    let tmp = std::env::temp_dir().join(format!("interlock-c-{}", std::process::id()));
    std::fs::create_dir_all(&tmp).unwrap();
    std::fs::write(tmp.join("main.c"), src).unwrap();
    let lib = target_dir().join("libinterlock_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let status = Command::new("cc")
        .arg(tmp.join("main.c"))
        .arg("-I")
        .arg(&header_dir)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(tmp.join("main"))
        .status()
        .expect("run cc");
    assert!(status.success());
    let out = Command::new(tmp.join("main")).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    let a: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((a - 21.0).abs() < 0.5, "{a}");
    std::fs::remove_dir_all(&tmp).unwrap();
}
