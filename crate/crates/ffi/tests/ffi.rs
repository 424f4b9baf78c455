use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use aggsim_ffi::*;

fn take_string(s: *mut std::ffi::c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { aggsim_string_free(s) };
    out
}

fn last_error() -> String {
    let p = aggsim_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn small_params() -> *mut AggsimParams {
    // q = 11, p = 23
    let text = CString::new("q=b p=17 h=5 g1=2 g2=5 M=16").unwrap();
    let mut params = ptr::null_mut();
    assert_eq!(unsafe { aggsim_params_from_text(text.as_ptr(), &mut params) }, AggsimStatus::Ok);
    params
}

#[test]
fn params_round_trip_and_validate() {
    let mut params = ptr::null_mut();
    assert_eq!(unsafe { aggsim_params_generate(32, 7, &mut params) }, AggsimStatus::Ok);
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { aggsim_params_to_text(params, &mut text) }, AggsimStatus::Ok);
    let text = take_string(text);
    assert!(text.starts_with("q="));

    let c = CString::new(text.clone()).unwrap();
    let mut again = ptr::null_mut();
    assert_eq!(unsafe { aggsim_params_from_text(c.as_ptr(), &mut again) }, AggsimStatus::Ok);
    let mut valid = false;
    assert_eq!(unsafe { aggsim_params_validate(again, &mut valid) }, AggsimStatus::Ok);
    assert!(valid);
    unsafe {
        aggsim_params_free(params);
        aggsim_params_free(again);
    }
}

#[test]
fn invalid_params_are_reported() {
    let text = CString::new("q=b p=17 h=5 g1=1 g2=5 M=16").unwrap();
    let mut params = ptr::null_mut();
    assert_eq!(unsafe { aggsim_params_from_text(text.as_ptr(), &mut params) }, AggsimStatus::Ok);
    let mut valid = true;
    assert_eq!(unsafe { aggsim_params_validate(params, &mut valid) }, AggsimStatus::Ok);
    assert!(!valid);
    assert!(last_error().contains("g1"));

    let mut sim = ptr::null_mut();
    let status = unsafe { aggsim_simulation_new(params, AggsimModel::Peers, 3, 1, &mut sim) };
    assert_eq!(status, AggsimStatus::InvalidParams);
    assert!(sim.is_null());
    unsafe { aggsim_params_free(params) };

    let junk = CString::new("q=B p=17").unwrap();
    let mut params = ptr::null_mut();
    assert_eq!(unsafe { aggsim_params_from_text(junk.as_ptr(), &mut params) }, AggsimStatus::ParseError);
    assert!(params.is_null());
}

#[test]
fn sessions_through_the_abi() {
    let params = small_params();
    for model in [AggsimModel::Aggregator, AggsimModel::Peers] {
        let mut sim = ptr::null_mut();
        assert_eq!(unsafe { aggsim_simulation_new(params, model, 3, 9, &mut sim) }, AggsimStatus::Ok);
        let mut out = ptr::null_mut();
        let x = [2u64, 3, 4];
        assert_eq!(unsafe { aggsim_simulation_run_product(sim, x.as_ptr(), 3, &mut out) }, AggsimStatus::Ok);
        assert_eq!(take_string(out), "1");
        let x = [3u64, 5, 7];
        assert_eq!(unsafe { aggsim_simulation_run_sum(sim, x.as_ptr(), 3, &mut out) }, AggsimStatus::Ok);
        assert_eq!(take_string(out), "15");
        assert_eq!(unsafe { aggsim_simulation_transcript(sim, &mut out) }, AggsimStatus::Ok);
        let dump = take_string(out);
        assert!(dump.lines().all(|l| l.starts_with("ts=")));
        assert!(dump.lines().count() > 10);

        let bad = [2u64, 0, 4];
        let status = unsafe { aggsim_simulation_run_product(sim, bad.as_ptr(), 3, &mut out) };
        assert_eq!(status, AggsimStatus::ProtocolError);
        assert!(last_error().contains("party 2"));
        unsafe { aggsim_simulation_free(sim) };
    }
    unsafe { aggsim_params_free(params) };
}

#[test]
fn evaluate_and_refusals() {
    let params = small_params();
    let spec = CString::new("3 2\n3 2\n1 0\n1 0\n0 2\n").unwrap();
    let x = [2u64, 3, 4];
    let mut out = ptr::null_mut();
    let status = unsafe {
        aggsim_evaluate(params, spec.as_ptr(), x.as_ptr(), 3, AggsimModel::Peers, AggsimScheme::Basic, 1, &mut out)
    };
    assert_eq!(status, AggsimStatus::Insecure);
    assert!(last_error().contains("term 2"));

    let spec = CString::new("3 3\n3 2 1\n1 0 0\n1 0 1\n0 2 0\n").unwrap();
    let status = unsafe {
        aggsim_evaluate(params, spec.as_ptr(), x.as_ptr(), 3, AggsimModel::Peers, AggsimScheme::Advanced, 1, &mut out)
    };
    assert_eq!(status, AggsimStatus::Ok);
    // 3*6 + 2*16 + 3 = 53 = 7 mod 23
    assert_eq!(take_string(out), "7");
    unsafe { aggsim_params_free(params) };
}

#[test]
fn null_pointers_are_rejected() {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { aggsim_params_to_text(ptr::null(), &mut out) }, AggsimStatus::NullPointer);
    assert!(last_error().contains("params"));
    assert_eq!(unsafe { aggsim_params_generate(16, 1, ptr::null_mut()) }, AggsimStatus::NullPointer);
    assert_eq!(unsafe { aggsim_params_from_text(ptr::null(), &mut ptr::null_mut()) }, AggsimStatus::NullPointer);
    let params = small_params();
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { aggsim_simulation_new(params, AggsimModel::Peers, 3, 1, &mut sim) }, AggsimStatus::Ok);
    assert_eq!(unsafe { aggsim_simulation_run_sum(sim, ptr::null(), 3, &mut out) }, AggsimStatus::NullPointer);
    assert_eq!(
        unsafe { aggsim_simulation_new(params, AggsimModel::Peers, 2, 1, &mut ptr::null_mut()) },
        AggsimStatus::InvalidArgument
    );
    unsafe {
        aggsim_simulation_free(sim);
        aggsim_params_free(params);
        aggsim_simulation_free(ptr::null_mut());
        aggsim_params_free(ptr::null_mut());
        aggsim_string_free(ptr::null_mut());
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "aggsim.h"

int main(void) {
    AggsimParams *params = NULL;
    if (aggsim_params_from_text("q=b p=17 h=5 g1=2 g2=5 M=16", &params) != AGGSIM_STATUS_OK) return 1;
    AggsimSimulation *sim = NULL;
    if (aggsim_simulation_new(params, AGGSIM_MODEL_AGGREGATOR, 3, 7, &sim) != AGGSIM_STATUS_OK) return 2;
    const uint64_t x[3] = {3, 5, 7};
    char *result = NULL;
    if (aggsim_simulation_run_sum(sim, x, 3, &result) != AGGSIM_STATUS_OK) return 3;
    int ok = strcmp(result, "15") == 0;
    printf("%s\n", result);
    aggsim_string_free(result);
    aggsim_simulation_free(sim);
    aggsim_params_free(params);
    return ok ? 0 : 4;
}
"#;

fn cc() -> Option<&'static str> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
}

fn include_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

#[test]
fn header_compiles_as_c() {
    let Some(cc) = cc() else {
        eprintln!("no C compiler found; skipping header check");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let out = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(include_dir())
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn c_program_links_against_the_static_library() {
    let Some(cc) = cc() else {
        eprintln!("no C compiler found; skipping link check");
        return;
    };
    // target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(Path::parent).unwrap();
    let lib = profile_dir.join("libaggsim_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping link check", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let out = Command::new(cc)
        .args(["-std=c99", "-I"])
        .arg(include_dir())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "15");
}
