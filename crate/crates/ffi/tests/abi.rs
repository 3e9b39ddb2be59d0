use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use regime_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = CStr::from_ptr(p).to_str().unwrap().to_string();
    regime_string_free(p);
    s
}

fn last_error() -> String {
    let p = regime_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn fixture_model(name: &str) -> *mut RegimeModel {
    let mut m = ptr::null_mut();
    let status = unsafe { regime_model_fixture(c(name).as_ptr(), &mut m) };
    assert_eq!(status, RegimeStatus::Ok);
    m
}

#[test]
fn parse_round_trip_and_free() {
    let m = fixture_model("appb");
    unsafe {
        let mut src = ptr::null_mut();
        assert_eq!(regime_model_to_source(m, &mut src), RegimeStatus::Ok);
        let text = take(src);
        let mut again = ptr::null_mut();
        assert_eq!(regime_model_parse(c(&text).as_ptr(), &mut again), RegimeStatus::Ok);
        let mut src2 = ptr::null_mut();
        assert_eq!(regime_model_to_source(again, &mut src2), RegimeStatus::Ok);
        assert_eq!(take(src2), text);
        regime_model_free(again);
        regime_model_free(m);
        regime_model_free(ptr::null_mut());
        regime_string_free(ptr::null_mut());
    }
}

#[test]
fn parse_error_sets_message() {
    let mut m = ptr::null_mut();
    let status = unsafe { regime_model_parse(c("bogus\n").as_ptr(), &mut m) };
    assert_eq!(status, RegimeStatus::InputError);
    assert!(m.is_null());
    assert!(last_error().starts_with("1:1:"), "{}", last_error());
}

#[test]
fn null_arguments() {
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { regime_model_parse(ptr::null(), &mut m) },
        RegimeStatus::NullArgument
    );
    assert!(last_error().contains("source"));
    let mut holds = false;
    let status = unsafe { regime_check(ptr::null(), ptr::null(), ptr::null(), &mut holds, ptr::null_mut()) };
    assert_eq!(status, RegimeStatus::NullArgument);
    let bad = [0xffu8, 0];
    let status = unsafe { regime_model_parse(bad.as_ptr().cast(), &mut m) };
    assert_eq!(status, RegimeStatus::InvalidUtf8);
}

#[test]
fn checks_and_reports() {
    let m = fixture_model("discretesi");
    unsafe {
        let mut holds = true;
        let mut json = ptr::null_mut();
        let status = regime_check(m, c("s").as_ptr(), ptr::null(), &mut holds, &mut json);
        assert_eq!(status, RegimeStatus::Ok);
        assert!(!holds);
        let report: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
        assert_eq!(report["internal_error"], false);
        let mut holds = false;
        let status = regime_check(
            m,
            ptr::null(),
            c("extended-stability").as_ptr(),
            &mut holds,
            ptr::null_mut(),
        );
        assert_eq!(status, RegimeStatus::Ok);
        assert!(holds);
        let status = regime_check(m, c("o").as_ptr(), ptr::null(), &mut holds, ptr::null_mut());
        assert_eq!(status, RegimeStatus::InputError);
        regime_model_free(m);
    }
}

#[test]
fn consequences_and_statuses() {
    let m = fixture_model("appb");
    let loss = c("0=0, 1=1, 2=2");
    unsafe {
        let mut v = ptr::null_mut();
        assert_eq!(
            regime_consequence(m, c("s").as_ptr(), loss.as_ptr(), RegimeMethod::Recursion, &mut v),
            RegimeStatus::Ok
        );
        assert_eq!(take(v), "3/2");
        assert_eq!(
            regime_consequence(m, c("s").as_ptr(), loss.as_ptr(), RegimeMethod::BruteForce, &mut v),
            RegimeStatus::Ok
        );
        assert_eq!(take(v), "3/2");
        v = ptr::null_mut();
        assert_eq!(
            regime_consequence(m, c("s").as_ptr(), loss.as_ptr(), RegimeMethod::Transfer, &mut v),
            RegimeStatus::Refused
        );
        assert!(v.is_null());
        assert!(last_error().contains("positivity"));
        let status = regime_consequence(m, c("s").as_ptr(), loss.as_ptr(), RegimeMethod::TransferForced, &mut v);
        assert_eq!(status, RegimeStatus::Undefined);
        assert!(last_error().contains("L1=0, A=1"), "{}", last_error());
        regime_model_free(m);
    }
}

#[test]
fn optimize_and_dsep() {
    let m = fixture_model("xor");
    unsafe {
        let mut json = ptr::null_mut();
        assert_eq!(
            regime_optimize(m, c("0=0,1=1").as_ptr(), RegimeOptMode::Transfer, &mut json),
            RegimeStatus::Ok
        );
        let report: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
        assert_eq!(report["best"]["id"], "A1=[0,1]");
        regime_model_free(m);

        let mut d = ptr::null_mut();
        let src = c("nodes: sigma A U Y\nsigma -> A\nU -> A, U -> Y\nA -> Y\n");
        assert_eq!(
            regime_diagram_parse(src.as_ptr(), &mut d),
            RegimeStatus::Ok,
            "{}",
            last_error()
        );
        let mut sep = true;
        let mut path = ptr::null_mut();
        assert_eq!(
            regime_dsep(d, c("Y _||_ sigma | A").as_ptr(), &mut sep, &mut path),
            RegimeStatus::Ok
        );
        assert!(!sep);
        assert_eq!(take(path), "Y <- U -> A <- sigma");
        regime_diagram_free(d);
    }
}

#[test]
fn fixture_verification_and_cli() {
    unsafe {
        let mut passed = false;
        assert_eq!(
            regime_fixture_verify(c("discretesi").as_ptr(), &mut passed, ptr::null_mut()),
            RegimeStatus::Ok
        );
        assert!(passed);
        assert_eq!(
            regime_fixture_verify(c("nope").as_ptr(), &mut passed, ptr::null_mut()),
            RegimeStatus::InputError
        );

        let args = [c("regime"), c("dsep"), c("fixture:fig5"), c("Y _||_ sigma | A")];
        let argv: Vec<*const c_char> = args.iter().map(|a| a.as_ptr()).collect();
        let (mut out, mut err) = (ptr::null_mut(), ptr::null_mut());
        let code = regime_cli_run(argv.len(), argv.as_ptr(), &mut out, &mut err);
        assert_eq!(code, 1);
        assert!(take(out).contains("active path: Y <- U -> A <- sigma"));
        assert_eq!(take(err), "");
        assert_eq!(
            CStr::from_ptr(regime_version()).to_str().unwrap(),
            env!("CARGO_PKG_VERSION")
        );
    }
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "regime.h"

int main(void) {
    RegimeModel *m = NULL;
    if (regime_model_fixture("appb", &m) != REGIME_STATUS_OK) return 10;
    char *v = NULL;
    RegimeStatus st = regime_consequence(m, "s", "0=0, 1=1, 2=2", REGIME_METHOD_RECURSION, &v);
    if (st != REGIME_STATUS_OK || strcmp(v, "3/2") != 0) return 11;
    regime_string_free(v);
    st = regime_consequence(m, "s", "0=0, 1=1, 2=2", REGIME_METHOD_TRANSFER, &v);
    if (st != REGIME_STATUS_REFUSED || regime_last_error() == NULL) return 12;
    regime_model_free(m);
    printf("ok\n");
    return 0;
}
"#;

#[test]
fn header_compiles_and_links_from_c() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(include.join("regime.h").exists());
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let tmp = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let src = tmp.join("abi_smoke.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let syntax = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status()
        .unwrap();
    assert!(syntax.success(), "header does not compile as C99");
    let lib = target_dir().join("libregime_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping link step", lib.display());
        return;
    }
    let exe = tmp.join("abi_smoke");
    let link = Command::new(&cc)
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(link.success(), "linking against the static library failed");
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "ok\n");
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc)
            .arg("--version")
            .output()
            .is_ok_and(|o| o.status.success())
        {
            return Ok(cc.to_string());
        }
    }
    Err(())
}
