use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use gelfand_ffi::*;

fn domain(json: &str) -> *mut GelfandDomain {
    let text = CString::new(json).unwrap();
    let mut d = ptr::null_mut();
    let st = unsafe { gelfand_domain_from_json(text.as_ptr(), &mut d) };
    assert_eq!(st, GelfandStatus::Ok);
    assert!(!d.is_null());
    d
}

fn last_error() -> String {
    let p = gelfand_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn interval_round_trip() {
    let d = domain(r#"{"shape":"interval","a":-1,"b":1,"resolution":64}"#);
    let (mut dim, mut nodes, mut interior, mut h) = (0, 0, 0, 0.0);
    let st = unsafe { gelfand_domain_info(d, &mut dim, &mut nodes, &mut interior, &mut h) };
    assert_eq!(st, GelfandStatus::Ok);
    assert_eq!(dim, 1);
    assert!(interior > 100 && nodes > interior);
    assert!((h - 1.0 / 64.0).abs() < 1e-15);

    let mut l1 = 0.0;
    assert_eq!(unsafe { gelfand_lambda1(d, &mut l1) }, GelfandStatus::Ok);
    assert!((l1 - 1.0).abs() < 1e-12);

    let mut f = ptr::null_mut();
    let mut sum = GelfandSolveSummary {
        status: GelfandSolveStatus::MaxIter,
        outer_iters: 0,
        sup_norm: 0.0,
        residual_sup: 0.0,
    };
    let st = unsafe { gelfand_solve_limit(d, 0.2, ptr::null(), &mut f, &mut sum) };
    assert_eq!(st, GelfandStatus::Ok);
    assert_eq!(sum.status, GelfandSolveStatus::Converged);
    let n = unsafe { gelfand_field_len(f) };
    assert_eq!(n, nodes);
    let mut buf = vec![0.0; n];
    assert_eq!(unsafe { gelfand_field_copy(f, buf.as_mut_ptr(), n) }, GelfandStatus::Ok);
    let sup = buf.iter().cloned().fold(0.0, f64::max);
    assert!((sup - unsafe { gelfand_field_sup(f) }).abs() < 1e-15);
    assert!((sup - 0.259171).abs() < 0.01);

    let st = unsafe { gelfand_field_copy(f, buf.as_mut_ptr(), n - 1) };
    assert_eq!(st, GelfandStatus::InvalidArgument);
    assert!(last_error().contains("buffer"));

    unsafe {
        gelfand_field_free(f);
        gelfand_domain_free(d);
    }
}

#[test]
fn config_json_is_strict() {
    let d = domain(r#"{"shape":"interval","a":0,"b":1,"resolution":32}"#);
    let cfg = CString::new(r#"{"outer_tol":1e-8,"outer_tol_typo":1}"#).unwrap();
    let mut f = ptr::null_mut();
    let mut sum = GelfandSolveSummary {
        status: GelfandSolveStatus::MaxIter,
        outer_iters: 0,
        sup_norm: 0.0,
        residual_sup: 0.0,
    };
    let st = unsafe { gelfand_solve_limit(d, 0.2, cfg.as_ptr(), &mut f, &mut sum) };
    assert_eq!(st, GelfandStatus::Config);
    assert!(f.is_null());
    assert!(last_error().contains("outer_tol_typo"));
    unsafe { gelfand_domain_free(d) };
}

#[test]
fn errors_and_null_handles() {
    let bad = CString::new(r#"{"shape":"ball","center":[0,0],"radius":-1,"resolution":32}"#).unwrap();
    let mut d = ptr::null_mut();
    let st = unsafe { gelfand_domain_from_json(bad.as_ptr(), &mut d) };
    assert_ne!(st, GelfandStatus::Ok);
    assert!(d.is_null());

    let st = unsafe { gelfand_domain_from_json(ptr::null(), &mut d) };
    assert_eq!(st, GelfandStatus::NullPointer);

    let mut v = 0.0;
    assert_eq!(
        unsafe { gelfand_lambda1(ptr::null(), &mut v) },
        GelfandStatus::NullPointer
    );
    assert_eq!(unsafe { gelfand_field_len(ptr::null()) }, 0);
    unsafe {
        gelfand_domain_free(ptr::null_mut());
        gelfand_field_free(ptr::null_mut());
    }

    let st = unsafe { gelfand_domain_from_json(ptr::null(), ptr::null_mut()) };
    assert_eq!(st, GelfandStatus::NullPointer);
}

#[test]
fn cone_roots_counts() {
    let (mut n, mut a, mut b) = (9, 0.0, 0.0);
    assert_eq!(
        unsafe { gelfand_cone_roots(0.2, 1.0, &mut n, &mut a, &mut b) },
        GelfandStatus::Ok
    );
    assert_eq!(n, 2);
    assert!(a < 1.0 && b > 1.0);
    assert_eq!(
        unsafe { gelfand_cone_roots(0.5, 1.0, &mut n, &mut a, &mut b) },
        GelfandStatus::Ok
    );
    assert_eq!(n, 0);
    assert!(a.is_nan());
    assert_eq!(
        unsafe { gelfand_cone_roots(-1.0, 1.0, &mut n, &mut a, &mut b) },
        GelfandStatus::InvalidArgument
    );
}

#[test]
fn torsion_and_p_gelfand() {
    let d = domain(r#"{"shape":"interval","a":-1,"b":1,"resolution":64}"#);
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { gelfand_torsion(d, 4.0, &mut f) }, GelfandStatus::Ok);
    let sup = unsafe { gelfand_field_sup(f) };
    assert!((sup - 0.75).abs() < 0.02, "{sup}");
    unsafe { gelfand_field_free(f) };

    let mut sum = GelfandSolveSummary {
        status: GelfandSolveStatus::MaxIter,
        outer_iters: 0,
        sup_norm: 0.0,
        residual_sup: 0.0,
    };
    assert_eq!(
        unsafe { gelfand_solve_p(d, 2.0, 0.3, &mut f, &mut sum) },
        GelfandStatus::Ok
    );
    assert_eq!(sum.status, GelfandSolveStatus::Converged);
    unsafe {
        gelfand_field_free(f);
        gelfand_domain_free(d);
    }
}

#[test]
fn version_is_cargo_version() {
    let v = unsafe { CStr::from_ptr(gelfand_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let root = env!("CARGO_MANIFEST_DIR");
    let header = format!("{root}/include/gelfand.h");
    assert!(std::path::Path::new(&header).exists());
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler, skipping");
        return;
    };
    assert!(cc.status.success());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        r#"#include "gelfand.h"
int main(void) {
    GelfandDomain *d = 0;
    GelfandStatus st = gelfand_domain_from_json("{}", &d);
    GelfandSolveSummary s;
    (void)s;
    gelfand_domain_free(d);
    return st == GELFAND_STATUS_OK;
}
"#,
    )
    .unwrap();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(format!("{root}/include"))
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
