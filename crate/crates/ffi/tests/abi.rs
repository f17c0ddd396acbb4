use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use bae_ffi::*;

fn sim(text: &str) -> *mut BaeSimulator {
    let c = CString::new(text).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { bae_simulator_new(c.as_ptr(), &mut h) }, BaeStatus::Ok);
    assert!(!h.is_null());
    h
}

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe { bae_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn duan_through_handle() {
    let h = sim("");
    let mut r = BaeDuanResult::default();
    assert_eq!(unsafe { bae_duan(h, BaeDuanMethod::Direct, &mut r) }, BaeStatus::Ok);
    assert!(r.violated && r.duan_sum < 1.0);
    assert!((r.var_x_sigma + r.var_y_delta - r.duan_sum).abs() < 1e-15);
    unsafe { bae_simulator_free(h) };
}

#[test]
fn validation_error_is_reported() {
    let c = CString::new("G_plus=0.06\nG_minus=0.048").unwrap();
    let mut h = ptr::null_mut();
    let s = unsafe { bae_simulator_new(c.as_ptr(), &mut h) };
    assert_eq!(s, BaeStatus::ValidationError);
    assert!(h.is_null());
    assert!(last_error().contains("G_minus"), "{}", last_error());
}

#[test]
fn null_arguments_are_rejected() {
    let mut r = BaeDuanResult::default();
    assert_eq!(unsafe { bae_duan(ptr::null(), BaeDuanMethod::Direct, &mut r) }, BaeStatus::NullPointer);
    let h = sim("");
    assert_eq!(unsafe { bae_duan(h, BaeDuanMethod::Direct, ptr::null_mut()) }, BaeStatus::NullPointer);
    let w = [0.0];
    assert_eq!(
        unsafe { bae_quadrature_spectrum(h, BaeQuadrature::XSigma, w.as_ptr(), 1, ptr::null_mut()) },
        BaeStatus::NullPointer
    );
    unsafe { bae_simulator_free(h) };
    unsafe { bae_simulator_free(ptr::null_mut()) };
}

#[test]
fn spectra_and_fingerprint() {
    let h = sim("delta=0.1");
    let w = [-0.01, 0.0, 0.01];
    let mut v = [0.0; 3];
    assert_eq!(
        unsafe { bae_quadrature_spectrum(h, BaeQuadrature::YDelta, w.as_ptr(), 3, v.as_mut_ptr()) },
        BaeStatus::Ok
    );
    assert!(v.iter().all(|x| *x > 0.0) && (v[0] - v[2]).abs() < 1e-10 * v[0]);
    assert_eq!(unsafe { bae_output_spectrum(h, w.as_ptr(), 3, v.as_mut_ptr()) }, BaeStatus::Ok);
    assert!(v.iter().all(|x| *x >= 0.5));

    let mut fp = [0 as c_char; 65];
    assert_eq!(unsafe { bae_fingerprint(h, fp.as_mut_ptr(), 10) }, BaeStatus::BufferTooSmall);
    assert_eq!(unsafe { bae_fingerprint(h, fp.as_mut_ptr(), fp.len()) }, BaeStatus::Ok);
    let fp = unsafe { CStr::from_ptr(fp.as_ptr()) }.to_str().unwrap().to_string();
    assert_eq!(fp, bae_core::config::parse_config("delta=0.1").unwrap().fingerprint());
    unsafe { bae_simulator_free(h) };
}

#[test]
fn non_bae_phases() {
    let h = sim("phi_q=0.7853981633974483");
    let mut v = BaeVerdict::default();
    assert_eq!(unsafe { bae_verify(h, &mut v) }, BaeStatus::Ok);
    assert!(!v.pass && !v.phase_ok && v.max_zero_residual > 1.0);
    let w = [0.0];
    let mut out = [0.0];
    assert_eq!(unsafe { bae_output_spectrum(h, w.as_ptr(), 1, out.as_mut_ptr()) }, BaeStatus::PhaseConditionViolated);
    unsafe { bae_simulator_free(h) };

    let h = sim("");
    assert_eq!(unsafe { bae_verify(h, &mut v) }, BaeStatus::Ok);
    assert!(v.pass && v.max_zero_residual < 1e-12 && v.min_exposed_norm > 1e-6);
    unsafe { bae_simulator_free(h) };
}

#[test]
fn header_compiles_as_c() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/bae_ffi.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["bae_simulator_new", "bae_duan", "bae_verify", "bae_last_error", "BAE_STATUS_VALIDATION_ERROR"] {
        assert!(text.contains(f), "header lacks {f}");
    }
    let Ok(status) =
        Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"]).arg(&header).status()
    else {
        eprintln!("no C compiler; syntax check skipped");
        return;
    };
    assert!(status.success());
}
