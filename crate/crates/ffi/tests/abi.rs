use std::ffi::{c_char, c_int, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use wellposed_ffi::*;

fn last_error() -> String {
    let p = wp_last_error();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn scalar(a: f64, b: f64, c: f64, d: f64) -> *mut WpRealization {
    let mut out = ptr::null_mut();
    let st = unsafe { wp_realization_new(1, 1, 1, &a, &b, &c, &d, &mut out) };
    assert_eq!(st, WpStatus::Ok);
    out
}

#[test]
fn scalar_transfer_and_closed_loop() {
    let r = scalar(-1.0, 1.0, 1.0, 0.5);
    let (mut re, mut im) = (0.0, 0.0);
    assert_eq!(unsafe { wp_transfer(r, 1.0, 0.0, &mut re, &mut im) }, WpStatus::Ok);
    assert!((re - 1.0).abs() < 1e-14 && im.abs() < 1e-14);

    // u = 0.5 y + v: A_cl = -1 + 0.5/(1 - 0.25) = -1/3.
    let mut cl = ptr::null_mut();
    assert_eq!(unsafe { wp_closed_loop(r, &0.5, &mut cl) }, WpStatus::Ok);
    let mut js: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { wp_realization_to_json(cl, &mut js) }, WpStatus::Ok);
    let text = unsafe { CStr::from_ptr(js) }.to_str().unwrap().to_owned();
    unsafe { wp_string_free(js) };
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let a = doc["A"][0][0][0].as_f64().unwrap();
    assert!((a + 1.0 / 3.0).abs() < 1e-14, "{a}");

    let cstr = CString::new(text).unwrap();
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { wp_realization_from_json(cstr.as_ptr(), &mut back) }, WpStatus::Ok);
    let (mut n, mut m, mut p) = (0, 0, 0);
    assert_eq!(unsafe { wp_realization_dims(back, &mut n, &mut m, &mut p) }, WpStatus::Ok);
    assert_eq!((n, m, p), (1, 1, 1));
    unsafe {
        wp_realization_free(back);
        wp_realization_free(cl);
        wp_realization_free(r);
    }
}

#[test]
fn errors_carry_status_and_message() {
    let mut out = ptr::null_mut();
    let st = unsafe { wp_realization_new(2, 1, 1, ptr::null(), ptr::null(), ptr::null(), ptr::null(), &mut out) };
    assert_eq!(st, WpStatus::NullPointer);
    assert!(last_error().contains("A"));
    assert!(out.is_null());

    let r = scalar(-1.0, 1.0, 1.0, 0.0);
    let (mut re, mut im) = (0.0, 0.0);
    assert_eq!(unsafe { wp_transfer(r, -1.0, 0.0, &mut re, &mut im) }, WpStatus::Singular);
    assert!(last_error().contains("spectrum"));

    // A successful call clears the slot.
    assert_eq!(unsafe { wp_transfer(r, 2.0, 0.0, &mut re, &mut im) }, WpStatus::Ok);
    assert!(wp_last_error().is_null());

    let bad = CString::new("{not json").unwrap();
    assert_eq!(unsafe { wp_realization_from_json(bad.as_ptr(), &mut out) }, WpStatus::Parse);
    assert_eq!(unsafe { wp_realization_dims(ptr::null(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut()) }, WpStatus::NullPointer);
    unsafe {
        wp_realization_free(r);
        wp_realization_free(ptr::null_mut());
        wp_string_free(ptr::null_mut());
    }
}

#[test]
fn gramian_and_bounds() {
    let r = scalar(-1.0, 1.0, 1.0, 0.0);
    let (mut s, mut exact): (f64, c_int) = (0.0, 0);
    assert_eq!(unsafe { wp_controllability(r, 1.0, 50, &mut s, &mut exact) }, WpStatus::Ok);
    assert_eq!(exact, 1);
    // sigma_min^2 = int_0^1 e^{-2t} dt up to the hold discretization.
    let exact_sq = 0.5 * (1.0 - (-2.0f64).exp());
    assert!((s * s - exact_sq).abs() < 2e-2 * exact_sq, "{s}");
    assert_eq!(unsafe { wp_observability(r, 1.0, 50, &mut s, &mut exact) }, WpStatus::Ok);
    assert_eq!(exact, 1);
    unsafe { wp_realization_free(r) };

    let k0 = WpK0Inputs { t0: 1.0, d: 0.5, f: 1.0, phi: 1.0, f_pert: 1.0, s0: 1.0 };
    let mut v = 0.0;
    assert_eq!(unsafe { wp_k0_bound(&k0, &mut v) }, WpStatus::Ok);
    assert!((v - 0.5).abs() < 1e-15);
    let bad = WpK0Inputs { s0: 0.0, ..k0 };
    assert_eq!(unsafe { wp_k0_bound(&bad, &mut v) }, WpStatus::NotExact);

    let th = WpTheta0Inputs { t0: 1.0, d: 0.0, f: 0.0, f_pert: 1.0, psi: 1.0, k_obs: 1.0, alpha0: 0.5 };
    assert_eq!(unsafe { wp_theta0_bound(&th, &mut v) }, WpStatus::Ok);
    assert!((v - 0.5).abs() < 1e-15);
}

#[test]
fn beam_closed_forms() {
    let mut h = 0.0;
    assert_eq!(unsafe { wp_beam_transfer_h(2.0, &mut h) }, WpStatus::Ok);
    assert!((h + 0.3907879109714051).abs() < 1e-13);
    assert_eq!(unsafe { wp_beam_transfer_h1(2.0, &mut h) }, WpStatus::Ok);
    assert!((h + 0.7233085775338821).abs() < 1e-13);
    assert_eq!(unsafe { wp_beam_transfer_h(0.0, &mut h) }, WpStatus::InvalidArgument);
    assert_eq!(unsafe { wp_beam_transfer_h(1.0, ptr::null_mut()) }, WpStatus::NullPointer);
}

#[test]
fn experiment_round_trip() {
    let cfg = CString::new(r#"{"kind": "radius", "seed": 3, "trials": 5}"#).unwrap();
    let mut report: *mut c_char = ptr::null_mut();
    let mut passed: c_int = -1;
    assert_eq!(unsafe { wp_run_experiment(cfg.as_ptr(), &mut report, &mut passed) }, WpStatus::Ok);
    assert_eq!(passed, 1);
    let text = unsafe { CStr::from_ptr(report) }.to_str().unwrap().to_owned();
    unsafe { wp_string_free(report) };
    assert!(text.contains("\"schema_version\": 1"));

    let unknown = CString::new(r#"{"kind": "nope"}"#).unwrap();
    assert_eq!(unsafe { wp_run_experiment(unknown.as_ptr(), &mut report, &mut passed) }, WpStatus::Parse);
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(wp_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/wellposed.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "wp_realization_new",
        "wp_realization_free",
        "wp_transfer",
        "wp_closed_loop",
        "wp_controllability",
        "wp_k0_bound",
        "wp_theta0_bound",
        "wp_beam_transfer_h1",
        "wp_last_error",
        "WP_STATUS_NULL_POINTER",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    // Syntax check with the system C compiler when one is installed.
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(&src, "#include \"wellposed.h\"\nint main(void) { return wp_version() == 0; }\n").unwrap();
    match Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-std=c99")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
    {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(_) => eprintln!("no C compiler found; skipped the compile check"),
    }
}
