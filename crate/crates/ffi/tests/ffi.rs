use std::ffi::{c_char, CStr, CString};
use std::ptr;

use conic_admm_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    unsafe {
        ca_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn generate_solve_and_read_back() {
    let spec = CString::new("biq:n=6,seed=3").unwrap();
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(ca_problem_generate(spec.as_ptr(), &mut p), CaError::Ok);
        assert_eq!(ca_problem_order(p), 6);
        assert_eq!(ca_problem_num_eq(p), 6);
        assert_eq!(ca_problem_num_ineq(p), 0);
        let mut r = ptr::null_mut();
        assert_eq!(ca_solve(p, ptr::null(), 0.0, 0, &mut r), CaError::Ok);
        assert_eq!(ca_result_status(r), CaStatus::Converged);
        assert!(ca_result_eta(r) <= 1e-6);
        assert!(ca_result_iterations(r) > 0);
        assert!(ca_result_objective(r).is_finite());
        assert!(ca_result_gap(r).abs() < 1e-3);
        let mut x = vec![f64::NAN; 36];
        assert_eq!(ca_result_x(r, x.as_mut_ptr(), x.len()), CaError::Ok);
        assert!(x.iter().all(|v| v.is_finite()));
        assert_eq!(x[1], x[6]);
        assert_eq!(ca_result_x(r, x.as_mut_ptr(), 3), CaError::BufferTooSmall);
        assert!(last_error().contains("need 36"));
        ca_result_free(r);
        ca_problem_free(p);
    }
}

#[test]
fn errors_are_codes_with_messages() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(
            ca_problem_generate(ptr::null(), &mut p),
            CaError::NullPointer
        );
        let bad = CString::new("nope:n=3").unwrap();
        assert_eq!(
            ca_problem_generate(bad.as_ptr(), &mut p),
            CaError::InvalidInput
        );
        assert!(last_error().contains("nope"));
        let missing = CString::new("/nonexistent/file.dat-s").unwrap();
        assert_eq!(ca_problem_read(missing.as_ptr(), &mut p), CaError::Io);
        assert!(p.is_null());

        let spec = CString::new("biq:n=4,seed=1").unwrap();
        assert_eq!(ca_problem_generate(spec.as_ptr(), &mut p), CaError::Ok);
        let solver = CString::new("spadmm4d_1618").unwrap();
        let mut r = ptr::null_mut();
        assert_eq!(
            ca_solve(p, solver.as_ptr(), 0.0, 0, &mut r),
            CaError::InvalidInput
        );
        assert!(r.is_null());
        assert_eq!(
            ca_solve(ptr::null(), ptr::null(), 0.0, 0, &mut r),
            CaError::NullPointer
        );
        ca_problem_free(p);
        ca_problem_free(ptr::null_mut());
        ca_result_free(ptr::null_mut());
        assert_eq!(ca_problem_order(ptr::null()), 0);
        assert!(ca_result_eta(ptr::null()).is_nan());
    }
}

#[test]
fn parse_errors_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.dat-s");
    std::fs::write(&path, "1\n1\n2\n1\n1 1 9 1 1\n").unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(ca_problem_read(c.as_ptr(), &mut p), CaError::Parse);
    }
    assert!(last_error().contains(":5:"), "{}", last_error());
}

#[test]
fn message_truncation_reports_full_length() {
    unsafe {
        let mut p = ptr::null_mut();
        ca_problem_generate(ptr::null(), &mut p);
        let full = ca_last_error_message(ptr::null_mut(), 0);
        let mut buf = [0 as c_char; 4];
        assert_eq!(ca_last_error_message(buf.as_mut_ptr(), 4), full);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_bytes().len(), 3);
        assert!(!CStr::from_ptr(ca_version()).to_bytes().is_empty());
    }
}

#[test]
fn header_declares_the_api_and_compiles() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/conic_admm.h");
    let text = std::fs::read_to_string(header).unwrap();
    for f in [
        "ca_last_error_message",
        "ca_problem_read",
        "ca_problem_generate",
        "ca_problem_free",
        "ca_solve",
        "ca_result_x",
        "ca_result_free",
        "CA_ERROR_PARSE",
        "CA_STATUS_CONVERGED",
    ] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if let Ok(out) = std::process::Command::new(&cc)
        .args(["-fsyntax-only", "-x", "c", header])
        .output()
    {
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
