//! C ABI over the conic-admm solvers.
//!
//! Problems and results are opaque heap handles released with their `_free`
//! functions. Every fallible call returns a [`CaError`] code; the message of
//! the last failure on the calling thread is available from
//! [`ca_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use conic_admm::admm::Status;
use conic_admm::generators::GeneratorSpec;
use conic_admm::io::read_problem;
use conic_admm::problem::ConicProblem;
use conic_admm::solvers::{solve, SolveOptions, SolveOutput, SolverKind};
use conic_admm::Error;

/// Opaque problem handle.
pub struct CaProblem {
    inner: ConicProblem,
}

/// Opaque solve result handle.
pub struct CaResult {
    inner: SolveOutput,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaError {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Parse = 3,
    Io = 4,
    Numerical = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaStatus {
    Converged = 0,
    MaxIters = 1,
    Stalled = 2,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(code: CaError, msg: impl Into<String>) -> CaError {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
    code
}

fn code_of(e: &Error) -> CaError {
    match e {
        Error::Parse { .. } => CaError::Parse,
        Error::Io { .. } | Error::Csv(_) => CaError::Io,
        Error::Eigen { .. } | Error::SurjectivityViolation { .. } | Error::Oracle { .. } => {
            CaError::Numerical
        }
        _ => CaError::InvalidInput,
    }
}

/// Runs `f`, converting errors and panics into codes.
fn guard(f: impl FnOnce() -> Result<(), CaError>) -> CaError {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CaError::Ok,
        Ok(Err(code)) => code,
        Err(_) => set_error(CaError::Panic, "internal panic"),
    }
}

fn fail(e: Error) -> CaError {
    set_error(code_of(&e), e.to_string())
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, CaError> {
    if s.is_null() {
        return Err(set_error(CaError::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| set_error(CaError::InvalidInput, format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, CaError> {
    p.as_ref()
        .ok_or_else(|| set_error(CaError::NullPointer, format!("{what} is null")))
}

fn store<T>(out: *mut *mut T, value: T) -> Result<(), CaError> {
    if out.is_null() {
        return Err(set_error(CaError::NullPointer, "output pointer is null"));
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length in
/// bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ca_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Reads a problem file (SDPA, or native for `.native`/`.txt`).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ca_problem_read(path: *const c_char, out: *mut *mut CaProblem) -> CaError {
    guard(|| {
        let path = str_arg(path, "path")?;
        let inner = read_problem(path).map_err(fail)?;
        store(out, CaProblem { inner })
    })
}

/// Builds a problem from a generator spec such as `biq:n=11,seed=1`.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ca_problem_generate(
    spec: *const c_char,
    out: *mut *mut CaProblem,
) -> CaError {
    guard(|| {
        let spec: GeneratorSpec = str_arg(spec, "spec")?.parse().map_err(fail)?;
        let inner = spec.generate().map_err(fail)?.problem;
        store(out, CaProblem { inner })
    })
}

/// # Safety
/// `p` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ca_problem_free(p: *mut CaProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Matrix order `n`, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn ca_problem_order(p: *const CaProblem) -> usize {
    p.as_ref().map_or(0, |p| p.inner.n())
}

/// # Safety
/// `p` must be null or a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn ca_problem_num_eq(p: *const CaProblem) -> usize {
    p.as_ref().map_or(0, |p| p.inner.m_eq())
}

/// # Safety
/// `p` must be null or a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn ca_problem_num_ineq(p: *const CaProblem) -> usize {
    p.as_ref().map_or(0, |p| p.inner.m_ineq())
}

/// Solves `p`. `solver` may be null for the default; `tol <= 0` and
/// `max_iters == 0` select the defaults for the problem.
///
/// # Safety
/// `p` must be a live problem handle, `solver` null or NUL-terminated, and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ca_solve(
    p: *const CaProblem,
    solver: *const c_char,
    tol: f64,
    max_iters: usize,
    out: *mut *mut CaResult,
) -> CaError {
    guard(|| {
        let p = &ref_arg(p, "problem")?.inner;
        let kind = if solver.is_null() {
            SolverKind::default_for(p)
        } else {
            str_arg(solver, "solver")?.parse().map_err(fail)?
        };
        let opts = SolveOptions {
            tol: (tol > 0.0).then_some(tol),
            max_iters: (max_iters > 0).then_some(max_iters),
            ..SolveOptions::default()
        };
        let inner = solve(p, kind, &opts).map_err(fail)?;
        store(out, CaResult { inner })
    })
}

/// # Safety
/// `r` must be null or a result handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ca_result_free(r: *mut CaResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn ca_result_status(r: *const CaResult) -> CaStatus {
    match r.as_ref().map(|r| r.inner.status) {
        Some(Status::Converged) => CaStatus::Converged,
        Some(Status::MaxIters) => CaStatus::MaxIters,
        Some(Status::Stalled) | None => CaStatus::Stalled,
    }
}

/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn ca_result_iterations(r: *const CaResult) -> usize {
    r.as_ref().map_or(0, |r| r.inner.iterations)
}

/// Final KKT residual; NaN for a null handle.
///
/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn ca_result_eta(r: *const CaResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.inner.report.eta)
}

/// Relative duality gap; NaN for a null handle.
///
/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn ca_result_gap(r: *const CaResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.inner.report.eta_g)
}

/// Objective in the problem's own sense; NaN for a null handle.
///
/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn ca_result_objective(r: *const CaResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.inner.objective)
}

/// Copies the primal matrix, column-major, into `buf` of `len` doubles.
///
/// # Safety
/// `r` must be a live result handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ca_result_x(r: *const CaResult, buf: *mut f64, len: usize) -> CaError {
    guard(|| {
        let x = ref_arg(r, "result")?.inner.point.x.as_slice();
        if buf.is_null() {
            return Err(set_error(CaError::NullPointer, "buffer is null"));
        }
        if len < x.len() {
            return Err(set_error(
                CaError::BufferTooSmall,
                format!("buffer holds {len} values, need {}", x.len()),
            ));
        }
        ptr::copy_nonoverlapping(x.as_ptr(), buf, x.len());
        Ok(())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ca_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
