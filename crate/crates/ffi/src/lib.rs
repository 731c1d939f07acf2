//! C ABI over `jacobi_jost`.
//!
//! Models and sequences are opaque heap handles released with the matching
//! `*_free`. Every call returns a `JjStatus`; on failure the message is kept
//! per thread and can be read with `jj_last_error`. Sequence entries are
//! handed out log-scaled as `(mantissa_re, mantissa_im, exp2)` because the
//! values routinely leave the double range.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use jacobi_jost::coeffs::{Cell, CoefficientModel};
use jacobi_jost::jost::jost_solution;
use jacobi_jost::mp::Cplx;
use jacobi_jost::recurrence::{forward_polynomials, SolutionSeq};
use jacobi_jost::spectral::{jost_zero_scan, truncated_eigs};
use jacobi_jost::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JjStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Unsupported = 3,
    HorizonTooSmall = 4,
    UnresolvedSpectrum = 5,
    VerificationFailed = 6,
    Domain = 7,
    Range = 8,
    Degenerate = 9,
    CostCap = 10,
    OutOfRange = 11,
    Io = 12,
    BufferTooSmall = 13,
    Panic = 99,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JjCell {
    NonCriticalRegular = 0,
    NonCriticalSingular = 1,
    CriticalRegular = 2,
    CriticalSingularSub = 3,
    CriticalSingularSuper = 4,
    DoublyCriticalRegular = 5,
    DoublyCriticalSingular = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct JjClassification {
    pub gamma: f64,
    pub nu: i32,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
    pub s: f64,
    pub delta: f64,
    pub varrho: f64,
    pub cell: JjCell,
}

/// Opaque coefficient model.
pub struct JjModel {
    inner: CoefficientModel,
}

/// Opaque solution sequence with an optional Ω(z).
pub struct JjSeq {
    inner: SolutionSeq,
    omega: Option<(f64, f64, i64)>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> JjStatus {
    match e {
        Error::InvalidParameter(_) | Error::Parse(_) => JjStatus::InvalidParameter,
        Error::OutOfRange { .. } => JjStatus::OutOfRange,
        Error::Unsupported(_) => JjStatus::Unsupported,
        Error::Domain(_) => JjStatus::Domain,
        Error::Range(_) => JjStatus::Range,
        Error::Degenerate { .. } => JjStatus::Degenerate,
        Error::HorizonTooSmall { .. } => JjStatus::HorizonTooSmall,
        Error::UnresolvedSpectrum { .. } => JjStatus::UnresolvedSpectrum,
        Error::Verification(_) => JjStatus::VerificationFailed,
        Error::CostCap { .. } => JjStatus::CostCap,
        Error::Io(_) => JjStatus::Io,
    }
}

fn guard<F: FnOnce() -> Result<(), (JjStatus, String)>>(f: F) -> JjStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => JjStatus::Ok,
        Ok(Err((s, m))) => {
            set_error(m);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            JjStatus::Panic
        }
    }
}

fn lift(e: Error) -> (JjStatus, String) {
    (status_of(&e), e.to_string())
}

fn null() -> (JjStatus, String) {
    (JjStatus::NullPointer, "null pointer argument".into())
}

fn cell(c: Cell) -> JjCell {
    match c {
        Cell::NonCriticalRegular => JjCell::NonCriticalRegular,
        Cell::NonCriticalSingular => JjCell::NonCriticalSingular,
        Cell::CriticalRegular => JjCell::CriticalRegular,
        Cell::CriticalSingularSub => JjCell::CriticalSingularSub,
        Cell::CriticalSingularSuper => JjCell::CriticalSingularSuper,
        Cell::DoublyCriticalRegular => JjCell::DoublyCriticalRegular,
        Cell::DoublyCriticalSingular => JjCell::DoublyCriticalSingular,
    }
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to fit). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must point to `len` writable bytes or be null.
#[no_mangle]
pub unsafe extern "C" fn jj_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let s = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = s.len().min(len - 1);
            ptr::copy_nonoverlapping(s.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        s.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn jj_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Build a model from a JSON config (same schema as the CLI).
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jj_model_from_json(json: *const c_char, out: *mut *mut JjModel) -> JjStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return Err(null());
        }
        let s = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| (JjStatus::InvalidParameter, "config is not UTF-8".to_string()))?;
        let m = CoefficientModel::from_json(s, None).map_err(lift)?;
        *out = Box::into_raw(Box::new(JjModel { inner: m }));
        Ok(())
    })
}

/// # Safety
/// `m` must come from `jj_model_from_json` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn jj_model_free(m: *mut JjModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be a live model handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jj_classify(m: *const JjModel, out: *mut JjClassification) -> JjStatus {
    guard(|| {
        if m.is_null() || out.is_null() {
            return Err(null());
        }
        let c = (*m).inner.classify().map_err(lift)?;
        *out = JjClassification {
            gamma: c.gamma,
            nu: c.nu,
            sigma: c.sigma,
            alpha: c.alpha,
            beta: c.beta,
            tau: c.tau,
            s: c.s,
            delta: c.delta,
            varrho: c.varrho,
            cell: cell(c.cell),
        };
        Ok(())
    })
}

/// P_0..=P_{n_max} at z = re + i·im.
///
/// # Safety
/// `m` must be a live model handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jj_polynomials(m: *const JjModel, re: f64, im: f64, n_max: usize, out: *mut *mut JjSeq) -> JjStatus {
    guard(|| {
        if m.is_null() || out.is_null() {
            return Err(null());
        }
        let model = &(*m).inner;
        let z = Cplx::from_f64(model.precision(), re, im);
        let s = forward_polynomials(model, &z, n_max).map_err(lift)?;
        *out = Box::into_raw(Box::new(JjSeq { inner: s, omega: None }));
        Ok(())
    })
}

/// Jost solution f_{−1..} at z to tolerance `tol`, stored at least to n_max.
///
/// # Safety
/// `m` must be a live model handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jj_jost_solution(
    m: *const JjModel,
    re: f64,
    im: f64,
    tol: f64,
    n_max: usize,
    out: *mut *mut JjSeq,
) -> JjStatus {
    guard(|| {
        if m.is_null() || out.is_null() {
            return Err(null());
        }
        let model = &(*m).inner;
        let z = Cplx::from_f64(model.precision(), re, im);
        let sol = jost_solution(model, &z, tol, n_max).map_err(lift)?;
        let (mr, mi) = sol.omega.mantissa().to_c64();
        *out = Box::into_raw(Box::new(JjSeq { inner: sol.f, omega: Some((mr, mi, sol.omega.exp2())) }));
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn jj_seq_free(s: *mut JjSeq) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// First and last stored index.
///
/// # Safety
/// `s` must be a live sequence handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn jj_seq_range(s: *const JjSeq, first: *mut i64, last: *mut i64) -> JjStatus {
    guard(|| {
        if s.is_null() || first.is_null() || last.is_null() {
            return Err(null());
        }
        *first = (*s).inner.start;
        *last = (*s).inner.end();
        Ok(())
    })
}

/// Entry n as mantissa (re, im) and binary exponent: value = m·2^exp2.
///
/// # Safety
/// `s` must be a live sequence handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn jj_seq_get(s: *const JjSeq, n: i64, re: *mut f64, im: *mut f64, exp2: *mut i64) -> JjStatus {
    guard(|| {
        if s.is_null() || re.is_null() || im.is_null() || exp2.is_null() {
            return Err(null());
        }
        let seq = &(*s).inner;
        let v = seq
            .get(n)
            .ok_or_else(|| (JjStatus::OutOfRange, format!("index {n} outside {}..={}", seq.start, seq.end())))?;
        let (a, b) = v.mantissa().to_c64();
        *re = a;
        *im = b;
        *exp2 = v.exp2();
        Ok(())
    })
}

/// Ω(z) of a Jost sequence, log-scaled as in `jj_seq_get`.
///
/// # Safety
/// `s` must be a live sequence handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn jj_seq_omega(s: *const JjSeq, re: *mut f64, im: *mut f64, exp2: *mut i64) -> JjStatus {
    guard(|| {
        if s.is_null() || re.is_null() || im.is_null() || exp2.is_null() {
            return Err(null());
        }
        let (a, b, e) = (*s).omega.ok_or_else(|| (JjStatus::Domain, "sequence is not a Jost solution".to_string()))?;
        *re = a;
        *im = b;
        *exp2 = e;
        Ok(())
    })
}

unsafe fn write_list(xs: &[f64], out: *mut f64, cap: usize, count: *mut usize) -> Result<(), (JjStatus, String)> {
    *count = xs.len();
    if xs.len() > cap {
        return Err((JjStatus::BufferTooSmall, format!("{} values, buffer holds {cap}", xs.len())));
    }
    if !xs.is_empty() {
        if out.is_null() {
            return Err(null());
        }
        ptr::copy_nonoverlapping(xs.as_ptr(), out, xs.len());
    }
    Ok(())
}

/// Eigenvalues of the leading n×n section in [lo, hi]. `*count` receives
/// the number found even when the buffer is too small.
///
/// # Safety
/// `m` must be a live model; `out` must hold `cap` doubles; `count` writable.
#[no_mangle]
pub unsafe extern "C" fn jj_truncated_eigs(
    m: *const JjModel,
    n: usize,
    lo: f64,
    hi: f64,
    out: *mut f64,
    cap: usize,
    count: *mut usize,
) -> JjStatus {
    guard(|| {
        if m.is_null() || count.is_null() {
            return Err(null());
        }
        let r = truncated_eigs(&(*m).inner, n, (lo, hi)).map_err(lift)?;
        write_list(&r.lambdas(), out, cap, count)
    })
}

/// Zeros of the Jost function in [lo, hi] (supercritical models).
///
/// # Safety
/// `m` must be a live model; `out` must hold `cap` doubles; `count` writable.
#[no_mangle]
pub unsafe extern "C" fn jj_jost_zeros(
    m: *const JjModel,
    lo: f64,
    hi: f64,
    grid: usize,
    width: f64,
    out: *mut f64,
    cap: usize,
    count: *mut usize,
) -> JjStatus {
    guard(|| {
        if m.is_null() || count.is_null() {
            return Err(null());
        }
        let r = jost_zero_scan(&(*m).inner, (lo, hi), grid, width).map_err(lift)?;
        write_list(&r.lambdas(), out, cap, count)
    })
}
