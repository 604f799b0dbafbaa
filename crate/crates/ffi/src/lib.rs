//! C ABI for `strong-algebra`.
//!
//! Objects cross the boundary as opaque handles created by `*_from_json` or
//! returned by operations, and released with the matching `*_free`. Every
//! fallible call returns an [`SaStatus`]; the message of the last failure on
//! the calling thread is available through [`sa_last_error`]. Strings handed
//! out by the library are released with [`sa_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use strong_algebra::calculus::neumann_inverse;
use strong_algebra::cli::{run, ExperimentConfig};
use strong_algebra::factorization::{solve_canonical_factorization, FactorizationOptions, FactorizationResult};
use strong_algebra::wiener::{wiener_left_inverse, LocalizationOptions, PatchOptions, WienerElement};
use strong_algebra::{Element, Error, ErrorClass, Grade};

/// Status codes. The nonzero error classes match the CLI exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SaStatus {
    Ok = 0,
    /// Precondition or contraction failure.
    Precondition = 2,
    Numerical = 3,
    /// I/O, JSON or schema error.
    Io = 4,
    NullPointer = 5,
    InvalidUtf8 = 6,
    Panic = 7,
}

/// An element of a graded algebra instance.
pub struct SaElement(Element);

/// A Wiener-algebra element (Laurent series with algebra coefficients).
pub struct SaWiener(WienerElement);

/// Result of a canonical factorization.
pub struct SaFactorization(FactorizationResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(err: Error) -> SaStatus {
    set_error(format!("{}: {err}", err.kind()));
    match err.class() {
        ErrorClass::Precondition => SaStatus::Precondition,
        ErrorClass::Numerical => SaStatus::Numerical,
        ErrorClass::Io => SaStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> SaStatus) -> SaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("panic inside strong-algebra".into());
            SaStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, SaStatus> {
    if p.is_null() {
        set_error("null string argument".into());
        return Err(SaStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string argument is not UTF-8".into());
        SaStatus::InvalidUtf8
    })
}

unsafe fn grade_arg(p: *const c_char) -> Result<Grade, SaStatus> {
    str_arg(p)?.parse::<Grade>().map_err(fail)
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, SaStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null handle".into());
        SaStatus::NullPointer
    })
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> SaStatus {
    if out.is_null() {
        set_error("null output pointer".into());
        return SaStatus::NullPointer;
    }
    *out = Box::into_raw(Box::new(value));
    SaStatus::Ok
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> SaStatus {
    if out.is_null() {
        set_error("null output pointer".into());
        return SaStatus::NullPointer;
    }
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            SaStatus::Ok
        }
        Err(_) => {
            set_error("string contains NUL".into());
            SaStatus::Io
        }
    }
}

unsafe fn put_f64(out: *mut f64, v: f64) {
    if !out.is_null() {
        *out = v;
    }
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! core {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return fail(err),
        }
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (truncated,
/// always NUL-terminated when `len > 0`). Returns the full message length,
/// or 0 if there is none.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sa_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast(), n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
        None => 0,
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn sa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sa_element_from_json(json: *const c_char, out: *mut *mut SaElement) -> SaStatus {
    guard(|| {
        let text = tri!(str_arg(json));
        let e = core!(Element::from_json(text));
        put(out, SaElement(e))
    })
}

/// # Safety
/// `e` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sa_element_to_json(e: *const SaElement, out: *mut *mut c_char) -> SaStatus {
    guard(|| {
        let e = tri!(handle(e));
        let text = core!(e.0.to_json());
        put_string(out, text)
    })
}

/// # Safety
/// `e` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sa_element_free(e: *mut SaElement) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Number of stored coefficients.
///
/// # Safety
/// `e` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sa_element_len(e: *const SaElement) -> usize {
    e.as_ref().map_or(0, |e| e.0.coeffs().len())
}

/// Writes coefficient `i` as `(re, im)`.
///
/// # Safety
/// `e` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sa_element_coefficient(e: *const SaElement, i: usize, re: *mut f64, im: *mut f64) -> SaStatus {
    guard(|| {
        let e = tri!(handle(e));
        let Some(v) = e.0.coeffs().get(i) else {
            set_error(format!("coefficient index {i} out of range"));
            return SaStatus::Precondition;
        };
        if re.is_null() || im.is_null() {
            set_error("null output pointer".into());
            return SaStatus::NullPointer;
        }
        *re = v.re;
        *im = v.im;
        SaStatus::Ok
    })
}

/// Norm at `grade` (e.g. `"0"`, `"1/2"`), including the tail bound.
///
/// # Safety
/// `e` must be a live handle, `grade` a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sa_element_norm(e: *const SaElement, grade: *const c_char, out: *mut f64) -> SaStatus {
    guard(|| {
        let e = tri!(handle(e));
        let g = tri!(grade_arg(grade));
        let n = core!(e.0.norm_bound(&g));
        if out.is_null() {
            return SaStatus::NullPointer;
        }
        *out = n;
        SaStatus::Ok
    })
}

/// # Safety
/// `a`, `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sa_element_multiply(
    a: *const SaElement,
    b: *const SaElement,
    out: *mut *mut SaElement,
) -> SaStatus {
    guard(|| {
        let (a, b) = (tri!(handle(a)), tri!(handle(b)));
        let p = core!(a.0.multiply(&b.0));
        put(out, SaElement(p))
    })
}

/// `(1 - a)^{-1}` by its Neumann series. `bound` receives the certified
/// bound on the inverse's norm at `beta`, `distance` the bound on
/// `||1 - (1-a)^{-1}||_beta`; both may be null.
///
/// # Safety
/// `a` must be a live handle, grades NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sa_neumann_inverse(
    a: *const SaElement,
    alpha: *const c_char,
    beta: *const c_char,
    tol: f64,
    out: *mut *mut SaElement,
    bound: *mut f64,
    distance: *mut f64,
) -> SaStatus {
    guard(|| {
        let a = tri!(handle(a));
        let (al, be) = (tri!(grade_arg(alpha)), tri!(grade_arg(beta)));
        let inv = core!(neumann_inverse(&a.0, &al, &be, tol));
        put_f64(bound, inv.bound.bound);
        put_f64(distance, inv.distance.bound);
        put(out, SaElement(inv.inverse))
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sa_wiener_from_json(json: *const c_char, out: *mut *mut SaWiener) -> SaStatus {
    guard(|| {
        let text = tri!(str_arg(json));
        let w = core!(WienerElement::from_json(text));
        put(out, SaWiener(w))
    })
}

/// # Safety
/// `w` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sa_wiener_to_json(w: *const SaWiener, out: *mut *mut c_char) -> SaStatus {
    guard(|| {
        let w = tri!(handle(w));
        let text = core!(w.0.to_json());
        put_string(out, text)
    })
}

/// # Safety
/// `w` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sa_wiener_free(w: *mut SaWiener) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// # Safety
/// `w` must be a live handle, `grade` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sa_wiener_norm(w: *const SaWiener, grade: *const c_char, out: *mut f64) -> SaStatus {
    guard(|| {
        let w = tri!(handle(w));
        let g = tri!(grade_arg(grade));
        let n = core!(w.0.norm_bound(&g));
        if out.is_null() {
            return SaStatus::NullPointer;
        }
        *out = n;
        SaStatus::Ok
    })
}

/// # Safety
/// `a`, `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sa_wiener_multiply(a: *const SaWiener, b: *const SaWiener, out: *mut *mut SaWiener) -> SaStatus {
    guard(|| {
        let (a, b) = (tri!(handle(a)), tri!(handle(b)));
        let p = core!(a.0.multiply(&b.0));
        put(out, SaWiener(p))
    })
}

/// Value `a(t) = sum a_n e^{int}` as a new element handle.
///
/// # Safety
/// `w` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sa_wiener_evaluate(w: *const SaWiener, t: f64, out: *mut *mut SaElement) -> SaStatus {
    guard(|| {
        let w = tri!(handle(w));
        put(out, SaElement(w.0.evaluate(t)))
    })
}

/// Stored coefficient `n` as a new element handle (zero outside the window).
///
/// # Safety
/// `w` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sa_wiener_coefficient(w: *const SaWiener, n: i64, out: *mut *mut SaElement) -> SaStatus {
    guard(|| {
        let w = tri!(handle(w));
        put(out, SaElement(w.0.coeff(n)))
    })
}

/// Left inverse by localization and patching. `residual` (nullable)
/// receives the certified `||a'a - 1||`.
///
/// # Safety
/// `a` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sa_wiener_left_inverse(
    a: *const SaWiener,
    half_width: usize,
    tol: f64,
    out: *mut *mut SaWiener,
    residual: *mut f64,
) -> SaStatus {
    guard(|| {
        let a = tri!(handle(a));
        let patch = PatchOptions {
            half_width,
            tol,
            ..PatchOptions::default()
        };
        let rep = core!(wiener_left_inverse(&a.0, &LocalizationOptions::default(), &patch));
        put_f64(residual, rep.patch.residual);
        put(out, SaWiener(rep.inverse))
    })
}

/// Canonical factorization `a = a_- a_+` at grade `grade`.
///
/// # Safety
/// `a` must be a live handle, `grade` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sa_factorize(
    a: *const SaWiener,
    grade: *const c_char,
    tol: f64,
    out: *mut *mut SaFactorization,
) -> SaStatus {
    guard(|| {
        let a = tri!(handle(a));
        let g = tri!(grade_arg(grade));
        let opts = FactorizationOptions {
            tol,
            ..FactorizationOptions::default()
        };
        let r = core!(solve_canonical_factorization(&a.0, &g, &g, &opts));
        put(out, SaFactorization(r))
    })
}

/// Which factor [`sa_factorization_factor`] returns.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SaFactor {
    Minus = 0,
    Plus = 1,
    MinusInverse = 2,
    PlusInverse = 3,
}

/// Copies one factor out as a new handle.
///
/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sa_factorization_factor(
    f: *const SaFactorization,
    which: SaFactor,
    out: *mut *mut SaWiener,
) -> SaStatus {
    guard(|| {
        let f = &tri!(handle(f)).0;
        let w = match which {
            SaFactor::Minus => &f.a_minus,
            SaFactor::Plus => &f.a_plus,
            SaFactor::MinusInverse => &f.a_minus_inv,
            SaFactor::PlusInverse => &f.a_plus_inv,
        };
        put(out, SaWiener(w.clone()))
    })
}

/// `||a - a_- a_+||` including tails, or NaN for a null handle.
///
/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sa_factorization_residual(f: *const SaFactorization) -> f64 {
    f.as_ref().map_or(f64::NAN, |f| f.0.residual)
}

/// # Safety
/// `f` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sa_factorization_free(f: *mut SaFactorization) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Runs an experiment config (JSON text) the way the CLI does; input paths
/// resolve against `base_dir` (nullable: current directory). The report is
/// returned even when the task fails; `exit_code` (nullable) receives the
/// CLI exit code.
///
/// # Safety
/// Strings must be NUL-terminated; `report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sa_run_config(
    config_json: *const c_char,
    base_dir: *const c_char,
    report: *mut *mut c_char,
    exit_code: *mut c_int,
) -> SaStatus {
    guard(|| {
        let text = tri!(str_arg(config_json));
        let base = if base_dir.is_null() { "." } else { tri!(str_arg(base_dir)) };
        let config = core!(ExperimentConfig::from_json(text));
        let doc = run(&config, Path::new(base));
        if !exit_code.is_null() {
            *exit_code = doc.exit_code;
        }
        let json = core!(doc.to_json());
        put_string(report, json)
    })
}
