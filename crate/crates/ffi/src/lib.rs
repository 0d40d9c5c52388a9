//! C ABI over the `qhmetric` toolkit.
//!
//! Domains and maps are opaque handles created from JSON documents and
//! released with the matching `_free` function. Every fallible call returns a
//! [`QhStatus`]; on failure the message is available from
//! [`qh_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qhmetric::{j_distance, qh_distance, Domain, Error, MapSpec, Point, SolverConfig};

/// Opaque domain handle.
pub struct QhDomain(Domain);

/// Opaque map handle.
pub struct QhMap(MapSpec);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidDomain = 4,
    InvalidMap = 5,
    InvalidParameter = 6,
    OutsideDomain = 7,
    NoPath = 8,
    Branch = 9,
    Unsupported = 10,
    Panic = 11,
    Other = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QhPoint {
    pub x: f64,
    pub y: f64,
}

/// `lower ≤ k_D(x, y) ≤ upper`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QhBracket {
    pub lower: f64,
    pub upper: f64,
    pub refinement_level: u32,
    /// Set when the value came from a closed form.
    pub exact: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QhStatus {
    match e {
        Error::OutsideDomain(_) => QhStatus::OutsideDomain,
        Error::InvalidDomain { .. } => QhStatus::InvalidDomain,
        Error::InvalidMap { .. } => QhStatus::InvalidMap,
        Error::InvalidParameter { .. } => QhStatus::InvalidParameter,
        Error::NoPath => QhStatus::NoPath,
        Error::Branch(_) => QhStatus::Branch,
        Error::UnsupportedImage(_) => QhStatus::Unsupported,
        Error::Json(_) => QhStatus::Parse,
        _ => QhStatus::Other,
    }
}

/// Runs `f`, recording errors and panics.
fn guard(f: impl FnOnce() -> Result<(), QhStatus>) -> QhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            QhStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            QhStatus::Panic
        }
    }
}

fn fail(e: Error) -> QhStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn null(what: &str) -> QhStatus {
    set_error(format!("`{what}` is null"));
    QhStatus::NullPointer
}

/// # Safety
/// `s` is null or a valid nul-terminated string.
unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, QhStatus> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error(format!("`{what}` is not valid UTF-8"));
        QhStatus::InvalidUtf8
    })
}

/// # Safety
/// `p` is null or points to a live handle created by this library.
unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, QhStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

fn point(p: QhPoint) -> Point {
    Point::new(p.x, p.y)
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn qh_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses and validates a domain document.
///
/// # Safety
/// `json` is a nul-terminated string and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qh_domain_from_json(
    json: *const c_char,
    out: *mut *mut QhDomain,
) -> QhStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(json, "json")?;
        let d = Domain::from_json(text).map_err(fail)?;
        *out = Box::into_raw(Box::new(QhDomain(d)));
        Ok(())
    })
}

/// # Safety
/// `d` is null or a handle from [`qh_domain_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qh_domain_free(d: *mut QhDomain) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// # Safety
/// `d` is a live domain handle and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qh_domain_contains(
    d: *const QhDomain,
    p: QhPoint,
    out: *mut bool,
) -> QhStatus {
    guard(|| {
        let d = borrow(d, "domain")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = d.0.contains(point(p));
        Ok(())
    })
}

/// # Safety
/// `d` is a live domain handle and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qh_domain_boundary_distance(
    d: *const QhDomain,
    p: QhPoint,
    out: *mut f64,
) -> QhStatus {
    guard(|| {
        let d = borrow(d, "domain")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = d.0.boundary_distance(point(p)).map_err(fail)?;
        Ok(())
    })
}

/// # Safety
/// `d` is a live domain handle and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qh_j_distance(
    d: *const QhDomain,
    x: QhPoint,
    y: QhPoint,
    out: *mut f64,
) -> QhStatus {
    guard(|| {
        let d = borrow(d, "domain")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = j_distance(&d.0, point(x), point(y)).map_err(fail)?;
        Ok(())
    })
}

/// Quasihyperbolic distance bracket with the default solver settings.
///
/// # Safety
/// `d` is a live domain handle and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qh_k_distance(
    d: *const QhDomain,
    x: QhPoint,
    y: QhPoint,
    out: *mut QhBracket,
) -> QhStatus {
    guard(|| {
        let d = borrow(d, "domain")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = qh_distance(&d.0, point(x), point(y), &SolverConfig::default()).map_err(fail)?;
        *out = QhBracket {
            lower: r.lower,
            upper: r.upper,
            refinement_level: r.refinement_level as u32,
            exact: r.exact,
        };
        Ok(())
    })
}

/// Parses and validates a map document.
///
/// # Safety
/// `json` is a nul-terminated string and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qh_map_from_json(json: *const c_char, out: *mut *mut QhMap) -> QhStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(json, "json")?;
        let m = MapSpec::from_json(text).map_err(fail)?;
        *out = Box::into_raw(Box::new(QhMap(m)));
        Ok(())
    })
}

/// # Safety
/// `m` is null or a handle from [`qh_map_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qh_map_free(m: *mut QhMap) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` is a live map handle and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qh_map_apply(m: *const QhMap, p: QhPoint, out: *mut QhPoint) -> QhStatus {
    guard(|| {
        let m = borrow(m, "map")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let w = m.0.apply(point(p)).map_err(fail)?;
        *out = QhPoint { x: w.x, y: w.y };
        Ok(())
    })
}

/// # Safety
/// `m` is a live map handle and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qh_map_apply_inverse(
    m: *const QhMap,
    p: QhPoint,
    out: *mut QhPoint,
) -> QhStatus {
    guard(|| {
        let m = borrow(m, "map")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let z = m.0.apply_inverse(point(p)).map_err(fail)?;
        *out = QhPoint { x: z.x, y: z.y };
        Ok(())
    })
}
