//! C ABI over the `gelfand` crate.
//!
//! Domains and fields are opaque heap handles released with the matching
//! `*_free` function. Every entry point returns a [`GelfandStatus`]; on a
//! non-zero code the message is available from [`gelfand_last_error`] on the
//! same thread until the next call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gelfand::cone::{cone_roots, ConeRoots, DEFAULT_ROOT_TOL};
use gelfand::geometry::{build_from_spec, lambda1_infinity, DomainSpec};
use gelfand::limit::{estimate_lambda_max, solve_limit_gelfand};
use gelfand::p_solver::{solve_p_gelfand_minimal, solve_torsion, PConfig};
use gelfand::{Error, GridDomain, LimitConfig, ScalarField, SolveStatus};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GelfandStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    EmptyInterior = 4,
    NoRoot = 5,
    MaxIter = 6,
    Numerical = 7,
    Io = 8,
    Panic = 9,
}

/// Outcome of an iterative solve, as in the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GelfandSolveStatus {
    Converged = 0,
    Diverged = 2,
    MaxIter = 4,
}

impl From<SolveStatus> for GelfandSolveStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Converged => Self::Converged,
            SolveStatus::Diverged => Self::Diverged,
            SolveStatus::MaxIter => Self::MaxIter,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GelfandSolveSummary {
    pub status: GelfandSolveStatus,
    pub outer_iters: usize,
    pub sup_norm: f64,
    pub residual_sup: f64,
}

/// Opaque grid domain.
pub struct GelfandDomain(GridDomain);

/// Opaque nodal field bound to the domain it was computed on.
pub struct GelfandField(ScalarField);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn code(err: &Error) -> GelfandStatus {
    match err {
        Error::InvalidShape(_)
        | Error::InvalidParameter { .. }
        | Error::InvalidLambda(_)
        | Error::NonPositiveRhs(_)
        | Error::DomainMismatch
        | Error::BracketInvalid(_) => GelfandStatus::InvalidArgument,
        Error::Config { .. } | Error::Parse(_) | Error::Json(_) => GelfandStatus::Config,
        Error::EmptyInterior => GelfandStatus::EmptyInterior,
        Error::NoRoot(_) => GelfandStatus::NoRoot,
        Error::MaxIter(_) => GelfandStatus::MaxIter,
        Error::Overflow(_) | Error::Linear(_) => GelfandStatus::Numerical,
        Error::Io { .. } => GelfandStatus::Io,
    }
}

enum Fail {
    Null(&'static str),
    Arg(String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> GelfandStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => GelfandStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            GelfandStatus::NullPointer
        }
        Ok(Err(Fail::Arg(msg))) => {
            set_error(msg);
            GelfandStatus::InvalidArgument
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            code(&e)
        }
        Err(_) => {
            set_error("internal panic".to_string());
            GelfandStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Arg(format!("{what} is not valid UTF-8")))
}

unsafe fn limit_config(json: *const c_char, lambda: f64) -> Result<LimitConfig, Fail> {
    let mut cfg = if json.is_null() {
        LimitConfig::default()
    } else {
        serde_json::from_str(text(json, "config")?).map_err(Error::from)?
    };
    cfg.lambda = lambda;
    Ok(cfg)
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into the library on this thread.
#[no_mangle]
pub extern "C" fn gelfand_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gelfand_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a domain from a JSON document such as
/// `{"shape":"ball","center":[0,0],"radius":1,"resolution":64}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out_domain` writable.
#[no_mangle]
pub unsafe extern "C" fn gelfand_domain_from_json(
    json: *const c_char,
    out_domain: *mut *mut GelfandDomain,
) -> GelfandStatus {
    guard(|| {
        let slot = out(out_domain, "out_domain")?;
        *slot = ptr::null_mut();
        let spec = DomainSpec::from_json(text(json, "json")?, None)?;
        let dom = build_from_spec(&spec)?;
        *slot = Box::into_raw(Box::new(GelfandDomain(dom)));
        Ok(())
    })
}

/// # Safety
/// `domain` must come from [`gelfand_domain_from_json`] or be null.
#[no_mangle]
pub unsafe extern "C" fn gelfand_domain_free(domain: *mut GelfandDomain) {
    if !domain.is_null() {
        drop(Box::from_raw(domain));
    }
}

/// Spatial dimension, total node count, interior node count and grid step.
///
/// # Safety
/// `domain` must be a live handle; each output pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn gelfand_domain_info(
    domain: *const GelfandDomain,
    dim: *mut usize,
    nodes: *mut usize,
    interior: *mut usize,
    h: *mut f64,
) -> GelfandStatus {
    guard(|| {
        let d = &deref(domain, "domain")?.0;
        if let Some(x) = dim.as_mut() {
            *x = d.dim();
        }
        if let Some(x) = nodes.as_mut() {
            *x = d.node_count();
        }
        if let Some(x) = interior.as_mut() {
            *x = d.interior_count();
        }
        if let Some(x) = h.as_mut() {
            *x = d.h();
        }
        Ok(())
    })
}

/// `1/max dist` of the domain.
///
/// # Safety
/// `domain` must be a live handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn gelfand_lambda1(domain: *const GelfandDomain, out_value: *mut f64) -> GelfandStatus {
    guard(|| {
        let d = &deref(domain, "domain")?.0;
        *out(out_value, "out_value")? = lambda1_infinity(d)?;
        Ok(())
    })
}

/// # Safety
/// `field` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn gelfand_field_free(field: *mut GelfandField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Number of nodal values (all grid nodes, row-major).
///
/// # Safety
/// `field` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gelfand_field_len(field: *const GelfandField) -> usize {
    field.as_ref().map_or(0, |f| f.0.values().len())
}

/// Copies the nodal values into `buf`, which must hold `len` doubles with
/// `len` at least [`gelfand_field_len`].
///
/// # Safety
/// `field` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn gelfand_field_copy(field: *const GelfandField, buf: *mut f64, len: usize) -> GelfandStatus {
    guard(|| {
        let vals = deref(field, "field")?.0.values();
        if buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        if len < vals.len() {
            return Err(Fail::Arg(format!("buffer holds {len} values, need {}", vals.len())));
        }
        std::slice::from_raw_parts_mut(buf, vals.len()).copy_from_slice(vals);
        Ok(())
    })
}

/// Largest interior value.
///
/// # Safety
/// `field` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gelfand_field_sup(field: *const GelfandField) -> f64 {
    field.as_ref().map_or(f64::NAN, |f| f.0.sup_norm())
}

/// Minimal solution of the limit problem at load `lambda`. `config_json` is
/// an optional solver config object (may be null). The field is returned
/// whatever the status; check `summary.status`.
///
/// # Safety
/// Pointers must be valid; `config_json` may be null.
#[no_mangle]
pub unsafe extern "C" fn gelfand_solve_limit(
    domain: *const GelfandDomain,
    lambda: f64,
    config_json: *const c_char,
    out_field: *mut *mut GelfandField,
    summary: *mut GelfandSolveSummary,
) -> GelfandStatus {
    guard(|| {
        let d = &deref(domain, "domain")?.0;
        let slot = out(out_field, "out_field")?;
        *slot = ptr::null_mut();
        let sum = out(summary, "summary")?;
        let cfg = limit_config(config_json, lambda)?;
        let (u, rep) = solve_limit_gelfand(d, &cfg)?;
        *sum = GelfandSolveSummary {
            status: rep.status.into(),
            outer_iters: rep.outer_iters,
            sup_norm: rep.sup_norm,
            residual_sup: rep.residual_sup,
        };
        *slot = Box::into_raw(Box::new(GelfandField(u)));
        Ok(())
    })
}

/// Extinction threshold by bisection. `lo`/`hi` of zero select the default
/// bracket.
///
/// # Safety
/// `domain` must be a live handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn gelfand_lambda_max(
    domain: *const GelfandDomain,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    out_value: *mut f64,
) -> GelfandStatus {
    guard(|| {
        let d = &deref(domain, "domain")?.0;
        let slot = out(out_value, "out_value")?;
        let bracket = (lo != 0.0 || hi != 0.0).then_some((lo, hi));
        *slot = estimate_lambda_max(d, bracket, rel_tol, &LimitConfig::default())?.lambda_max;
        Ok(())
    })
}

/// Roots of `α = Λ e^{α·d_max}`. `count` receives 0, 1 (tangent) or 2;
/// unused outputs are set to NaN.
///
/// # Safety
/// Output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn gelfand_cone_roots(
    lambda: f64,
    d_max: f64,
    count: *mut u32,
    small: *mut f64,
    large: *mut f64,
) -> GelfandStatus {
    guard(|| {
        let (n, a, b) = match cone_roots(lambda, d_max, DEFAULT_ROOT_TOL)? {
            ConeRoots::None => (0, f64::NAN, f64::NAN),
            ConeRoots::Tangent(a) => (1, a, a),
            ConeRoots::Pair(a, b) => (2, a, b),
        };
        *out(count, "count")? = n;
        *out(small, "small")? = a;
        *out(large, "large")? = b;
        Ok(())
    })
}

/// p-torsion function: `−Δ_p w = 1`, `w = 0` on the boundary.
///
/// # Safety
/// `domain` must be a live handle and `out_field` writable.
#[no_mangle]
pub unsafe extern "C" fn gelfand_torsion(
    domain: *const GelfandDomain,
    p: f64,
    out_field: *mut *mut GelfandField,
) -> GelfandStatus {
    guard(|| {
        let d = &deref(domain, "domain")?.0;
        let slot = out(out_field, "out_field")?;
        *slot = ptr::null_mut();
        let w = solve_torsion(d, p)?;
        *slot = Box::into_raw(Box::new(GelfandField(w)));
        Ok(())
    })
}

/// Minimal solution of `−Δ_p u = λ e^u`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gelfand_solve_p(
    domain: *const GelfandDomain,
    p: f64,
    lambda: f64,
    out_field: *mut *mut GelfandField,
    summary: *mut GelfandSolveSummary,
) -> GelfandStatus {
    guard(|| {
        let d = &deref(domain, "domain")?.0;
        let slot = out(out_field, "out_field")?;
        *slot = ptr::null_mut();
        let sum = out(summary, "summary")?;
        let (u, rep) = solve_p_gelfand_minimal(d, &PConfig::new(p, lambda))?;
        *sum = GelfandSolveSummary {
            status: rep.status.into(),
            outer_iters: rep.outer_iters,
            sup_norm: rep.sup_norm,
            residual_sup: rep.residual_sup,
        };
        *slot = Box::into_raw(Box::new(GelfandField(u)));
        Ok(())
    })
}
