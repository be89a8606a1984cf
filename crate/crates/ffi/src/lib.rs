//! C ABI for the materiality crate.
//!
//! Graphs and models cross the boundary as JSON strings and live behind
//! opaque handles. Every call returns a [`MatStatus`]; on failure
//! [`mat_last_error`] describes what went wrong. Strings handed out by this
//! library must be released with [`mat_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use materiality::builder::{synthesize, BuildConfig};
use materiality::check::check_graph;
use materiality::cli::{rational_json, CliError};
use materiality::criteria::SearchConfig;
use materiality::graph::{parse_scoped_graph, ScopedGraph};
use materiality::policy::{meu, voi, Scope, SearchLimits};
use materiality::scm::FiniteScm;
use serde_json::json;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Input = 3,
    Budget = 4,
    Internal = 5,
}

/// A validated scoped graph.
pub struct MatGraph {
    graph: ScopedGraph,
}

/// A finite structural causal model.
pub struct MatScm {
    scm: FiniteScm,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: MatStatus, msg: &str) -> MatStatus {
    set_error(msg);
    status
}

fn from_cli(e: CliError) -> MatStatus {
    let status = match e {
        CliError::Input(_) => MatStatus::Input,
        CliError::Budget(_) => MatStatus::Budget,
        CliError::Internal(_) => MatStatus::Internal,
    };
    fail(status, e.message())
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, MatStatus> {
    if s.is_null() {
        return Err(fail(MatStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(MatStatus::InvalidUtf8, "argument is not UTF-8"))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> MatStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            MatStatus::Ok
        }
        Err(_) => fail(MatStatus::Internal, "output contains a NUL byte"),
    }
}

macro_rules! try_ffi {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

/// Message for the last failed call on this thread. Valid until the next
/// call on the same thread; never NULL.
#[no_mangle]
pub extern "C" fn mat_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mat_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a graph document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mat_graph_from_json(json: *const c_char, out: *mut *mut MatGraph) -> MatStatus {
    if out.is_null() {
        return fail(MatStatus::NullPointer, "null output pointer");
    }
    *out = ptr::null_mut();
    let text = try_ffi!(read_str(json));
    match parse_scoped_graph(text) {
        Ok(graph) => {
            *out = Box::into_raw(Box::new(MatGraph { graph }));
            MatStatus::Ok
        }
        Err(e) => from_cli(e.into()),
    }
}

/// # Safety
/// `g` must be NULL or a handle from [`mat_graph_from_json`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mat_graph_free(g: *mut MatGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Per-edge verdicts as a JSON report.
///
/// # Safety
/// `g` must be a live graph handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mat_graph_check(g: *const MatGraph, out: *mut *mut c_char) -> MatStatus {
    if g.is_null() || out.is_null() {
        return fail(MatStatus::NullPointer, "null argument");
    }
    let g = &(*g).graph;
    match check_graph(g, &SearchConfig::default()) {
        Ok(r) => write_string(out, r.to_json(g).to_string()),
        Err(e) => from_cli(e.into()),
    }
}

/// Builds the materiality model for `decision` and `context`. A negative
/// `k_override` uses the computed `k`.
///
/// # Safety
/// `g` must be a live graph handle, the names NUL-terminated strings and
/// `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mat_synthesize(
    g: *const MatGraph,
    decision: *const c_char,
    context: *const c_char,
    k_override: i32,
    out: *mut *mut MatScm,
) -> MatStatus {
    if g.is_null() || out.is_null() {
        return fail(MatStatus::NullPointer, "null argument");
    }
    *out = ptr::null_mut();
    let g = &(*g).graph;
    let (x, z) = (try_ffi!(read_str(decision)), try_ffi!(read_str(context)));
    let nodes = g.node(x).and_then(|x| Ok((x, g.node(z)?)));
    let (x, z) = match nodes {
        Ok(n) => n,
        Err(e) => return from_cli(e.into()),
    };
    let k = u32::try_from(k_override).ok();
    match synthesize(g, x, z, k, &BuildConfig::default()) {
        Ok(s) => {
            *out = Box::into_raw(Box::new(MatScm { scm: s.scm }));
            MatStatus::Ok
        }
        Err(e) => from_cli(e.into()),
    }
}

/// Parses a model document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mat_scm_from_json(json: *const c_char, out: *mut *mut MatScm) -> MatStatus {
    if out.is_null() {
        return fail(MatStatus::NullPointer, "null output pointer");
    }
    *out = ptr::null_mut();
    let text = try_ffi!(read_str(json));
    match FiniteScm::from_json(text) {
        Ok(scm) => {
            *out = Box::into_raw(Box::new(MatScm { scm }));
            MatStatus::Ok
        }
        Err(e) => from_cli(e.into()),
    }
}

/// # Safety
/// `m` must be NULL or a model handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mat_scm_free(m: *mut MatScm) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Serializes a model back to JSON.
///
/// # Safety
/// `m` must be a live model handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mat_scm_to_json(m: *const MatScm, out: *mut *mut c_char) -> MatStatus {
    if m.is_null() || out.is_null() {
        return fail(MatStatus::NullPointer, "null argument");
    }
    write_string(out, (*m).scm.to_json())
}

/// MEU over deterministic policies with the full scope, as `"p/q"`.
/// `budget` of 0 keeps the default.
///
/// # Safety
/// `m` must be a live model handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mat_scm_meu(m: *const MatScm, budget: u64, out: *mut *mut c_char) -> MatStatus {
    if m.is_null() || out.is_null() {
        return fail(MatStatus::NullPointer, "null argument");
    }
    let scm = &(*m).scm;
    let mut limits = SearchLimits::default();
    if budget > 0 {
        limits.budget = budget;
    }
    match meu(scm, &Scope::full(scm), &limits) {
        Ok(r) => write_string(out, materiality::scm::format_rational(&r.value)),
        Err(e) => from_cli(e.into()),
    }
}

/// Value of `context` for `decision` as a JSON object.
///
/// # Safety
/// `m` must be a live model handle, the names NUL-terminated strings and
/// `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mat_scm_voi(
    m: *const MatScm,
    decision: *const c_char,
    context: *const c_char,
    out: *mut *mut c_char,
) -> MatStatus {
    if m.is_null() || out.is_null() {
        return fail(MatStatus::NullPointer, "null argument");
    }
    let scm = &(*m).scm;
    let (x, z) = (try_ffi!(read_str(decision)), try_ffi!(read_str(context)));
    let vars = scm.var(x).and_then(|x| Ok((x, scm.var(z)?)));
    let (x, z) = match vars {
        Ok(v) => v,
        Err(e) => return from_cli(e.into()),
    };
    match voi(scm, &Scope::full(scm), x, z, &SearchLimits::default()) {
        Ok(r) => write_string(
            out,
            json!({
                "meu_with": rational_json(&r.with.value),
                "meu_without": rational_json(&r.without.value),
                "voi": rational_json(&r.value),
            })
            .to_string(),
        ),
        Err(e) => from_cli(e.into()),
    }
}
