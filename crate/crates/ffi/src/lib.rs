//! C ABI for the plansage recommender.
//!
//! An engine is an opaque handle over one immutable catalog snapshot. Every
//! fallible call returns a [`PsStatus`]; on failure a message is available
//! from [`ps_last_error`] on the same thread. Strings handed out by this
//! library must be released with [`ps_string_free`].
//!
//! The recommend payload is the same JSON the HTTP service returns.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use plansage::catalog::{CatalogError, FeatureVector, SchemaId};
use plansage::compare::compare_seeded;
use plansage::pipeline::{RecommendError, RecommendationRequest, Snapshot};
use plansage::simeng::{self, Metric, SimError};

/// Result codes shared by every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    IoError = 3,
    MalformedFile = 4,
    SchemaViolation = 5,
    EmptyCatalog = 6,
    InvalidRequest = 7,
    EmptyPreference = 8,
    ZeroVector = 9,
    DimensionMismatch = 10,
    InvalidArgument = 11,
    Panic = 99,
}

/// Opaque engine handle.
pub struct PsEngine {
    snapshot: Snapshot,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let msg = CString::new(message.into().replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: PsStatus, message: impl Into<String>) -> PsStatus {
    set_error(message);
    status
}

fn catalog_status(e: &CatalogError) -> PsStatus {
    match e {
        CatalogError::Io { .. } => PsStatus::IoError,
        CatalogError::MalformedFile { .. } => PsStatus::MalformedFile,
        CatalogError::SchemaViolation { .. } => PsStatus::SchemaViolation,
        CatalogError::EmptyCatalog => PsStatus::EmptyCatalog,
    }
}

fn guarded(f: impl FnOnce() -> PsStatus) -> PsStatus {
    clear_error();
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(PsStatus::Panic, "internal panic"))
}

/// # Safety
/// `p` must be NULL or a valid NUL-terminated string.
unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, PsStatus> {
    if p.is_null() {
        return Err(fail(PsStatus::NullArgument, format!("{name} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(PsStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

fn hand_out(s: String, out: *mut *mut c_char) -> PsStatus {
    match CString::new(s) {
        Ok(c) => {
            // SAFETY: callers check `out` for NULL before producing output.
            unsafe { *out = c.into_raw() };
            PsStatus::Ok
        }
        Err(_) => fail(PsStatus::Panic, "output contained a NUL byte"),
    }
}

/// Loads a catalog and ratings file into a new engine.
///
/// # Safety
/// Paths must be NUL-terminated strings; `out_engine` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_engine_open(
    catalog_path: *const c_char,
    ratings_path: *const c_char,
    out_engine: *mut *mut PsEngine,
) -> PsStatus {
    guarded(|| {
        if out_engine.is_null() {
            return fail(PsStatus::NullArgument, "out_engine is NULL");
        }
        *out_engine = ptr::null_mut();
        let catalog = match read_str(catalog_path, "catalog_path") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let ratings = match read_str(ratings_path, "ratings_path") {
            Ok(s) => s,
            Err(status) => return status,
        };
        match Snapshot::load(catalog, ratings) {
            Ok(snapshot) => {
                *out_engine = Box::into_raw(Box::new(PsEngine { snapshot }));
                PsStatus::Ok
            }
            Err(e) => fail(catalog_status(&e), e.to_string()),
        }
    })
}

/// Releases an engine. NULL is ignored.
///
/// # Safety
/// `engine` must come from [`ps_engine_open`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ps_engine_free(engine: *mut PsEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Number of plans loaded; 0 for a NULL engine.
///
/// # Safety
/// `engine` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_engine_catalog_size(engine: *const PsEngine) -> usize {
    engine.as_ref().map_or(0, |e| e.snapshot.catalog().len())
}

/// Writes a newly allocated copy of the snapshot's schema id to `out`.
///
/// # Safety
/// `engine` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_engine_schema_id(engine: *const PsEngine, out: *mut *mut c_char) -> PsStatus {
    guarded(|| {
        let Some(engine) = engine.as_ref() else {
            return fail(PsStatus::NullArgument, "engine is NULL");
        };
        if out.is_null() {
            return fail(PsStatus::NullArgument, "out is NULL");
        }
        hand_out(engine.snapshot.schema_id().to_string(), out)
    })
}

/// Runs a recommendation. `request_json` has the HTTP request body shape:
/// `{"preference": {...}, "metric": "cosine"|"knn", "pool_size": n}`.
///
/// An empty result is `PS_STATUS_OK` with `"code":"no_candidates"` in the payload.
///
/// # Safety
/// `engine` must be a live handle, `request_json` NUL-terminated, `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_recommend(
    engine: *const PsEngine,
    request_json: *const c_char,
    out_json: *mut *mut c_char,
) -> PsStatus {
    guarded(|| {
        let Some(engine) = engine.as_ref() else {
            return fail(PsStatus::NullArgument, "engine is NULL");
        };
        if out_json.is_null() {
            return fail(PsStatus::NullArgument, "out_json is NULL");
        }
        *out_json = ptr::null_mut();
        let text = match read_str(request_json, "request_json") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let value: serde_json::Value = match serde_json::from_str(text) {
            Ok(v) => v,
            Err(e) => return fail(PsStatus::InvalidRequest, format!("body: {e}")),
        };
        let request = match RecommendationRequest::from_json(&value, Metric::Cosine) {
            Ok(r) => r,
            Err(errors) => {
                let msg = errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
                return fail(PsStatus::InvalidRequest, msg);
            }
        };
        match engine.snapshot.respond(&request) {
            Ok(resp) => hand_out(resp.to_json(), out_json),
            Err(e @ RecommendError::EmptyPreference) => fail(PsStatus::EmptyPreference, e.to_string()),
            Err(e) => fail(PsStatus::Panic, e.to_string()),
        }
    })
}

/// Runs the cosine-vs-KNN agreement harness and writes the JSON report.
///
/// # Safety
/// `engine` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_compare(
    engine: *const PsEngine,
    trials: u64,
    seed: u64,
    out_json: *mut *mut c_char,
) -> PsStatus {
    guarded(|| {
        let Some(engine) = engine.as_ref() else {
            return fail(PsStatus::NullArgument, "engine is NULL");
        };
        if out_json.is_null() {
            return fail(PsStatus::NullArgument, "out_json is NULL");
        }
        if trials == 0 {
            return fail(PsStatus::InvalidArgument, "trials must be at least 1");
        }
        hand_out(
            compare_seeded(&engine.snapshot, trials as usize, seed).to_json(),
            out_json,
        )
    })
}

const RAW_SCHEMA: &str = "ffi-raw";

unsafe fn vectors(a: *const f64, b: *const f64, len: usize) -> Result<(FeatureVector, FeatureVector), PsStatus> {
    if a.is_null() || b.is_null() {
        return Err(fail(PsStatus::NullArgument, "vector pointer is NULL"));
    }
    let make = |p: *const f64| {
        FeatureVector::new(std::slice::from_raw_parts(p, len).to_vec(), SchemaId::new(RAW_SCHEMA))
            .ok_or_else(|| fail(PsStatus::InvalidArgument, "vector contains NaN or infinity"))
    };
    Ok((make(a)?, make(b)?))
}

fn sim_status(e: &SimError) -> PsStatus {
    match e {
        SimError::ZeroVector => PsStatus::ZeroVector,
        SimError::DimensionMismatch { .. } | SimError::SchemaMismatch { .. } => PsStatus::DimensionMismatch,
        SimError::InvalidK => PsStatus::InvalidArgument,
    }
}

/// Cosine similarity of two `len`-element vectors.
///
/// # Safety
/// `a` and `b` must each point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_cosine_similarity(a: *const f64, b: *const f64, len: usize, out: *mut f64) -> PsStatus {
    guarded(|| {
        if out.is_null() {
            return fail(PsStatus::NullArgument, "out is NULL");
        }
        let (a, b) = match vectors(a, b, len) {
            Ok(v) => v,
            Err(status) => return status,
        };
        match simeng::cosine_similarity(&a, &b) {
            Ok(v) => {
                *out = v;
                PsStatus::Ok
            }
            Err(e) => fail(sim_status(&e), e.to_string()),
        }
    })
}

/// Euclidean distance between two `len`-element vectors.
///
/// # Safety
/// `a` and `b` must each point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_euclidean_distance(a: *const f64, b: *const f64, len: usize, out: *mut f64) -> PsStatus {
    guarded(|| {
        if out.is_null() {
            return fail(PsStatus::NullArgument, "out is NULL");
        }
        let (a, b) = match vectors(a, b, len) {
            Ok(v) => v,
            Err(status) => return status,
        };
        match simeng::euclidean_distance(&a, &b) {
            Ok(v) => {
                *out = v;
                PsStatus::Ok
            }
            Err(e) => fail(sim_status(&e), e.to_string()),
        }
    })
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ps_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ps_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn ps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
