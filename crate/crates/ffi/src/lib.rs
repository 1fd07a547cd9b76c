//! C ABI over the slotcast predictor.
//!
//! Every fallible function returns a [`SlotcastStatus`]; on failure the
//! message is available from [`slotcast_last_error_message`] on the same
//! thread. Bundles are opaque handles released with
//! [`slotcast_bundle_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use slotcast::predictor::{load_bundle, ModelBundle, PredictionResult, Route};
use slotcast::sql::{analyze, OperatorWeights};
use slotcast::{Error, QueryRecord};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotcastStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    CorruptBundle = 4,
    VersionMismatch = 5,
    InvalidRecord = 6,
    PredictionFailed = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotcastRoute {
    Simple = 0,
    Complex = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotcastPrediction {
    /// Predicted slot-minutes, never negative.
    pub slot_min: f64,
    /// Raw regressor output in log1p space.
    pub log_space_value: f64,
    pub complexity_score: u64,
    pub route: SlotcastRoute,
}

/// Opaque loaded model bundle.
pub struct SlotcastBundle {
    inner: ModelBundle,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: SlotcastStatus, msg: impl Into<String>) -> SlotcastStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> SlotcastStatus {
    match e {
        Error::Io(_) => SlotcastStatus::Io,
        Error::BundleVersionMismatch { .. } => SlotcastStatus::VersionMismatch,
        Error::CorruptBundle(_) => SlotcastStatus::CorruptBundle,
        _ => SlotcastStatus::PredictionFailed,
    }
}

fn guarded(f: impl FnOnce() -> SlotcastStatus) -> SlotcastStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(SlotcastStatus::Panic, "internal panic"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, SlotcastStatus> {
    if p.is_null() {
        return Err(fail(SlotcastStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SlotcastStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

fn to_c(p: &PredictionResult) -> SlotcastPrediction {
    SlotcastPrediction {
        slot_min: p.slot_min,
        log_space_value: p.log_space_value,
        complexity_score: p.complexity_score,
        route: match p.route {
            Route::Simple => SlotcastRoute::Simple,
            Route::Complex => SlotcastRoute::Complex,
        },
    }
}

/// Loads a bundle file. On success `*out` owns a handle that must be
/// released with `slotcast_bundle_free`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn slotcast_bundle_load(path: *const c_char, out: *mut *mut SlotcastBundle) -> SlotcastStatus {
    guarded(|| {
        if out.is_null() {
            return fail(SlotcastStatus::NullArgument, "out is null");
        }
        *out = ptr::null_mut();
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_bundle(path) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(SlotcastBundle { inner }));
                SlotcastStatus::Ok
            }
            Err(e) => fail(status_of(&e), format!("{path}: {e}")),
        }
    })
}

/// Releases a bundle handle. Null is ignored.
///
/// # Safety
/// `bundle` must come from `slotcast_bundle_load` and not be used again.
#[no_mangle]
pub unsafe extern "C" fn slotcast_bundle_free(bundle: *mut SlotcastBundle) {
    if !bundle.is_null() {
        drop(Box::from_raw(bundle));
    }
}

unsafe fn predict_into(
    bundle: *const SlotcastBundle,
    out: *mut SlotcastPrediction,
    record: impl FnOnce() -> Result<QueryRecord, SlotcastStatus>,
) -> SlotcastStatus {
    guarded(|| {
        if bundle.is_null() || out.is_null() {
            return fail(SlotcastStatus::NullArgument, "bundle or out is null");
        }
        let record = match record() {
            Ok(r) => r,
            Err(s) => return s,
        };
        match (*bundle).inner.predict(&record) {
            Ok(p) => {
                *out = to_c(&p);
                SlotcastStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Predicts a bare SQL string with no volume or tenant metadata.
///
/// # Safety
/// `bundle` must be a live handle, `sql` NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn slotcast_predict_sql(
    bundle: *const SlotcastBundle,
    sql: *const c_char,
    out: *mut SlotcastPrediction,
) -> SlotcastStatus {
    predict_into(bundle, out, || str_arg(sql, "sql").map(QueryRecord::from_sql))
}

/// Predicts one record given as a JSON object in the ingest schema.
///
/// # Safety
/// `bundle` must be a live handle, `json` NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn slotcast_predict_record_json(
    bundle: *const SlotcastBundle,
    json: *const c_char,
    out: *mut SlotcastPrediction,
) -> SlotcastStatus {
    predict_into(bundle, out, || {
        let text = str_arg(json, "json")?;
        serde_json::from_str(text).map_err(|e| fail(SlotcastStatus::InvalidRecord, format!("record: {e}")))
    })
}

/// Complexity score of `sql` under the default operator weights.
///
/// # Safety
/// `sql` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn slotcast_complexity_score(sql: *const c_char, out: *mut u64) -> SlotcastStatus {
    guarded(|| {
        if out.is_null() {
            return fail(SlotcastStatus::NullArgument, "out is null");
        }
        match str_arg(sql, "sql") {
            Ok(s) => {
                *out = analyze(s, &OperatorWeights::default()).score;
                SlotcastStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn slotcast_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn slotcast_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
