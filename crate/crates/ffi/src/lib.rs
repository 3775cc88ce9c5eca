//! C ABI over the nirisk engine.
//!
//! Handles are opaque and owned by the caller: everything returned through an
//! `out` pointer must be released with the matching `*_free` function.
//! Structured inputs and outputs are UTF-8 JSON strings. Every function
//! returns a [`NiriskStatus`]; on failure a description is available from
//! [`nirisk_last_error`] on the same thread until the next call. Panics never
//! cross the boundary — they surface as [`NiriskStatus::Internal`].
//!
//! A tracker keeps its own reference to the model, so a model handle may be
//! freed while trackers made from it are still in use.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use nirisk::clinical::default_ground_truth;
use nirisk::dbn::{predict_trajectory, DbnError, DbnSpec, EvidenceTimeline, FilterState};
use nirisk::eval::{metrics, ConfusionMatrix};
use nirisk::pgm::{Assignment, PgmError};

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NiriskStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Malformed JSON or an out-of-domain number.
    InvalidArgument = 3,
    /// The model JSON does not describe a valid model.
    InvalidModel = 4,
    /// Unknown variable or state, or an observed result node.
    InvalidEvidence = 5,
    /// The evidence has probability zero under the model.
    ImpossibleEvidence = 6,
    /// An internal error or a caught panic.
    Internal = 7,
}

/// A loaded, validated model.
pub struct NiriskModel {
    spec: Arc<DbnSpec>,
}

/// One patient's forward-filter state.
pub struct NiriskTracker {
    spec: Arc<DbnSpec>,
    state: FilterState,
}

/// Classification rate and predictive values of a confusion matrix. A
/// predictive value whose denominator is zero has its `has_` flag cleared
/// and its value set to NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NiriskMetrics {
    pub accuracy: f64,
    pub ppv: f64,
    pub npv: f64,
    pub has_ppv: bool,
    pub has_npv: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(NiriskStatus, String);

impl From<DbnError> for Failure {
    fn from(e: DbnError) -> Self {
        let status = match &e {
            DbnError::Network(PgmError::ImpossibleEvidence) => NiriskStatus::ImpossibleEvidence,
            DbnError::Network(PgmError::UnknownVariable(_) | PgmError::InvalidState { .. }) | DbnError::ResultObserved(_) => {
                NiriskStatus::InvalidEvidence
            }
            _ => NiriskStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NiriskStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NiriskStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(panic) => {
            let what = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal error: {what}"));
            NiriskStatus::Internal
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(NiriskStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure(NiriskStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

/// Parses a JSON argument; a null pointer means an empty object.
unsafe fn json_or_empty<T: serde::de::DeserializeOwned + Default>(ptr: *const c_char, what: &str) -> Result<T, Failure> {
    if ptr.is_null() {
        return Ok(T::default());
    }
    serde_json::from_str(text(ptr, what)?).map_err(|e| Failure(NiriskStatus::InvalidArgument, format!("{what}: {e}")))
}

unsafe fn out<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or_else(|| null(what))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nirisk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null after a
/// successful call. Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn nirisk_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Loads a model from its JSON text.
///
/// # Safety
/// `json` must be null or a NUL-terminated string; `out_model` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn nirisk_model_from_json(json: *const c_char, out_model: *mut *mut NiriskModel) -> NiriskStatus {
    guard(|| {
        let slot = out(out_model, "out_model")?;
        let spec = DbnSpec::from_json(text(json, "json")?).map_err(|e| Failure(NiriskStatus::InvalidModel, e.to_string()))?;
        *slot = Box::into_raw(Box::new(NiriskModel { spec: Arc::new(spec) }));
        Ok(())
    })
}

/// The built-in clinical model.
///
/// # Safety
/// `out_model` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn nirisk_model_default(out_model: *mut *mut NiriskModel) -> NiriskStatus {
    guard(|| {
        let slot = out(out_model, "out_model")?;
        *slot = Box::into_raw(Box::new(NiriskModel {
            spec: Arc::new(default_ground_truth()),
        }));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nirisk_model_free(model: *mut NiriskModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Serializes the model back to JSON. Free the string with
/// [`nirisk_string_free`].
///
/// # Safety
/// `model` must be a live handle; `out_json` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn nirisk_model_to_json(model: *const NiriskModel, out_json: *mut *mut c_char) -> NiriskStatus {
    guard(|| {
        let slot = out(out_json, "out_json")?;
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        *slot = into_c_string(model.spec.to_json())?;
        Ok(())
    })
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(NiriskStatus::Internal, "output contains a NUL byte".into()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nirisk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Starts a patient from admission observations, a JSON object mapping
/// static variable names to states (null means none).
///
/// # Safety
/// `model` must be a live handle; `static_json` null or a NUL-terminated
/// string; `out_tracker` null or writable.
#[no_mangle]
pub unsafe extern "C" fn nirisk_tracker_new(
    model: *const NiriskModel,
    static_json: *const c_char,
    out_tracker: *mut *mut NiriskTracker,
) -> NiriskStatus {
    guard(|| {
        let slot = out(out_tracker, "out_tracker")?;
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let evidence: Assignment = json_or_empty(static_json, "static_json")?;
        let state = FilterState::start(&model.spec, &evidence)?;
        *slot = Box::into_raw(Box::new(NiriskTracker {
            spec: Arc::clone(&model.spec),
            state,
        }));
        Ok(())
    })
}

/// Releases a tracker. Null is ignored.
///
/// # Safety
/// `tracker` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nirisk_tracker_free(tracker: *mut NiriskTracker) {
    if !tracker.is_null() {
        drop(Box::from_raw(tracker));
    }
}

/// Admission-time risk.
///
/// # Safety
/// `tracker` must be a live handle; `out_probability` null or writable.
#[no_mangle]
pub unsafe extern "C" fn nirisk_tracker_baseline(tracker: *const NiriskTracker, out_probability: *mut f64) -> NiriskStatus {
    guard(|| {
        let slot = out(out_probability, "out_probability")?;
        let t = tracker.as_ref().ok_or_else(|| null("tracker"))?;
        *slot = t.state.baseline(&t.spec)?;
        Ok(())
    })
}

/// Absorbs the next day's observations (JSON object, null means none) and
/// returns that day's risk. On failure the tracker is unchanged.
///
/// # Safety
/// `tracker` must be a live handle; `day_json` null or a NUL-terminated
/// string; `out_probability` null or writable.
#[no_mangle]
pub unsafe extern "C" fn nirisk_tracker_advance(
    tracker: *mut NiriskTracker,
    day_json: *const c_char,
    out_probability: *mut f64,
) -> NiriskStatus {
    guard(|| {
        let slot = out(out_probability, "out_probability")?;
        let t = tracker.as_mut().ok_or_else(|| null("tracker"))?;
        let obs: Assignment = json_or_empty(day_json, "day_json")?;
        let mut next = t.state.clone();
        let p = next.advance(&t.spec, &obs)?;
        t.state = next;
        *slot = p;
        Ok(())
    })
}

/// Risk of the next day under hypothetical observations; the tracker is not
/// changed.
///
/// # Safety
/// As for [`nirisk_tracker_advance`].
#[no_mangle]
pub unsafe extern "C" fn nirisk_tracker_peek(
    tracker: *const NiriskTracker,
    day_json: *const c_char,
    out_probability: *mut f64,
) -> NiriskStatus {
    guard(|| {
        let slot = out(out_probability, "out_probability")?;
        let t = tracker.as_ref().ok_or_else(|| null("tracker"))?;
        let obs: Assignment = json_or_empty(day_json, "day_json")?;
        *slot = t.state.peek(&t.spec, &obs)?;
        Ok(())
    })
}

/// Number of days absorbed so far.
///
/// # Safety
/// `tracker` must be a live handle; `out_day` null or writable.
#[no_mangle]
pub unsafe extern "C" fn nirisk_tracker_day(tracker: *const NiriskTracker, out_day: *mut usize) -> NiriskStatus {
    guard(|| {
        let slot = out(out_day, "out_day")?;
        let t = tracker.as_ref().ok_or_else(|| null("tracker"))?;
        *slot = t.state.day();
        Ok(())
    })
}

/// Whole trajectory of one timeline, `{"static": {...}, "days": [{...}]}`,
/// returned as `{"points": [{"day", "probability"}, ...]}`. Free the string
/// with [`nirisk_string_free`].
///
/// # Safety
/// `model` must be a live handle; `timeline_json` a NUL-terminated string;
/// `out_json` null or writable.
#[no_mangle]
pub unsafe extern "C" fn nirisk_predict_json(
    model: *const NiriskModel,
    timeline_json: *const c_char,
    out_json: *mut *mut c_char,
) -> NiriskStatus {
    guard(|| {
        let slot = out(out_json, "out_json")?;
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let timeline: EvidenceTimeline = serde_json::from_str(text(timeline_json, "timeline_json")?)
            .map_err(|e| Failure(NiriskStatus::InvalidArgument, format!("timeline_json: {e}")))?;
        let trace = predict_trajectory(&model.spec, &timeline)?;
        let json = serde_json::to_string(&trace).map_err(|e| Failure(NiriskStatus::Internal, e.to_string()))?;
        *slot = into_c_string(json)?;
        Ok(())
    })
}

/// Metrics of a confusion matrix given as cell counts.
///
/// # Safety
/// `out_metrics` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn nirisk_metrics(tn: u64, fp: u64, fn_: u64, tp: u64, out_metrics: *mut NiriskMetrics) -> NiriskStatus {
    guard(|| {
        let slot = out(out_metrics, "out_metrics")?;
        let r = metrics(&ConfusionMatrix::new(tn, fp, fn_, tp)).map_err(|e| Failure(NiriskStatus::InvalidArgument, e.to_string()))?;
        *slot = NiriskMetrics {
            accuracy: r.accuracy,
            ppv: r.ppv.unwrap_or(f64::NAN),
            npv: r.npv.unwrap_or(f64::NAN),
            has_ppv: r.ppv.is_some(),
            has_npv: r.npv.is_some(),
        };
        Ok(())
    })
}
