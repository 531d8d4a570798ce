//! C ABI over the optic student classifier and the pure text utilities.
//!
//! Every fallible function returns an [`OpticStatus`]; on failure a message
//! is available from [`optic_last_error`] on the same thread. Strings
//! returned through out-parameters are owned by the caller and must be
//! released with [`optic_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use optic::corpus::{clean, Label};
use optic::evaluation::{confusion, metrics};
use optic::student::{load_model, StudentModel};
use optic::teacher::{parse_verdict, render_zero_shot, PromptKind};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpticStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    InvalidModel = 4,
    InvalidArgument = 5,
    ParseFailure = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpticLabel {
    Admin = 0,
    Clinical = 1,
}

impl From<Label> for OpticLabel {
    fn from(l: Label) -> Self {
        match l {
            Label::Admin => OpticLabel::Admin,
            Label::Clinical => OpticLabel::Clinical,
        }
    }
}

/// Metrics with the positive class given by the caller. Slots that are
/// undefined for the input (a zero denominator) hold NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct OpticMetrics {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub precision: f64,
    pub f1: f64,
}

/// Opaque handle to a loaded student model.
pub struct OpticModel {
    model: StudentModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(OpticStatus, String);

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OpticStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            OpticStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            OpticStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(OpticStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(OpticStatus::InvalidUtf8, format!("{what}: {e}")))
}

fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: non-null checked; the caller guarantees it is valid for writes
    unsafe { p.as_mut() }.ok_or_else(|| Failure(OpticStatus::NullPointer, format!("{what} is null")))
}

fn owned(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(OpticStatus::InvalidArgument, "string contains NUL".into()))
}

fn label_from_int(v: i32) -> Result<Label, Failure> {
    match v {
        0 => Ok(Label::Admin),
        1 => Ok(Label::Clinical),
        other => Err(Failure(OpticStatus::InvalidArgument, format!("{other} is not a label"))),
    }
}

fn model_ref<'a>(m: *const OpticModel) -> Result<&'a StudentModel, Failure> {
    // SAFETY: handles only come from optic_model_load
    unsafe { m.as_ref() }
        .map(|h| &h.model)
        .ok_or_else(|| Failure(OpticStatus::NullPointer, "model is null".into()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn optic_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn optic_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn optic_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a model file, verifying its checksum and format version.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_model` must be writable.
#[no_mangle]
pub unsafe extern "C" fn optic_model_load(path: *const c_char, out_model: *mut *mut OpticModel) -> OpticStatus {
    guard(|| {
        let out_model = out(out_model, "out_model")?;
        *out_model = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let model = load_model(Path::new(path)).map_err(|e| {
            let status = match e {
                optic::student::StudentError::Io(_) => OpticStatus::Io,
                _ => OpticStatus::InvalidModel,
            };
            Failure(status, format!("{path}: {e}"))
        })?;
        *out_model = Box::into_raw(Box::new(OpticModel { model }));
        Ok(())
    })
}

/// Releases a model handle. NULL is ignored.
///
/// # Safety
/// `model` must come from [`optic_model_load`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn optic_model_free(model: *mut OpticModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Probability that `text` is Clinical.
///
/// # Safety
/// `model` must be a live handle, `text` NUL-terminated, `out_score` writable.
#[no_mangle]
pub unsafe extern "C" fn optic_model_score(model: *const OpticModel, text: *const c_char, out_score: *mut f64) -> OpticStatus {
    guard(|| {
        let model = model_ref(model)?;
        let out_score = out(out_score, "out_score")?;
        *out_score = model.predict_score(str_arg(text, "text")?);
        Ok(())
    })
}

/// Label and score for `text` (Clinical when the score is at least 0.5).
/// `out_score` may be NULL.
///
/// # Safety
/// As for [`optic_model_score`]; `out_label` must be writable.
#[no_mangle]
pub unsafe extern "C" fn optic_model_label(
    model: *const OpticModel,
    text: *const c_char,
    out_label: *mut OpticLabel,
    out_score: *mut f64,
) -> OpticStatus {
    guard(|| {
        let model = model_ref(model)?;
        let out_label = out(out_label, "out_label")?;
        let score = model.predict_score(str_arg(text, "text")?);
        *out_label = optic::student::label_for_score(score).into();
        if let Some(s) = out_score.as_mut() {
            *s = score;
        }
        Ok(())
    })
}

/// Model version string (`<format>+<fingerprint prefix>`), caller-owned.
///
/// # Safety
/// `model` must be a live handle; `out_version` must be writable.
#[no_mangle]
pub unsafe extern "C" fn optic_model_version(model: *const OpticModel, out_version: *mut *mut c_char) -> OpticStatus {
    guard(|| {
        let model = model_ref(model)?;
        let out_version = out(out_version, "out_version")?;
        *out_version = owned(model.model_version())?;
        Ok(())
    })
}

/// The normalized classification text for a subject and body.
///
/// # Safety
/// Inputs must be NUL-terminated; `out_text` must be writable.
#[no_mangle]
pub unsafe extern "C" fn optic_clean_text(
    subject: *const c_char,
    body: *const c_char,
    out_text: *mut *mut c_char,
) -> OpticStatus {
    guard(|| {
        let out_text = out(out_text, "out_text")?;
        *out_text = owned(clean(str_arg(subject, "subject")?, str_arg(body, "body")?))?;
        Ok(())
    })
}

/// Full zero-shot prompt for a message, caller-owned.
///
/// # Safety
/// `message` must be NUL-terminated; `out_prompt` must be writable.
#[no_mangle]
pub unsafe extern "C" fn optic_render_zero_shot(message: *const c_char, out_prompt: *mut *mut c_char) -> OpticStatus {
    guard(|| {
        let out_prompt = out(out_prompt, "out_prompt")?;
        let rendered = render_zero_shot(str_arg(message, "message")?)
            .map_err(|e| Failure(OpticStatus::InvalidArgument, e.to_string()))?;
        *out_prompt = owned(rendered)?;
        Ok(())
    })
}

/// Reads a teacher response. Returns `ParseFailure` when no label or no
/// explanation can be read. `out_explanation` may be NULL; otherwise it
/// receives a caller-owned string.
///
/// # Safety
/// `raw` must be NUL-terminated; `out_label` must be writable.
#[no_mangle]
pub unsafe extern "C" fn optic_parse_verdict(
    raw: *const c_char,
    out_label: *mut OpticLabel,
    out_explanation: *mut *mut c_char,
) -> OpticStatus {
    guard(|| {
        let out_label = out(out_label, "out_label")?;
        if let Some(e) = out_explanation.as_mut() {
            *e = ptr::null_mut();
        }
        let v = parse_verdict(str_arg(raw, "raw")?, "", "", PromptKind::ZeroShot)
            .map_err(|f| Failure(OpticStatus::ParseFailure, f.reason))?;
        *out_label = v.label.into();
        if let Some(e) = out_explanation.as_mut() {
            *e = owned(v.explanation)?;
        }
        Ok(())
    })
}

/// Confusion counts and metrics for `n` paired predictions and gold labels,
/// given as `OpticLabel` values.
///
/// # Safety
/// `predictions` and `golds` must each point to `n` labels; `out_metrics`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn optic_metrics(
    predictions: *const i32,
    golds: *const i32,
    n: usize,
    positive: i32,
    out_metrics: *mut OpticMetrics,
) -> OpticStatus {
    guard(|| {
        let out_metrics = out(out_metrics, "out_metrics")?;
        if n == 0 {
            return Err(Failure(OpticStatus::InvalidArgument, "no labels".into()));
        }
        if predictions.is_null() || golds.is_null() {
            return Err(Failure(OpticStatus::NullPointer, "label array is null".into()));
        }
        let labels = |p: *const i32| -> Result<Vec<Label>, Failure> {
            std::slice::from_raw_parts(p, n).iter().map(|&v| label_from_int(v)).collect()
        };
        let cm = confusion(&labels(predictions)?, &labels(golds)?, label_from_int(positive)?)
            .map_err(|e| Failure(OpticStatus::InvalidArgument, e.to_string()))?;
        let m = metrics(&cm).map_err(|e| Failure(OpticStatus::InvalidArgument, e.to_string()))?;
        *out_metrics = OpticMetrics {
            tp: cm.tp as u64,
            fp: cm.fp as u64,
            fn_: cm.fn_ as u64,
            tn: cm.tn as u64,
            accuracy: m.accuracy,
            sensitivity: m.sensitivity.unwrap_or(f64::NAN),
            specificity: m.specificity.unwrap_or(f64::NAN),
            precision: m.precision.unwrap_or(f64::NAN),
            f1: m.f1.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}
