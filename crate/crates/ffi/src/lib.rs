//! C ABI over `veritas-core`.
//!
//! Structured values cross the boundary as UTF-8 JSON strings. Strings
//! returned through an out-pointer are owned by the caller and must be
//! released with [`veritas_string_free`]. Every fallible call returns a
//! [`VeritasStatus`]; on failure [`veritas_last_error_message`] describes
//! the most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use veritas_core::config::PipelineConfig;
use veritas_core::eval::{self, golden, wilson_interval};
use veritas_core::pipeline::Pipeline;
use veritas_core::provenance::SourceBundle;
use veritas_core::synthgen::{generate_dataset, Taxonomy};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VeritasStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidJson = 3,
    Validation = 4,
    Io = 5,
    GoldenMismatch = 6,
    Internal = 7,
}

/// Opaque pipeline handle. Holds the per-patient decision history, so
/// epochs for one patient must be submitted in timestamp order.
pub struct VeritasPipeline {
    inner: Pipeline,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<String>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg.into()));
}

struct Failure(VeritasStatus, String);

type Outcome<T> = Result<T, Failure>;

fn fail<T>(status: VeritasStatus, msg: impl Into<String>) -> Outcome<T> {
    Err(Failure(status, msg.into()))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Outcome<()>) -> VeritasStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            VeritasStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            VeritasStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Outcome<&'a str> {
    if p.is_null() {
        return fail(VeritasStatus::NullPointer, format!("{name} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(VeritasStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

fn to_c_string(s: String) -> Outcome<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .or_else(|_| fail(VeritasStatus::Internal, "output contains a NUL byte"))
}

unsafe fn write_out(out: *mut *mut c_char, s: String) -> Outcome<()> {
    *out = to_c_string(s)?;
    Ok(())
}

fn check_out<T>(out: *mut T) -> Outcome<()> {
    if out.is_null() {
        return fail(VeritasStatus::NullPointer, "output pointer is null");
    }
    Ok(())
}

/// Library version as a static NUL-terminated string. Do not free.
#[no_mangle]
pub extern "C" fn veritas_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy of the last error message on this thread, or NULL if the last call
/// succeeded. Free with `veritas_string_free`.
#[no_mangle]
pub extern "C" fn veritas_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| match e.borrow().as_deref() {
        Some(m) => CString::new(m.replace('\0', " ")).map(CString::into_raw).unwrap_or(ptr::null_mut()),
        None => ptr::null_mut(),
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a pointer obtained from this library that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn veritas_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates a pipeline. `config_json` is a pipeline config document, or NULL
/// for the reference configuration.
///
/// # Safety
/// `config_json` must be NULL or a valid NUL-terminated string; `out` must
/// be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn veritas_pipeline_new(config_json: *const c_char, out: *mut *mut VeritasPipeline) -> VeritasStatus {
    guard(|| {
        check_out(out)?;
        let cfg = if config_json.is_null() {
            PipelineConfig::reference()
        } else {
            let text = str_arg(config_json, "config_json")?;
            let cfg: PipelineConfig = serde_json::from_str(text)
                .or_else(|e| fail(VeritasStatus::InvalidJson, format!("config: {e}")))?;
            cfg.validate().or_else(|e| fail(VeritasStatus::Validation, e.to_string()))?;
            cfg
        };
        *out = Box::into_raw(Box::new(VeritasPipeline {
            inner: Pipeline::from_config(&cfg),
        }));
        Ok(())
    })
}

/// Destroys a pipeline. NULL is ignored.
///
/// # Safety
/// `p` must be NULL or a handle from `veritas_pipeline_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn veritas_pipeline_free(p: *mut VeritasPipeline) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Runs every epoch in a source bundle through the pipeline.
///
/// `bundle_json` is `{"ehr": {...}, "vitals_stream": [...],
/// "conversation_log": [...], "patient_reported": [...]}` (the last two
/// optional). On success `*out_json` receives a JSON array with one trace
/// per distinct epoch timestamp.
///
/// # Safety
/// `p` must be a live handle, `bundle_json` a valid NUL-terminated string
/// and `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn veritas_pipeline_process(
    p: *mut VeritasPipeline,
    bundle_json: *const c_char,
    out_json: *mut *mut c_char,
) -> VeritasStatus {
    guard(|| {
        check_out(out_json)?;
        let Some(p) = p.as_mut() else {
            return fail(VeritasStatus::NullPointer, "pipeline is null");
        };
        let bundle: SourceBundle = serde_json::from_str(str_arg(bundle_json, "bundle_json")?)
            .or_else(|e| fail(VeritasStatus::InvalidJson, format!("bundle: {e}")))?;
        let traces = p
            .inner
            .process_all(&bundle)
            .or_else(|e| fail(VeritasStatus::Validation, e.to_string()))?;
        write_out(out_json, serde_json::to_string(&traces).expect("traces serialize"))
    })
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
///
/// # Safety
/// `lower` and `upper` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn veritas_wilson_interval(
    successes: u64,
    n: u64,
    z: f64,
    lower: *mut f64,
    upper: *mut f64,
) -> VeritasStatus {
    guard(|| {
        check_out(lower)?;
        check_out(upper)?;
        if !(z.is_finite() && z > 0.0) {
            return fail(VeritasStatus::Validation, "z must be positive and finite");
        }
        let i = wilson_interval(successes, n, z).or_else(|e| fail(VeritasStatus::Validation, e.to_string()))?;
        *lower = i.lower;
        *upper = i.upper;
        Ok(())
    })
}

/// Generates the dataset from the bundled catalogue with `seed`, evaluates
/// it at the reference configuration and writes the report JSON to
/// `*out_json`. With `golden_check` nonzero the call returns
/// `GoldenMismatch` (and still writes the report) when the metrics differ
/// from the reference run.
///
/// # Safety
/// `out_json` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn veritas_evaluate_shipped(seed: u64, golden_check: i32, out_json: *mut *mut c_char) -> VeritasStatus {
    guard(|| {
        check_out(out_json)?;
        let t = Taxonomy::shipped();
        let d = generate_dataset(&t, seed).or_else(|e| fail(VeritasStatus::Validation, e.to_string()))?;
        let ev = eval::evaluate(&d, &t, &PipelineConfig { seed, ..PipelineConfig::reference() })
            .or_else(|e| fail(VeritasStatus::Validation, e.to_string()))?;
        let json = String::from_utf8(ev.report.to_json()).expect("JSON is UTF-8");
        write_out(out_json, json)?;
        if golden_check != 0 {
            let problems = golden::golden_check(&ev.report);
            if !problems.is_empty() {
                return fail(VeritasStatus::GoldenMismatch, problems.join("; "));
            }
        }
        Ok(())
    })
}
