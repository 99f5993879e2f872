//! C ABI over the selection engine.
//!
//! Every function returns a [`ProcselStatus`]. On failure a message is kept
//! per thread and can be read with [`procsel_last_error`]. Strings handed out
//! through `out` parameters are owned by the caller and must be released with
//! [`procsel_string_free`]. No function unwinds across the boundary; a Rust
//! panic is reported as `PROCSEL_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use procsel::bpmn::{bind_requirements, parse_bpmn};
use procsel::config::{AppConfig, ConfigPatch};
use procsel::lexicon::SynonymLexicon;
use procsel::registry::ServiceRegistry;
use procsel::report::{explain, ExplainError, SelectionReport};
use procsel::serve::{find_service, handle_select, list_services, SelectRequest, ServerState};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcselStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Registry = 4,
    Bpmn = 5,
    Config = 6,
    Lexicon = 7,
    NotFound = 8,
    InvalidArgument = 9,
    Panic = 10,
}

/// Loaded registry, lexicon and configuration. Immutable once created, so
/// one engine may be shared between threads.
pub struct ProcselEngine {
    state: ServerState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(ProcselStatus, String);

impl From<procsel::Error> for Failure {
    fn from(e: procsel::Error) -> Self {
        use procsel::Error as E;
        let status = match &e {
            E::Lexicon(_) => ProcselStatus::Lexicon,
            E::Registry(_) | E::Wsdl(_) => ProcselStatus::Registry,
            E::Bpmn(_) | E::Bind(_) => ProcselStatus::Bpmn,
            E::Selection(_) | E::Config(_) => ProcselStatus::Config,
            E::Explain(ExplainError::Parse { .. }) => ProcselStatus::InvalidArgument,
            E::Explain(_) => ProcselStatus::NotFound,
            E::Io { .. } => ProcselStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

/// Runs `f`, recording any failure or panic.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ProcselStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ProcselStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| (*s).to_owned()))
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            ProcselStatus::Panic
        }
    }
}

/// Borrows a required C string.
///
/// # Safety
/// `p` must be null or point to a NUL-terminated string.
unsafe fn required<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(ProcselStatus::NullArgument, format!("`{what}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(ProcselStatus::InvalidUtf8, format!("`{what}` is not UTF-8: {e}")))
}

unsafe fn optional<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        required(p, what).map(Some)
    }
}

unsafe fn engine_ref<'a>(p: *const ProcselEngine) -> Result<&'a ProcselEngine, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(ProcselStatus::NullArgument, "`engine` is null".into()))
}

unsafe fn hand_out(out: *mut *mut c_char, text: String) -> Result<(), Failure> {
    let c = CString::new(text).map_err(|_| Failure(ProcselStatus::InvalidArgument, "output contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

fn check_out<T>(out: *mut *mut T) -> Result<(), Failure> {
    if out.is_null() {
        Err(Failure(ProcselStatus::NullArgument, "output pointer is null".into()))
    } else {
        Ok(())
    }
}

fn config_patch(json: &str) -> Result<ConfigPatch, Failure> {
    ConfigPatch::from_json(json, "<config>").map_err(|e| Failure(ProcselStatus::Config, e.to_string()))
}

/// Loads a registry file and creates an engine.
///
/// `lexicon_path` and `config_json` may be null. `config_json` uses the
/// config file format; its `registry` and `lexicon` entries are used when
/// the corresponding path argument is null.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn procsel_engine_new(
    registry_path: *const c_char,
    lexicon_path: *const c_char,
    config_json: *const c_char,
    out: *mut *mut ProcselEngine,
) -> ProcselStatus {
    guard(|| {
        check_out(out)?;
        *out = ptr::null_mut();
        let mut config = AppConfig::default();
        if let Some(json) = optional(config_json, "config_json")? {
            config = config_patch(json)?
                .apply(&config)
                .map_err(|e| Failure(ProcselStatus::Config, e.to_string()))?;
        }
        if let Some(p) = optional(registry_path, "registry_path")? {
            config.registry = Some(p.into());
        }
        if let Some(p) = optional(lexicon_path, "lexicon_path")? {
            config.lexicon = Some(p.into());
        }
        let registry_path = config
            .registry
            .clone()
            .ok_or_else(|| Failure(ProcselStatus::NullArgument, "no registry path given".into()))?;
        let registry = ServiceRegistry::load(&registry_path).map_err(|e| Failure::from(procsel::Error::from(e)))?;
        let lexicon = match &config.lexicon {
            Some(p) => SynonymLexicon::load(Path::new(p)).map_err(|e| Failure::from(procsel::Error::from(e)))?,
            None => SynonymLexicon::empty(),
        };
        let engine = Box::new(ProcselEngine {
            state: ServerState {
                registry,
                lexicon,
                config,
            },
        });
        *out = Box::into_raw(engine);
        Ok(())
    })
}

/// # Safety
/// `engine` must be null or come from [`procsel_engine_new`], and must not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn procsel_engine_free(engine: *mut ProcselEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Ranks candidates for a BPMN document. `config_json` (nullable) overrides
/// the engine's configuration for this call only. The JSON report is written
/// to `out_json`.
///
/// # Safety
/// See [`procsel_engine_new`].
#[no_mangle]
pub unsafe extern "C" fn procsel_engine_select(
    engine: *const ProcselEngine,
    bpmn_xml: *const c_char,
    config_json: *const c_char,
    out_json: *mut *mut c_char,
) -> ProcselStatus {
    guard(|| {
        check_out(out_json)?;
        *out_json = ptr::null_mut();
        let engine = engine_ref(engine)?;
        let bpmn = required(bpmn_xml, "bpmn_xml")?;
        let patch = optional(config_json, "config_json")?.map(config_patch).transpose()?;
        if let Some(p) = &patch {
            p.apply(&engine.state.config)
                .map_err(|e| Failure(ProcselStatus::Config, e.to_string()))?;
        }
        // Parse first so that BPMN problems get their own status.
        let process = parse_bpmn(bpmn).map_err(|e| Failure::from(procsel::Error::from(e)))?;
        bind_requirements(&process).map_err(|e| Failure::from(procsel::Error::from(e)))?;
        let req = SelectRequest {
            bpmn: bpmn.to_owned(),
            config: patch,
        };
        let report = handle_select(&engine.state, &req).map_err(|e| Failure(ProcselStatus::Config, e.message))?;
        hand_out(out_json, report.to_json())
    })
}

/// Writes a JSON array summarizing every registered service.
///
/// # Safety
/// See [`procsel_engine_new`].
#[no_mangle]
pub unsafe extern "C" fn procsel_engine_services_json(
    engine: *const ProcselEngine,
    out_json: *mut *mut c_char,
) -> ProcselStatus {
    guard(|| {
        check_out(out_json)?;
        *out_json = ptr::null_mut();
        let engine = engine_ref(engine)?;
        let json = serde_json::to_string_pretty(&list_services(&engine.state)).expect("summaries serialize");
        hand_out(out_json, json)
    })
}

/// Writes the full record of one service as JSON.
///
/// # Safety
/// See [`procsel_engine_new`].
#[no_mangle]
pub unsafe extern "C" fn procsel_engine_service_json(
    engine: *const ProcselEngine,
    service_key: *const c_char,
    out_json: *mut *mut c_char,
) -> ProcselStatus {
    guard(|| {
        check_out(out_json)?;
        *out_json = ptr::null_mut();
        let engine = engine_ref(engine)?;
        let key = required(service_key, "service_key")?;
        let svc = find_service(&engine.state, key).map_err(|e| Failure(ProcselStatus::NotFound, e.message))?;
        hand_out(out_json, serde_json::to_string_pretty(svc).expect("service serializes"))
    })
}

/// Parses a BPMN document and binds its tasks. On success, writes the task
/// requirements as a JSON array to `out_json` unless it is null.
///
/// # Safety
/// See [`procsel_engine_new`].
#[no_mangle]
pub unsafe extern "C" fn procsel_validate_bpmn(bpmn_xml: *const c_char, out_json: *mut *mut c_char) -> ProcselStatus {
    guard(|| {
        if !out_json.is_null() {
            *out_json = ptr::null_mut();
        }
        let bpmn = required(bpmn_xml, "bpmn_xml")?;
        let process = parse_bpmn(bpmn).map_err(|e| Failure::from(procsel::Error::from(e)))?;
        let reqs = bind_requirements(&process).map_err(|e| Failure::from(procsel::Error::from(e)))?;
        if !out_json.is_null() {
            hand_out(out_json, serde_json::to_string_pretty(&reqs).expect("requirements serialize"))?;
        }
        Ok(())
    })
}

/// Explains how candidate `rank` (1-based) of `task_id` was scored, given
/// a report produced by [`procsel_engine_select`].
///
/// # Safety
/// See [`procsel_engine_new`].
#[no_mangle]
pub unsafe extern "C" fn procsel_explain(
    report_json: *const c_char,
    task_id: *const c_char,
    rank: usize,
    out_text: *mut *mut c_char,
) -> ProcselStatus {
    guard(|| {
        check_out(out_text)?;
        *out_text = ptr::null_mut();
        let report = SelectionReport::from_json(required(report_json, "report_json")?)
            .map_err(|e| Failure::from(procsel::Error::from(e)))?;
        let text = explain(&report, required(task_id, "task_id")?, rank)
            .map_err(|e| Failure::from(procsel::Error::from(e)))?;
        hand_out(out_text, text)
    })
}

/// Message describing the last failure on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn procsel_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, freed only once.
#[no_mangle]
pub unsafe extern "C" fn procsel_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn procsel_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
