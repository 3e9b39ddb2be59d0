//! C ABI over `regime_core`.
//!
//! Models and diagrams are opaque handles owned by the caller and released
//! with their `_free` function. Every call returns a [`RegimeStatus`]; on
//! anything other than `Ok` the message is available from
//! [`regime_last_error`] on the same thread. Strings returned through out
//! pointers are heap allocated and must be released with
//! [`regime_string_free`]. Rationals cross the boundary as exact `"n/d"`
//! strings and reports as JSON.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use regime_core::conditions::{condition_report, Checker};
use regime_core::diagram::InfluenceDiagram;
use regime_core::dsl::{model_to_source, parse_ci, parse_diagram, parse_loss, parse_model};
use regime_core::fixtures::{fixture, verify_fixture};
use regime_core::grecursion::{consequence_brute_force, g_recursion, g_transfer, Transfer, TransferPolicy};
use regime_core::model::RegimeKind;
use regime_core::rational::fmt_exact;
use regime_core::strategy::{optimize, Mode};
use regime_core::Error;

/// Outcome of a call. The numeric values match the exit codes of the `regime` tool.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeStatus {
    Ok = 0,
    /// Transfer refused, or no strategy is identifiable.
    Refused = 1,
    /// Parse error, invalid model, unknown name or similar.
    InputError = 2,
    /// An observational conditional is undefined at a history the target regime reaches.
    Undefined = 3,
    /// A proven implication between conditions failed.
    Internal = 4,
    NullArgument = 5,
    InvalidUtf8 = 6,
    Panic = 7,
}

/// How [`regime_consequence`] computes the expected loss.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeMethod {
    /// Backward recursion on the regime's own kernels.
    Recursion = 0,
    /// Sum over the full joint distribution.
    BruteForce = 1,
    /// Observational nature kernels with the regime's actions, only if the checks pass.
    Transfer = 2,
    /// As `Transfer`, ignoring failed checks.
    TransferForced = 3,
}

/// Search space of [`regime_optimize`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeOptMode {
    Oracle = 0,
    Transfer = 1,
}

/// Opaque multi-regime model.
pub struct RegimeModel(regime_core::model::RegimeModel);

/// Opaque influence diagram.
pub struct RegimeDiagram(InfluenceDiagram);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("nul bytes removed")));
}

struct Fail(RegimeStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::UndefinedConditional { .. } => RegimeStatus::Undefined,
            Error::NotIdentifiable(_) => RegimeStatus::Refused,
            _ => RegimeStatus::InputError,
        };
        Fail(status, e.to_string())
    }
}

type Res<T> = Result<T, Fail>;

fn guard(f: impl FnOnce() -> Res<RegimeStatus>) -> RegimeStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_error(format!("panic: {msg}"));
            RegimeStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Res<&'a str> {
    if p.is_null() {
        return Err(Fail(RegimeStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(RegimeStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn opt_text<'a>(p: *const c_char, what: &str) -> Res<Option<&'a str>> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Res<&'a T> {
    p.as_ref()
        .ok_or_else(|| Fail(RegimeStatus::NullArgument, format!("{what} is null")))
}

fn check_out<T>(p: *mut T, what: &str) -> Res<()> {
    if p.is_null() {
        Err(Fail(RegimeStatus::NullArgument, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("nul bytes removed")
        .into_raw()
}

unsafe fn put_string(out: *mut *mut c_char, s: String) {
    if !out.is_null() {
        *out = c_string(s);
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable report")
}

fn regime_or_default(m: &regime_core::model::RegimeModel, regime: Option<&str>) -> Res<String> {
    match regime {
        Some(r) => {
            m.regime(r)?;
            Ok(r.to_string())
        }
        None => m
            .interventional()
            .next()
            .map(|r| r.id.clone())
            .ok_or_else(|| Error::Precondition("model has no interventional regime".to_string()).into()),
    }
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn regime_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn regime_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn regime_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses model text.
///
/// # Safety
/// `source` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn regime_model_parse(source: *const c_char, out: *mut *mut RegimeModel) -> RegimeStatus {
    guard(|| {
        check_out(out, "out")?;
        let m = parse_model(text(source, "source")?)?;
        *out = Box::into_raw(Box::new(RegimeModel(m)));
        Ok(RegimeStatus::Ok)
    })
}

/// Loads the model of a built-in fixture such as `"appb"` or `"cts(10)"`.
///
/// # Safety
/// `name` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn regime_model_fixture(name: *const c_char, out: *mut *mut RegimeModel) -> RegimeStatus {
    guard(|| {
        check_out(out, "out")?;
        let name = text(name, "name")?;
        let m = fixture(name)?
            .parse_model()?
            .ok_or_else(|| Error::Precondition(format!("fixture `{name}` has no model")))?;
        *out = Box::into_raw(Box::new(RegimeModel(m)));
        Ok(RegimeStatus::Ok)
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn regime_model_free(model: *mut RegimeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Canonical text of a model.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn regime_model_to_source(model: *const RegimeModel, out: *mut *mut c_char) -> RegimeStatus {
    guard(|| {
        check_out(out, "out")?;
        let m = handle(model, "model")?;
        *out = c_string(model_to_source(&m.0));
        Ok(RegimeStatus::Ok)
    })
}

/// Runs one condition, or every applicable one when `condition` is null or
/// `"all"`, for `regime` (null picks the first interventional regime).
/// `holds` receives the verdict; `report_json`, if not null, the full report.
/// Returns `Internal` when a proven implication is violated.
///
/// # Safety
/// Strings must be nul-terminated or null where allowed; `holds` must be writable.
#[no_mangle]
pub unsafe extern "C" fn regime_check(
    model: *const RegimeModel,
    regime: *const c_char,
    condition: *const c_char,
    holds: *mut bool,
    report_json: *mut *mut c_char,
) -> RegimeStatus {
    guard(|| {
        check_out(holds, "holds")?;
        let m = &handle(model, "model")?.0;
        let s = regime_or_default(m, opt_text(regime, "regime")?)?;
        if m.regime(&s)?.kind != RegimeKind::Interventional {
            return Err(Error::Precondition(format!("regime `{s}` is not interventional")).into());
        }
        match opt_text(condition, "condition")? {
            None | Some("all") => {
                let r = condition_report(m, &s)?;
                *holds = r.all_hold();
                put_string(report_json, json(&r));
                if r.internal_error {
                    set_error("a proven implication between conditions was violated");
                    return Ok(RegimeStatus::Internal);
                }
            }
            Some(c) => {
                let reports = Checker::new(m)?.check(c, &s)?;
                *holds = reports.iter().all(|r| r.holds);
                put_string(report_json, json(&reports));
            }
        }
        Ok(RegimeStatus::Ok)
    })
}

/// Expected loss of `regime` under the loss text (`"0=0, 1=1"` form).
/// `value` receives the exact value as `"n/d"`. A refused transfer returns
/// `Refused` and leaves `value` untouched.
///
/// # Safety
/// Strings must be nul-terminated; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn regime_consequence(
    model: *const RegimeModel,
    regime: *const c_char,
    loss: *const c_char,
    method: RegimeMethod,
    value: *mut *mut c_char,
) -> RegimeStatus {
    guard(|| {
        check_out(value, "value")?;
        let m = &handle(model, "model")?.0;
        let s = regime_or_default(m, opt_text(regime, "regime")?)?;
        let k = parse_loss(m, text(loss, "loss")?)?;
        let v = match method {
            RegimeMethod::Recursion => g_recursion(m, &s, &k)?,
            RegimeMethod::BruteForce => consequence_brute_force(m, &s, &k)?,
            RegimeMethod::Transfer | RegimeMethod::TransferForced => {
                let policy = if method == RegimeMethod::Transfer {
                    TransferPolicy::RequireChecks
                } else {
                    TransferPolicy::Force
                };
                match g_transfer(m, &s, &k, policy)? {
                    Transfer::Value { value, .. } => value,
                    Transfer::Refused { checks } => {
                        let failed: Vec<&str> = checks
                            .iter()
                            .filter(|c| !c.holds)
                            .map(|c| c.condition.as_str())
                            .collect();
                        return Err(Fail(
                            RegimeStatus::Refused,
                            format!("transfer refused: {} failed", failed.join(" and ")),
                        ));
                    }
                }
            }
        };
        *value = c_string(fmt_exact(&v));
        Ok(RegimeStatus::Ok)
    })
}

/// Evaluates every non-randomized strategy and writes the optimization
/// report as JSON.
///
/// # Safety
/// Strings must be nul-terminated; `report_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn regime_optimize(
    model: *const RegimeModel,
    loss: *const c_char,
    mode: RegimeOptMode,
    report_json: *mut *mut c_char,
) -> RegimeStatus {
    guard(|| {
        check_out(report_json, "report_json")?;
        let m = &handle(model, "model")?.0;
        let k = parse_loss(m, text(loss, "loss")?)?;
        let mode = match mode {
            RegimeOptMode::Oracle => Mode::Oracle,
            RegimeOptMode::Transfer => Mode::Transfer,
        };
        *report_json = c_string(json(&optimize(m, &k, mode)?));
        Ok(RegimeStatus::Ok)
    })
}

/// Parses diagram text.
///
/// # Safety
/// `source` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn regime_diagram_parse(source: *const c_char, out: *mut *mut RegimeDiagram) -> RegimeStatus {
    guard(|| {
        check_out(out, "out")?;
        let d = parse_diagram(text(source, "source")?)?;
        *out = Box::into_raw(Box::new(RegimeDiagram(d)));
        Ok(RegimeStatus::Ok)
    })
}

/// Releases a diagram. Null is ignored.
///
/// # Safety
/// `diagram` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn regime_diagram_free(diagram: *mut RegimeDiagram) {
    if !diagram.is_null() {
        drop(Box::from_raw(diagram));
    }
}

/// Whether the diagram implies a statement such as `"Y _||_ sigma | A"`.
/// When it does not and `active_path` is not null, it receives a path
/// witnessing the dependence.
///
/// # Safety
/// `statement` must be nul-terminated; `separated` must be writable.
#[no_mangle]
pub unsafe extern "C" fn regime_dsep(
    diagram: *const RegimeDiagram,
    statement: *const c_char,
    separated: *mut bool,
    active_path: *mut *mut c_char,
) -> RegimeStatus {
    guard(|| {
        check_out(separated, "separated")?;
        let d = &handle(diagram, "diagram")?.0;
        let stmt = parse_ci(text(statement, "statement")?)?;
        let sep = d.implies(&stmt)?;
        *separated = sep.separated;
        if let Some(p) = sep.active_path {
            put_string(active_path, p);
        }
        Ok(RegimeStatus::Ok)
    })
}

/// Verifies a built-in fixture against its documented values.
///
/// # Safety
/// `name` must be nul-terminated; `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn regime_fixture_verify(
    name: *const c_char,
    passed: *mut bool,
    report_json: *mut *mut c_char,
) -> RegimeStatus {
    guard(|| {
        check_out(passed, "passed")?;
        let v = verify_fixture(text(name, "name")?)?;
        *passed = v.passed;
        put_string(report_json, json(&v));
        Ok(RegimeStatus::Ok)
    })
}

/// Runs the `regime` command line in process. `argv[0]` is the program
/// name. Standard output and standard error are captured into `out` and
/// `err` when those are not null. Returns the exit code, or -1 if the
/// arguments are unreadable.
///
/// # Safety
/// `argv` must hold `argc` nul-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn regime_cli_run(
    argc: usize,
    argv: *const *const c_char,
    out: *mut *mut c_char,
    err: *mut *mut c_char,
) -> i32 {
    let mut code = -1;
    let status = guard(|| {
        if argv.is_null() && argc > 0 {
            return Err(Fail(RegimeStatus::NullArgument, "argv is null".to_string()));
        }
        let mut args = Vec::with_capacity(argc);
        for i in 0..argc {
            args.push(text(*argv.add(i), "argument")?.to_string());
        }
        let (mut o, mut e) = (Vec::new(), Vec::new());
        code = regime_core::cli::run(args, &mut o, &mut e);
        put_string(out, String::from_utf8_lossy(&o).into_owned());
        put_string(err, String::from_utf8_lossy(&e).into_owned());
        Ok(RegimeStatus::Ok)
    });
    if status == RegimeStatus::Ok {
        code
    } else {
        -1
    }
}
