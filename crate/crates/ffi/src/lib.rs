//! C ABI for the edpn toolkit.
//!
//! Nets live behind an opaque `EdpnNet` handle. Every fallible call returns
//! an `EdpnStatus` whose values match the `edpn` command's exit codes; the
//! message for the most recent failure on the calling thread is available
//! from `edpn_last_error`. Strings returned through `char **` out-parameters
//! are owned by the caller and must be released with `edpn_string_free`;
//! out-parameters are null after a failure unless documented otherwise.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use edpn::coverage::{self, Metric};
use edpn::sim::{self, ConflictPolicy, EventLifetime, Schedule, SimConfig, SimError};
use edpn::store::{self, StoreError};
use edpn::{format, testgen, Id, Net};

/// Outcome of a call. Values 0 to 5 coincide with the command-line exit
/// codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdpnStatus {
    Ok = 0,
    /// Malformed input, ill-formed net, bad argument or null pointer.
    Invalid = 1,
    /// Unknown fixture or unreadable resource.
    Io = 2,
    /// The simulation step budget ran out.
    Budget = 3,
    /// A conflict under the error-on-conflict policy.
    Conflict = 4,
    /// Two nets disagree on a shared element.
    Composition = 5,
    /// A bug inside the library; the message describes the panic.
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdpnPolicy {
    Lexicographic = 0,
    ErrorOnConflict = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdpnFormat {
    /// Graphviz DOT.
    Dot = 0,
    /// Sectioned relational rows.
    Relational = 1,
    /// Line-oriented model text.
    Model = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdpnMetric {
    Ct = 0,
    Cp = 1,
    Cie = 2,
    Coe = 3,
    Ccontext = 4,
}

impl From<EdpnMetric> for Metric {
    fn from(m: EdpnMetric) -> Metric {
        match m {
            EdpnMetric::Ct => Metric::Ct,
            EdpnMetric::Cp => Metric::Cp,
            EdpnMetric::Cie => Metric::Cie,
            EdpnMetric::Coe => Metric::Coe,
            EdpnMetric::Ccontext => Metric::Ccontext,
        }
    }
}

/// Opaque net handle.
pub struct EdpnNet {
    net: Net,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let clean = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = clean);
}

struct Failure(EdpnStatus, String);

fn invalid(message: impl Into<String>) -> Failure {
    Failure(EdpnStatus::Invalid, message.into())
}

type Result<T> = std::result::Result<T, Failure>;

/// Runs `body`, recording failures and turning panics into `Internal`.
fn guard(body: impl FnOnce() -> Result<()>) -> EdpnStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            EdpnStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(panic) => {
            let what = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal error: {what}"));
            EdpnStatus::Internal
        }
    }
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str> {
    if s.is_null() {
        return Err(invalid(format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn handle<'a>(net: *const EdpnNet) -> Result<&'a Net> {
    net.as_ref()
        .map(|h| &h.net)
        .ok_or_else(|| invalid("net handle is null"))
}

unsafe fn put_string(out: *mut *mut c_char, value: String) -> Result<()> {
    let c = CString::new(value).map_err(|_| invalid("result contains a nul byte"))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn put_net(out: *mut *mut EdpnNet, net: Net) {
    *out = Box::into_raw(Box::new(EdpnNet { net }));
}

/// Rejects a null out-parameter and clears it so failures leave null.
unsafe fn checked<T>(out: *mut *mut T) -> Result<()> {
    if out.is_null() {
        return Err(invalid("output pointer is null"));
    }
    *out = ptr::null_mut();
    Ok(())
}

fn well_formed(net: &Net) -> Result<()> {
    let errors = edpn::validation_errors(net);
    if errors.is_empty() {
        return Ok(());
    }
    let lines: Vec<String> = errors.iter().map(ToString::to_string).collect();
    Err(invalid(format!("model is not well-formed: {}", lines.join("; "))))
}

fn parse_any(source: &str) -> Result<Net> {
    if store::is_relational(source) {
        let st = store::parse_store(source).map_err(|e| invalid(e.to_string()))?;
        store::from_relations(&st).map_err(|e| invalid(e.to_string()))
    } else {
        format::parse_model(source)
            .map(|p| p.net)
            .map_err(|e| invalid(e.to_string()))
    }
}

/// Parses model text or relational text into a new handle. The net is not
/// validated; see `edpn_net_validate`.
///
/// # Safety
/// `source` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn edpn_net_parse(source: *const c_char, out: *mut *mut EdpnNet) -> EdpnStatus {
    guard(|| {
        checked(out)?;
        let net = parse_any(text(source, "source")?)?;
        put_net(out, net);
        Ok(())
    })
}

/// Loads a bundled fixture by name, such as `gdc-basic`.
///
/// # Safety
/// `name` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn edpn_net_fixture(name: *const c_char, out: *mut *mut EdpnNet) -> EdpnStatus {
    guard(|| {
        checked(out)?;
        let name = text(name, "name")?;
        let net = edpn::fixtures::load(name).map_err(|e| Failure(EdpnStatus::Io, e.to_string()))?;
        put_net(out, net);
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `net` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn edpn_net_free(net: *mut EdpnNet) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Writes every violation, one per line, to `report`. Returns `Invalid`
/// when any of them is an error rather than a warning.
///
/// # Safety
/// `net` must be a live handle and `report` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn edpn_net_validate(net: *const EdpnNet, report: *mut *mut c_char) -> EdpnStatus {
    guard(|| {
        checked(report)?;
        let net = handle(net)?;
        let violations = edpn::validate(net);
        let text: String = violations.iter().map(|v| format!("{v}\n")).collect();
        let errors = violations.iter().filter(|v| !v.is_warning()).count();
        put_string(report, text)?;
        if errors > 0 {
            return Err(invalid(format!("{errors} error(s)")));
        }
        Ok(())
    })
}

/// Runs the net from its initial marking with one input event per tick.
/// `events_csv` is a comma-separated list of input event ids (may be empty
/// or null); `step_budget` of 0 selects the default budget. The trace is
/// written to `trace`, also when the budget runs out.
///
/// # Safety
/// `net` must be a live handle, `events_csv` null or nul-terminated, and
/// `trace` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn edpn_net_simulate(
    net: *const EdpnNet,
    events_csv: *const c_char,
    policy: EdpnPolicy,
    step_budget: usize,
    trace: *mut *mut c_char,
) -> EdpnStatus {
    guard(|| {
        checked(trace)?;
        let net = handle(net)?;
        well_formed(net)?;
        let csv = if events_csv.is_null() {
            ""
        } else {
            text(events_csv, "events")?
        };
        let mut events = Vec::new();
        for e in csv.split(',').map(str::trim).filter(|e| !e.is_empty()) {
            events.push(Id::new(e).map_err(|err| invalid(err.to_string()))?);
        }
        let config = SimConfig {
            policy: match policy {
                EdpnPolicy::Lexicographic => ConflictPolicy::Lexicographic,
                EdpnPolicy::ErrorOnConflict => ConflictPolicy::ErrorOnConflict,
            },
            lifetime: EventLifetime::Step,
            step_budget: if step_budget == 0 {
                sim::DEFAULT_STEP_BUDGET
            } else {
                step_budget
            },
            ..SimConfig::default()
        };
        match sim::run(net, &Schedule::sequential(events), &config) {
            Ok(t) => put_string(trace, t.to_string()),
            Err(SimError::BudgetExceeded { budget, partial }) => {
                put_string(trace, partial.to_string())?;
                Err(Failure(
                    EdpnStatus::Budget,
                    format!("step budget of {budget} exhausted"),
                ))
            }
            Err(e @ SimError::Conflict { .. }) => Err(Failure(EdpnStatus::Conflict, e.to_string())),
            Err(e) => Err(invalid(e.to_string())),
        }
    })
}

/// Renders a well-formed net in the requested format.
///
/// # Safety
/// `net` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn edpn_net_export(net: *const EdpnNet, format: EdpnFormat, out: *mut *mut c_char) -> EdpnStatus {
    guard(|| {
        checked(out)?;
        let net = handle(net)?;
        well_formed(net)?;
        let text = match format {
            EdpnFormat::Dot => edpn::dot::to_dot(net),
            EdpnFormat::Model => format::write_model(net),
            EdpnFormat::Relational => store::to_relations(net)
                .and_then(|s| store::write_store(&s))
                .map_err(|e| invalid(e.to_string()))?,
        };
        put_string(out, text)
    })
}

/// Relational union of two well-formed nets, as a new handle.
///
/// # Safety
/// `a` and `b` must be live handles and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn edpn_compose(a: *const EdpnNet, b: *const EdpnNet, out: *mut *mut EdpnNet) -> EdpnStatus {
    guard(|| {
        checked(out)?;
        let (a, b) = (handle(a)?, handle(b)?);
        let to = |n: &Net| store::to_relations(n).map_err(|e| invalid(e.to_string()));
        let composed = store::compose(&to(a)?, &to(b)?).map_err(|e| match e {
            StoreError::CompositionConflict { .. } => Failure(EdpnStatus::Composition, e.to_string()),
            e => invalid(e.to_string()),
        })?;
        let net = store::from_relations(&composed).map_err(|e| invalid(e.to_string()))?;
        put_net(out, net);
        Ok(())
    })
}

/// Generates a test suite for `metric` from the initial marking with paths
/// of at most `max_firings` firings, written as test-case rows. Partial
/// coverage is not an error; measure the rows to see what is missing.
///
/// # Safety
/// `net` must be a live handle and `rows` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn edpn_net_generate_tests(
    net: *const EdpnNet,
    metric: EdpnMetric,
    max_firings: usize,
    rows: *mut *mut c_char,
) -> EdpnStatus {
    guard(|| {
        checked(rows)?;
        let net = handle(net)?;
        well_formed(net)?;
        let generated = testgen::generate_for_coverage(net, metric.into(), net.initial_marking(), max_firings)
            .map_err(|e| invalid(e.to_string()))?;
        put_string(rows, testgen::write_test_cases(&generated.tests))
    })
}

/// Measures all five coverage metrics of the test-case rows in `tests`.
///
/// # Safety
/// `net` must be a live handle, `tests` nul-terminated and `report` a
/// writable pointer.
#[no_mangle]
pub unsafe extern "C" fn edpn_net_coverage(
    net: *const EdpnNet,
    tests: *const c_char,
    report: *mut *mut c_char,
) -> EdpnStatus {
    guard(|| {
        checked(report)?;
        let net = handle(net)?;
        well_formed(net)?;
        let cases = testgen::parse_test_cases(text(tests, "tests")?).map_err(|e| invalid(e.to_string()))?;
        let measured = coverage::measure(net, &cases).map_err(|e| invalid(e.to_string()))?;
        put_string(report, measured.render_rows())
    })
}

/// Message of the last failed call on this thread, or an empty string
/// after a successful one. Valid until the next call on the same thread;
/// do not free it.
#[no_mangle]
pub extern "C" fn edpn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn edpn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
