//! C ABI over the verifier. Every function returns an [`FpvStatus`];
//! details of the last failure on the calling thread are available from
//! [`fpv_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Duration;

use fpverify::driver::{self, Report, Settings};
use fpverify::frontend::{load, TypedProgram};
use fpverify::interp::{parse_args, run_contract};
use fpverify::portfolio::{default_solvers, parse_solver_list, Portfolio};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpvStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// The source has parse or type errors.
    SourceError = 3,
    UnknownFunction = 4,
    BadArguments = 5,
    /// Evaluation failed at run time.
    RuntimeFailure = 6,
    NoSolver = 7,
    Config = 8,
    Panic = 99,
}

/// A typechecked program.
pub struct FpvProgram {
    name: String,
    source: String,
    program: TypedProgram,
}

/// The outcome of a `check` run.
pub struct FpvReport {
    report: Report,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn guard(f: impl FnOnce() -> FpvStatus) -> FpvStatus {
    set_error("");
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| {
        set_error("internal panic");
        FpvStatus::Panic
    })
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, FpvStatus> {
    if p.is_null() {
        set_error("null string argument");
        return Err(FpvStatus::NullArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string argument is not UTF-8");
        FpvStatus::InvalidUtf8
    })
}

fn out_string(s: String, out: *mut *mut c_char) {
    let c = CString::new(s.replace('\0', " ")).unwrap_or_default();
    unsafe { *out = c.into_raw() };
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn fpv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn fpv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fpv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and typechecks `source`; diagnostics go to `fpv_last_error`.
///
/// # Safety
/// Strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpv_program_load(name: *const c_char, source: *const c_char, out: *mut *mut FpvProgram) -> FpvStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return FpvStatus::NullArgument;
        }
        let name = tri!(text(name));
        let source = tri!(text(source));
        match load(name, source) {
            Ok(program) => {
                let h = Box::new(FpvProgram { name: name.into(), source: source.into(), program });
                *out = Box::into_raw(h);
                FpvStatus::Ok
            }
            Err(ds) => {
                set_error(ds.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"));
                FpvStatus::SourceError
            }
        }
    })
}

/// # Safety
/// `p` must come from `fpv_program_load` and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn fpv_program_free(p: *mut FpvProgram) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of functions in the program.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fpv_program_function_count(p: *const FpvProgram, out: *mut usize) -> FpvStatus {
    guard(|| {
        if p.is_null() || out.is_null() {
            set_error("null argument");
            return FpvStatus::NullArgument;
        }
        *out = (*p).program.functions.len();
        FpvStatus::Ok
    })
}

/// Evaluates `function` on comma-separated `args` and returns the value
/// as `decimal [hex]` in `out`, to be freed with `fpv_string_free`.
///
/// # Safety
/// `p` must be a live handle, strings NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fpv_program_eval(
    p: *const FpvProgram,
    function: *const c_char,
    args: *const c_char,
    out: *mut *mut c_char,
) -> FpvStatus {
    guard(|| {
        if p.is_null() || out.is_null() {
            set_error("null argument");
            return FpvStatus::NullArgument;
        }
        let function = tri!(text(function));
        let args = tri!(text(args));
        let prog = &(*p).program;
        let Some(f) = prog.function(function) else {
            set_error(format!("no function `{function}`"));
            return FpvStatus::UnknownFunction;
        };
        let values = match parse_args(args, &f.params) {
            Ok(v) => v,
            Err(e) => {
                set_error(e.to_string());
                return FpvStatus::BadArguments;
            }
        };
        match run_contract(prog, function, &values) {
            Ok(run) => {
                out_string(format!("{} [{}]", run.value, run.value.hex()), out);
                FpvStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                FpvStatus::RuntimeFailure
            }
        }
    })
}

/// Verifies the program. `solvers` is `name:path,...` or null for the
/// default portfolio; `timeout_s` is the per-VC limit.
///
/// # Safety
/// `p` must be a live handle, `solvers` null or NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fpv_check(
    p: *const FpvProgram,
    solvers: *const c_char,
    timeout_s: f64,
    out: *mut *mut FpvReport,
) -> FpvStatus {
    guard(|| {
        if p.is_null() || out.is_null() {
            set_error("null argument");
            return FpvStatus::NullArgument;
        }
        if !(timeout_s > 0.0 && timeout_s.is_finite()) {
            set_error("timeout must be positive");
            return FpvStatus::Config;
        }
        let specs = if solvers.is_null() {
            default_solvers()
        } else {
            match parse_solver_list(tri!(text(solvers))) {
                Ok(s) => s,
                Err(e) => {
                    set_error(e.to_string());
                    return FpvStatus::Config;
                }
            }
        };
        let portfolio = match Portfolio::new(specs, Duration::from_secs_f64(timeout_s), false) {
            Ok(pf) => pf,
            Err(e) => {
                set_error(e.to_string());
                return FpvStatus::NoSolver;
            }
        };
        let h = &*p;
        match driver::check_sources(&[(h.name.clone(), h.source.clone())], &portfolio, &Settings::default()) {
            Ok(report) => {
                *out = Box::into_raw(Box::new(FpvReport { report }));
                FpvStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                FpvStatus::Config
            }
        }
    })
}

/// Exit code of the run: 0 valid, 1 invalid, 2 inconclusive, 3 tool error.
///
/// # Safety
/// `r` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fpv_report_exit_code(r: *const FpvReport) -> i32 {
    if r.is_null() {
        return driver::EXIT_TOOL_ERROR;
    }
    (*r).report.exit_code
}

/// The report as JSON, to be freed with `fpv_string_free`.
///
/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fpv_report_json(r: *const FpvReport, out: *mut *mut c_char) -> FpvStatus {
    guard(|| {
        if r.is_null() || out.is_null() {
            set_error("null argument");
            return FpvStatus::NullArgument;
        }
        out_string((*r).report.to_json(), out);
        FpvStatus::Ok
    })
}

/// # Safety
/// `r` must come from `fpv_check` and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn fpv_report_free(r: *mut FpvReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
