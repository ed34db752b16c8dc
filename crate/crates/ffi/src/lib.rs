//! C ABI for `funcrate`.
//!
//! Objects cross the boundary as opaque handles (`FrConfig`, `FrReport`)
//! that the caller frees with the matching `*_free` function. Every fallible
//! call returns an [`FrStatus`]; on failure, [`fr_last_error`] describes the
//! most recent error on the calling thread. Strings returned to the caller
//! are owned by the caller and released with [`fr_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use funcrate::config::{parse_majorant, parse_weight};
use funcrate::kernels::{check_integrability, stable_density};
use funcrate::rates::fit_rate;
use funcrate::report::{render_csv, render_json};
use funcrate::{
    load_config, parse_config, run_experiment, AbscissaMode, Error, ExperimentConfig, Report, RunOptions,
    StableIndex,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrStatus {
    Ok = 0,
    /// null pointer, bad UTF-8 or an out-of-range argument
    InvalidArgument = 1,
    /// configuration rejected; the message lists every violation
    InvalidConfig = 2,
    /// a required integral or moment is infinite
    Divergent = 3,
    /// simulation, quadrature or fitting failed
    Runtime = 4,
    Io = 5,
    /// a Rust panic was caught at the boundary
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrAbscissaMode {
    LogN = 0,
    LogNOverLog = 1,
}

/// Opaque experiment configuration.
pub struct FrConfig(ExperimentConfig);

/// Opaque experiment report.
pub struct FrReport(Report);

/// Line-fit result of [`fr_fit_rate`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FrRateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
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

fn status_of(err: &Error) -> FrStatus {
    match err {
        Error::InvalidParameter { .. } | Error::Divisibility { .. } | Error::NotHolder(_) => FrStatus::InvalidArgument,
        Error::Config(_) | Error::Integrability(_) => FrStatus::InvalidConfig,
        Error::Divergent(_) => FrStatus::Divergent,
        Error::Io(_) => FrStatus::Io,
        _ => FrStatus::Runtime,
    }
}

fn fail(status: FrStatus, msg: impl Into<String>) -> FrStatus {
    set_error(msg);
    status
}

fn from_error(err: Error) -> FrStatus {
    let status = status_of(&err);
    fail(status, err.to_string())
}

/// Runs `f`, converting panics into [`FrStatus::Panic`].
fn guard<F: FnOnce() -> FrStatus>(f: F) -> FrStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(FrStatus::Panic, msg)
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, FrStatus> {
    if p.is_null() {
        return Err(fail(FrStatus::InvalidArgument, format!("{what} is null")));
    }
    // SAFETY: caller guarantees a NUL-terminated string.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| fail(FrStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn give_string(s: String, out: *mut *mut c_char) -> FrStatus {
    match CString::new(s) {
        Ok(c) => {
            // SAFETY: `out` checked non-null by callers.
            unsafe { *out = c.into_raw() };
            FrStatus::Ok
        }
        Err(_) => fail(FrStatus::Runtime, "output contains a NUL byte"),
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(FrStatus::InvalidArgument, concat!(stringify!($p), " is null"));
        })+
    };
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn fr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn fr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a configuration document.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fr_config_parse(text: *const c_char, out: *mut *mut FrConfig) -> FrStatus {
    guard(|| {
        non_null!(out);
        let text = match unsafe { read_str(text, "text") } {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_config(text) {
            Ok(cfg) => {
                unsafe { *out = Box::into_raw(Box::new(FrConfig(cfg))) };
                FrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Loads a configuration file; table paths resolve against its directory.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fr_config_load(path: *const c_char, out: *mut *mut FrConfig) -> FrStatus {
    guard(|| {
        non_null!(out);
        let path = match unsafe { read_str(path, "path") } {
            Ok(t) => t,
            Err(s) => return s,
        };
        match load_config(Path::new(path)) {
            Ok(cfg) => {
                unsafe { *out = Box::into_raw(Box::new(FrConfig(cfg))) };
                FrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Overrides the replicate count.
///
/// # Safety
/// `cfg` must come from `fr_config_parse` or `fr_config_load`.
#[no_mangle]
pub unsafe extern "C" fn fr_config_set_replicates(cfg: *mut FrConfig, replicates: usize) -> FrStatus {
    guard(|| {
        non_null!(cfg);
        if replicates < 2 {
            return fail(FrStatus::InvalidArgument, "need at least 2 replicates");
        }
        unsafe { (*cfg).0.replicates = replicates };
        FrStatus::Ok
    })
}

/// Overrides the seed.
///
/// # Safety
/// `cfg` must come from `fr_config_parse` or `fr_config_load`.
#[no_mangle]
pub unsafe extern "C" fn fr_config_set_seed(cfg: *mut FrConfig, seed: u64) -> FrStatus {
    guard(|| {
        non_null!(cfg);
        unsafe { (*cfg).0.seed = seed };
        FrStatus::Ok
    })
}

/// # Safety
/// `cfg` must be null or come from this library, and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fr_config_free(cfg: *mut FrConfig) {
    if !cfg.is_null() {
        drop(unsafe { Box::from_raw(cfg) });
    }
}

/// Runs an experiment. `threads = 0` defers to `FUNCRATE_THREADS`, then to
/// all cores.
///
/// # Safety
/// `cfg` must be a live configuration handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fr_run(cfg: *const FrConfig, threads: u32, out: *mut *mut FrReport) -> FrStatus {
    guard(|| {
        non_null!(cfg, out);
        let opts = RunOptions {
            threads: (threads > 0).then_some(threads as usize),
        };
        match run_experiment(unsafe { &(*cfg).0 }, opts) {
            Ok(r) => {
                unsafe { *out = Box::into_raw(Box::new(FrReport(r))) };
                FrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `report` must be null or come from `fr_run`, and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fr_report_free(report: *mut FrReport) {
    if !report.is_null() {
        drop(unsafe { Box::from_raw(report) });
    }
}

/// Number of ladder rungs in the report.
///
/// # Safety
/// `report` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn fr_report_rung_count(report: *const FrReport, out: *mut usize) -> FrStatus {
    guard(|| {
        non_null!(report, out);
        unsafe { *out = (*report).0.rows.len() };
        FrStatus::Ok
    })
}

/// `n`, `E|J|^p` and its standard error for rung `index`.
///
/// # Safety
/// `report` must be a live report handle; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fr_report_strong(
    report: *const FrReport,
    index: usize,
    n: *mut usize,
    value: *mut f64,
    std_error: *mut f64,
) -> FrStatus {
    guard(|| {
        non_null!(report, n, value, std_error);
        let rows = unsafe { &(*report).0.rows };
        let Some(row) = rows.get(index) else {
            return fail(FrStatus::InvalidArgument, format!("rung {index} out of range ({})", rows.len()));
        };
        unsafe {
            *n = row.n;
            *value = row.strong_err_p;
            *std_error = row.strong_se;
        }
        FrStatus::Ok
    })
}

/// The report as pretty-printed JSON; free with `fr_string_free`.
///
/// # Safety
/// `report` must be a live report handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fr_report_json(report: *const FrReport, out: *mut *mut c_char) -> FrStatus {
    guard(|| {
        non_null!(report, out);
        match render_json(unsafe { &(*report).0 }) {
            Ok(s) => give_string(s, out),
            Err(e) => from_error(e),
        }
    })
}

/// The report as CSV; free with `fr_string_free`.
///
/// # Safety
/// `report` must be a live report handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fr_report_csv(report: *const FrReport, out: *mut *mut c_char) -> FrStatus {
    guard(|| {
        non_null!(report, out);
        give_string(render_csv(unsafe { &(*report).0 }), out)
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn fr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Density at `z` of the symmetric stable law `e^{-t|ξ|^α}`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fr_stable_density(alpha: f64, t: f64, z: f64, out: *mut f64) -> FrStatus {
    guard(|| {
        non_null!(out);
        let res = StableIndex::new(alpha).and_then(|a| stable_density(a, t, z));
        match res {
            Ok(v) => {
                unsafe { *out = v };
                FrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Analytic integrability verdict for a majorant and weight given in
/// config syntax (`"gaussian 0.25"`, `"poly 0.5"`, ...). Writes 1 to
/// `accepted` when `∫ V^p Q` is finite, 0 otherwise.
///
/// # Safety
/// String arguments must be NUL-terminated; `accepted` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fr_check_integrability(
    majorant: *const c_char,
    weight: *const c_char,
    p: f64,
    alpha: f64,
    accepted: *mut c_int,
) -> FrStatus {
    guard(|| {
        non_null!(accepted);
        let (q, v) = match unsafe { (read_str(majorant, "majorant"), read_str(weight, "weight")) } {
            (Ok(q), Ok(v)) => (q, v),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let alpha = match StableIndex::new(alpha) {
            Ok(a) => a,
            Err(e) => return from_error(e),
        };
        let q = match parse_majorant(q) {
            Ok(q) => q,
            Err(v) => return fail(FrStatus::InvalidArgument, v.to_string()),
        };
        let v = match parse_weight(v, alpha) {
            Ok(v) => v,
            Err(v) => return fail(FrStatus::InvalidArgument, v.to_string()),
        };
        let verdict = check_integrability(&q, &v, p, 1.0, alpha);
        if !verdict.accepted {
            set_error(verdict.reason);
        }
        unsafe { *accepted = c_int::from(verdict.accepted) };
        FrStatus::Ok
    })
}

/// Least-squares rate fit of `log error` against the chosen abscissa.
///
/// # Safety
/// `ns` and `errors` must point to `len` elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fr_fit_rate(
    ns: *const usize,
    errors: *const f64,
    len: usize,
    mode: FrAbscissaMode,
    out: *mut FrRateFit,
) -> FrStatus {
    guard(|| {
        non_null!(ns, errors, out);
        let (ns, errs) = unsafe { (std::slice::from_raw_parts(ns, len), std::slice::from_raw_parts(errors, len)) };
        let points: Vec<(usize, f64)> = ns.iter().copied().zip(errs.iter().copied()).collect();
        let mode = match mode {
            FrAbscissaMode::LogN => AbscissaMode::LogN,
            FrAbscissaMode::LogNOverLog => AbscissaMode::LogNOverLog,
        };
        match fit_rate(&points, mode) {
            Ok(f) => {
                unsafe {
                    *out = FrRateFit {
                        slope: f.slope,
                        intercept: f.intercept,
                        r_squared: f.r_squared,
                    }
                };
                FrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
