// SPDX-License-Identifier: Apache-2.0

//! C ABI over the `atissue` crate.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free` function. Every fallible call returns an
//! [`AtissueStatus`]; on failure [`atissue_last_error`] describes the cause.
//! Strings handed out by the library must be released with
//! [`atissue_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use atissue::experiments::{run_experiment, EvalConfig, Experiment};
use atissue::lexicon::{default_lexicon, Lexicon};
use atissue::run::{BackendSpec, Source};
use atissue::stats::{one_sided_welch_t, wilson_ci};
use atissue::stimgen::{build_suite, Suite, SuiteConfig};
use atissue::{Error, ErrorKind};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtissueStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Bad configuration or arguments.
    Usage = 3,
    /// Malformed or inconsistent data.
    Data = 4,
    /// The scoring backend failed or lacks a capability.
    Backend = 5,
    /// An internal panic was caught at the boundary.
    Panic = 6,
}

/// A generated or loaded stimulus suite.
pub struct AtissueSuite {
    suite: Suite,
}

/// An opened scoring backend together with the lexicon it scores against.
pub struct AtissueScorer {
    source: Source,
    lexicon: Lexicon,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(e: Error) -> AtissueStatus {
    let status = match e.kind() {
        ErrorKind::Usage => AtissueStatus::Usage,
        ErrorKind::Data => AtissueStatus::Data,
        ErrorKind::Backend => AtissueStatus::Backend,
    };
    set_error(e.to_string());
    status
}

fn guard(f: impl FnOnce() -> Result<(), AtissueStatus>) -> AtissueStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AtissueStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            AtissueStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, AtissueStatus> {
    if p.is_null() {
        set_error(format!("`{name}` is null"));
        return Err(AtissueStatus::NullArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("`{name}` is not valid UTF-8"));
        AtissueStatus::InvalidUtf8
    })
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, AtissueStatus> {
    p.as_ref().ok_or_else(|| {
        set_error(format!("`{name}` is null"));
        AtissueStatus::NullArgument
    })
}

fn out_arg<T>(p: *mut T, name: &str) -> Result<(), AtissueStatus> {
    if p.is_null() {
        set_error(format!("output `{name}` is null"));
        Err(AtissueStatus::NullArgument)
    } else {
        Ok(())
    }
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("nul bytes removed")
        .into_raw()
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn atissue_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn atissue_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Schema version stamped into persisted records.
#[no_mangle]
pub extern "C" fn atissue_schema_version() -> u32 {
    atissue::SCHEMA_VERSION
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn atissue_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Generates the default suite (shipped lexicon, both modes, narrative format).
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn atissue_suite_generate(
    seed: u64,
    n_per_pair: u32,
    out: *mut *mut AtissueSuite,
) -> AtissueStatus {
    guard(|| {
        out_arg(out, "out")?;
        let config = SuiteConfig {
            seed,
            n_per_pair: n_per_pair as usize,
            ..SuiteConfig::default()
        };
        let suite = build_suite(&default_lexicon(), &config).map_err(fail)?;
        *out = Box::into_raw(Box::new(AtissueSuite { suite }));
        Ok(())
    })
}

/// Loads a suite file (one JSON instance per line).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn atissue_suite_load(
    path: *const c_char,
    out: *mut *mut AtissueSuite,
) -> AtissueStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        out_arg(out, "out")?;
        let suite = Suite::read_jsonl(path).map_err(fail)?;
        *out = Box::into_raw(Box::new(AtissueSuite { suite }));
        Ok(())
    })
}

/// Number of instances in the suite; 0 for NULL.
///
/// # Safety
/// `suite` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn atissue_suite_len(suite: *const AtissueSuite) -> usize {
    suite.as_ref().map_or(0, |s| s.suite.len())
}

/// Serializes the suite as line-delimited JSON into a new string.
///
/// # Safety
/// `suite` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn atissue_suite_to_jsonl(
    suite: *const AtissueSuite,
    out: *mut *mut c_char,
) -> AtissueStatus {
    guard(|| {
        let s = ref_arg(suite, "suite")?;
        out_arg(out, "out")?;
        *out = c_string(s.suite.to_jsonl());
        Ok(())
    })
}

/// # Safety
/// `suite` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn atissue_suite_free(suite: *mut AtissueSuite) {
    if !suite.is_null() {
        drop(Box::from_raw(suite));
    }
}

/// Opens a backend from a spec string such as `inproc:prefer-main`,
/// `mock:rules.toml`, `proto:<command>` or `replay:<scores.jsonl>`.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn atissue_scorer_open(
    spec: *const c_char,
    out: *mut *mut AtissueScorer,
) -> AtissueStatus {
    guard(|| {
        let spec = str_arg(spec, "spec")?;
        out_arg(out, "out")?;
        let spec: BackendSpec = spec.parse().map_err(fail)?;
        let lexicon = default_lexicon();
        let source = Source::open(&spec, &lexicon).map_err(fail)?;
        *out = Box::into_raw(Box::new(AtissueScorer { source, lexicon }));
        Ok(())
    })
}

/// Model identifier of the backend as a new string.
///
/// # Safety
/// `scorer` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn atissue_scorer_model_id(
    scorer: *const AtissueScorer,
    out: *mut *mut c_char,
) -> AtissueStatus {
    guard(|| {
        let s = ref_arg(scorer, "scorer")?;
        out_arg(out, "out")?;
        *out = c_string(s.source.model_id().to_string());
        Ok(())
    })
}

/// # Safety
/// `scorer` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn atissue_scorer_free(scorer: *mut AtissueScorer) {
    if !scorer.is_null() {
        drop(Box::from_raw(scorer));
    }
}

unsafe fn experiment_result(
    suite: *const AtissueSuite,
    scorer: *const AtissueScorer,
    experiment: *const c_char,
) -> Result<atissue::experiments::ExperimentResult, AtissueStatus> {
    let suite = ref_arg(suite, "suite")?;
    let scorer = ref_arg(scorer, "scorer")?;
    let name = str_arg(experiment, "experiment")?;
    let e: Experiment = name.parse().map_err(fail)?;
    let cfg = EvalConfig::new(scorer.lexicon.auxiliaries().to_vec());
    run_experiment(e, &suite.suite, scorer.source.records(), &cfg).map_err(fail)
}

/// Runs an experiment (`header`, `rejection`, `conjunction`, `ellipsis_top1`,
/// `ellipsis_top2`) and returns the full result as a JSON string.
///
/// # Safety
/// Handles must be live; `experiment` NUL-terminated; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn atissue_run_experiment(
    suite: *const AtissueSuite,
    scorer: *const AtissueScorer,
    experiment: *const c_char,
    out_json: *mut *mut c_char,
) -> AtissueStatus {
    guard(|| {
        out_arg(out_json, "out_json")?;
        let r = experiment_result(suite, scorer, experiment)?;
        *out_json = c_string(serde_json::to_string(&r).expect("result serializes"));
        Ok(())
    })
}

/// Success proportion of one group (ties count half) for an experiment.
///
/// # Safety
/// Handles must be live; strings NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn atissue_experiment_proportion(
    suite: *const AtissueSuite,
    scorer: *const AtissueScorer,
    experiment: *const c_char,
    group: *const c_char,
    out: *mut f64,
) -> AtissueStatus {
    guard(|| {
        out_arg(out, "out")?;
        let group = str_arg(group, "group")?;
        let r = experiment_result(suite, scorer, experiment)?;
        *out = r.proportion(group, 0.95).map_err(fail)?.estimate;
        Ok(())
    })
}

/// Wilson score interval for `successes` out of `n` at confidence `level`.
///
/// # Safety
/// `low` and `high` must be writable.
#[no_mangle]
pub unsafe extern "C" fn atissue_wilson_ci(
    successes: f64,
    n: u64,
    level: f64,
    low: *mut f64,
    high: *mut f64,
) -> AtissueStatus {
    guard(|| {
        out_arg(low, "low")?;
        out_arg(high, "high")?;
        let p = wilson_ci(successes, n, level).map_err(fail)?;
        *low = p.ci_low;
        *high = p.ci_high;
        Ok(())
    })
}

/// One-sided Welch t-test of `mean(a) > mean(b)`.
///
/// # Safety
/// `a` and `b` must point to `na` and `nb` readable doubles; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn atissue_welch_t(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    t: *mut f64,
    df: *mut f64,
    p: *mut f64,
) -> AtissueStatus {
    guard(|| {
        if a.is_null() || b.is_null() {
            set_error("sample pointer is null".into());
            return Err(AtissueStatus::NullArgument);
        }
        out_arg(t, "t")?;
        out_arg(df, "df")?;
        out_arg(p, "p")?;
        let a = std::slice::from_raw_parts(a, na);
        let b = std::slice::from_raw_parts(b, nb);
        let r = one_sided_welch_t(a, b).map_err(fail)?;
        *t = r.t;
        *df = r.df;
        *p = r.p_one_sided;
        Ok(())
    })
}
