//! C ABI over the `vrlat` crate.
//!
//! Conventions:
//! - Every fallible function returns a [`VrlatStatus`]; on failure the
//!   message is available from [`vrlat_last_error_message`] on the same thread.
//! - 2x2 grids are flattened in the order 11, 12, 21, 22 (community, station).
//! - Absent entries (empty user types) are NaN.
//! - Handles are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use vrlat::harness::{symmetric_configuration, RunConfig};
use vrlat::latency::end_to_end_report;
use vrlat::model::{Grid, ScenarioConfig, SpectrumAllocation, UserConfiguration};
use vrlat::optimizer::{self, OptimizerSettings, OptimizerTrace, StepSize};
use vrlat::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VrlatStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidScenario = 2,
    InvalidArgument = 3,
    InvalidAllocation = 4,
    Io = 5,
    Panic = 6,
}

/// User counts `N11, N12, N21, N22`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VrlatCounts {
    pub n: [u32; 4],
}

/// Per-user uplink and per-group downlink bandwidths in Hz, NaN when absent.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VrlatAllocation {
    pub up: [f64; 4],
    pub dn: [f64; 4],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VrlatReport {
    pub upload_s: [f64; 2],
    pub upload_stderr_s: [f64; 2],
    pub compute_s: [f64; 2],
    pub download_s: [f64; 4],
    pub total_s: [f64; 4],
    pub weighted_total_s: f64,
    pub weighted_stderr_s: f64,
    pub samples_used: u64,
}

/// Opaque scenario handle.
pub struct VrlatScenario {
    cfg: ScenarioConfig,
}

/// Opaque optimizer trace handle.
pub struct VrlatTrace {
    trace: OptimizerTrace,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> VrlatStatus {
    match err {
        Error::InvalidScenario(_) | Error::Config { .. } => VrlatStatus::InvalidScenario,
        Error::InvalidAllocation(_) => VrlatStatus::InvalidAllocation,
        Error::Io { .. } => VrlatStatus::Io,
        _ => VrlatStatus::InvalidArgument,
    }
}

fn guard<F: FnOnce() -> Result<(), (VrlatStatus, String)>>(f: F) -> VrlatStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VrlatStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            VrlatStatus::Panic
        }
    }
}

fn fail(err: Error) -> (VrlatStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (VrlatStatus, String) {
    (VrlatStatus::NullPointer, format!("{what} is null"))
}

fn flatten(g: &Grid<Option<f64>>) -> [f64; 4] {
    [g[0][0], g[0][1], g[1][0], g[1][1]].map(|x| x.unwrap_or(f64::NAN))
}

fn unflatten(v: &[f64; 4]) -> Grid<Option<f64>> {
    let o = |x: f64| if x.is_nan() { None } else { Some(x) };
    [[o(v[0]), o(v[1])], [o(v[2]), o(v[3])]]
}

fn users_of(c: &VrlatCounts) -> UserConfiguration {
    UserConfiguration::from_flat(c.n)
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn vrlat_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Scenario with the reference parameter set.
#[no_mangle]
pub extern "C" fn vrlat_scenario_new_reference() -> *mut VrlatScenario {
    Box::into_raw(Box::new(VrlatScenario {
        cfg: ScenarioConfig::reference(),
    }))
}

/// Parses the `[scenario]` section of a TOML config held in `text`.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vrlat_scenario_from_toml(text: *const c_char, out: *mut *mut VrlatScenario) -> VrlatStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| (VrlatStatus::InvalidArgument, e.to_string()))?;
        let run = RunConfig::from_toml_str(text, Path::new("<ffi>")).map_err(fail)?;
        let cfg = run.scenario();
        cfg.validate().map_err(fail)?;
        *out = Box::into_raw(Box::new(VrlatScenario { cfg }));
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vrlat_scenario_free(scenario: *mut VrlatScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `scenario` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn vrlat_scenario_total_users(scenario: *const VrlatScenario) -> u32 {
    scenario.as_ref().map_or(0, |s| s.cfg.total_users)
}

/// Symmetric layout for cross-type ratio `rho_c`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vrlat_symmetric_configuration(n_total: u32, rho_c: f64, out: *mut VrlatCounts) -> VrlatStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        out.n = symmetric_configuration(n_total, rho_c).map_err(fail)?.flat();
        Ok(())
    })
}

/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn vrlat_equal_baseline(
    scenario: *const VrlatScenario,
    counts: *const VrlatCounts,
    out: *mut VrlatAllocation,
) -> VrlatStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        let c = counts.as_ref().ok_or_else(|| null("counts"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let users = users_of(c);
        users.check_against(&s.cfg).map_err(fail)?;
        let a = optimizer::equal_baseline(&users, &s.cfg);
        *out = VrlatAllocation {
            up: flatten(&a.up),
            dn: flatten(&a.dn),
        };
        Ok(())
    })
}

/// Square-root downlink split; writes four bandwidths into `out_dn`.
///
/// # Safety
/// `counts` must be valid and `out_dn` must point to four doubles.
#[no_mangle]
pub unsafe extern "C" fn vrlat_optimize_downlink(
    counts: *const VrlatCounts,
    w_total: f64,
    out_dn: *mut f64,
) -> VrlatStatus {
    guard(|| {
        let c = counts.as_ref().ok_or_else(|| null("counts"))?;
        if out_dn.is_null() {
            return Err(null("out_dn"));
        }
        if !(w_total > 0.0) {
            return Err((VrlatStatus::InvalidArgument, format!("w_total = {w_total}")));
        }
        let dn = flatten(&optimizer::optimize_downlink(&users_of(c), w_total));
        ptr::copy_nonoverlapping(dn.as_ptr(), out_dn, 4);
        Ok(())
    })
}

/// Projection of `w_tilde[2]` onto `{w >= 0 : n[0] w[0] + n[1] w[1] = w_total}`.
///
/// # Safety
/// `w_tilde`, `n` and `out` must each point to two elements.
#[no_mangle]
pub unsafe extern "C" fn vrlat_project_uplink(
    w_tilde: *const f64,
    n: *const u32,
    w_total: f64,
    out: *mut f64,
) -> VrlatStatus {
    guard(|| {
        if w_tilde.is_null() || n.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let w = [*w_tilde, *w_tilde.add(1)];
        let n = [*n, *n.add(1)];
        let p = optimizer::project_uplink(w, n, w_total).map_err(fail)?;
        *out = p[0].unwrap_or(f64::NAN);
        *out.add(1) = p[1].unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Latency report for `alloc` using `samples` Monte-Carlo draws from `seed`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn vrlat_evaluate(
    scenario: *const VrlatScenario,
    counts: *const VrlatCounts,
    alloc: *const VrlatAllocation,
    samples: usize,
    seed: u64,
    out: *mut VrlatReport,
) -> VrlatStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        let c = counts.as_ref().ok_or_else(|| null("counts"))?;
        let a = alloc.as_ref().ok_or_else(|| null("alloc"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let alloc = SpectrumAllocation {
            up: unflatten(&a.up),
            dn: unflatten(&a.dn),
        };
        let r = end_to_end_report(&s.cfg, &users_of(c), &alloc, samples, seed).map_err(fail)?;
        *out = VrlatReport {
            upload_s: r.upload_s,
            upload_stderr_s: r.upload_stderr_s,
            compute_s: r.compute_s,
            download_s: flatten(&r.download_s),
            total_s: flatten(&r.total_s),
            weighted_total_s: r.weighted_total_s,
            weighted_stderr_s: r.weighted_stderr_s,
            samples_used: r.samples_used as u64,
        };
        Ok(())
    })
}

/// Runs the uplink optimizer. `step_scale` is the multiplier `c` of the
/// scaled step size. On success `*out_trace` receives a trace handle whose
/// best iterate is the returned allocation.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn vrlat_optimize_uplink(
    scenario: *const VrlatScenario,
    counts: *const VrlatCounts,
    t_samples: usize,
    k_iters: usize,
    step_scale: f64,
    seed: u64,
    out_trace: *mut *mut VrlatTrace,
) -> VrlatStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        let c = counts.as_ref().ok_or_else(|| null("counts"))?;
        if out_trace.is_null() {
            return Err(null("out_trace"));
        }
        let settings = OptimizerSettings {
            t_samples,
            k_iters,
            step: StepSize::Scaled(step_scale),
            seed,
        };
        let (_, trace) = optimizer::optimize_uplink(&s.cfg, &users_of(c), &settings).map_err(fail)?;
        *out_trace = Box::into_raw(Box::new(VrlatTrace { trace }));
        Ok(())
    })
}

/// # Safety
/// `trace` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vrlat_trace_free(trace: *mut VrlatTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of iterates, including the starting point.
///
/// # Safety
/// `trace` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn vrlat_trace_len(trace: *const VrlatTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.trace.iterates.len())
}

/// # Safety
/// `trace` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn vrlat_trace_best_index(trace: *const VrlatTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.trace.best_index)
}

/// Sample-average objective of iterate `k`, NaN when out of range.
///
/// # Safety
/// `trace` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn vrlat_trace_objective(trace: *const VrlatTrace, k: usize) -> f64 {
    trace
        .as_ref()
        .and_then(|t| t.trace.saa_objective.get(k).copied())
        .unwrap_or(f64::NAN)
}

/// Writes the four uplink bandwidths of iterate `k` into `out_up`.
///
/// # Safety
/// `trace` must be a valid handle and `out_up` point to four doubles.
#[no_mangle]
pub unsafe extern "C" fn vrlat_trace_iterate(trace: *const VrlatTrace, k: usize, out_up: *mut f64) -> VrlatStatus {
    guard(|| {
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        if out_up.is_null() {
            return Err(null("out_up"));
        }
        let w = t
            .trace
            .iterates
            .get(k)
            .ok_or_else(|| (VrlatStatus::InvalidArgument, format!("iterate {k} out of range")))?;
        ptr::copy_nonoverlapping(flatten(w).as_ptr(), out_up, 4);
        Ok(())
    })
}
