//! C ABI over `bose_transit`.
//!
//! Every fallible function returns a [`BtStatus`] and writes results through
//! out-pointers. On failure the message is kept in a thread-local slot and can
//! be read with [`bt_last_error_message`]. Handles are opaque and must be
//! released with their `_free` function; strings returned by the library are
//! released with [`bt_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use bose_transit::bounds::{self, BoundInputs, BoundKind, BoundParams};
use bose_transit::ot::{self, CostMatrix, Distribution};
use bose_transit::verify::{self, AuditReport, Scenario, Simulation};
use bose_transit::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed JSON or a schema violation.
    Schema = 3,
    /// Parameters outside their domain, or inconsistent inputs.
    InvalidInput = 4,
    /// Step too large, untrusted truncation or loss of positivity.
    Numerics = 5,
    Io = 6,
    /// A Rust panic was caught at the boundary.
    Panic = 7,
}

/// Bound families accepted by [`bt_bound_evaluate`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BtBoundKind {
    ClosedTau = 0,
    OneBodyTau = 1,
    MultiBodyTau = 2,
    GainLossTau = 3,
    MuMaxOneBody = 4,
    MuMaxGainLoss = 5,
    TransportLimitOneBody = 6,
    TransportLimitGainLoss = 7,
    ProbabilityBound = 8,
}

impl From<BtBoundKind> for BoundKind {
    fn from(k: BtBoundKind) -> Self {
        BoundKind::ALL[k as usize]
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BtBoundResult {
    /// `+inf` for an infeasible time bound.
    pub value: f64,
    pub feasible: bool,
    pub epsilon: f64,
}

/// Parsed scenario.
pub struct BtScenario(Scenario);

/// Simulation plus the audit reports of one scenario run.
pub struct BtRun {
    sim: Simulation,
    reports: Vec<AuditReport>,
}

/// Bound parameters; start from [`bt_bound_params_new`] and adjust with the setters.
pub struct BtBoundParams(BoundParams);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> BtStatus {
    match e {
        Error::Schema { .. } | Error::Json(_) => BtStatus::Schema,
        Error::StepTooLarge { .. } | Error::UntrustedTruncation { .. } | Error::InvalidState(_) => BtStatus::Numerics,
        Error::Io(_) | Error::Csv(_) => BtStatus::Io,
        _ => BtStatus::InvalidInput,
    }
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), BtStatus>) -> BtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BtStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            BtStatus::Panic
        }
    }
}

fn fail(e: Error) -> BtStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> BtStatus {
    set_error(format!("{what} is null"));
    BtStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, BtStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        BtStatus::InvalidUtf8
    })
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, BtStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, BtStatus> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], BtStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Message of the last failed call on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn bt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn bt_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn bt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn bt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub unsafe extern "C" fn bt_scenario_from_json(json: *const c_char, out_scenario: *mut *mut BtScenario) -> BtStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let o = out(out_scenario, "out_scenario")?;
        let s = Scenario::from_json(text).map_err(fail)?;
        *o = Box::into_raw(Box::new(BtScenario(s)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bt_scenario_load(path: *const c_char, out_scenario: *mut *mut BtScenario) -> BtStatus {
    guard(|| {
        let p = str_arg(path, "path")?;
        let o = out(out_scenario, "out_scenario")?;
        let s = Scenario::load(Path::new(p)).map_err(fail)?;
        *o = Box::into_raw(Box::new(BtScenario(s)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bt_scenario_free(s: *mut BtScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Simulates the scenario and runs its audits.
#[no_mangle]
pub unsafe extern "C" fn bt_scenario_run(s: *const BtScenario, out_run: *mut *mut BtRun) -> BtStatus {
    guard(|| {
        let s = handle(s, "scenario")?;
        let o = out(out_run, "out_run")?;
        let (sim, reports) = verify::run_audits(&s.0).map_err(fail)?;
        *o = Box::into_raw(Box::new(BtRun { sim, reports }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bt_run_free(r: *mut BtRun) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Whether every audit record of the run passed.
#[no_mangle]
pub unsafe extern "C" fn bt_run_passed(r: *const BtRun, out_passed: *mut bool) -> BtStatus {
    guard(|| {
        let r = handle(r, "run")?;
        *out(out_passed, "out_passed")? = r.reports.iter().all(AuditReport::passed);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bt_run_report_count(r: *const BtRun, out_count: *mut usize) -> BtStatus {
    guard(|| {
        let r = handle(r, "run")?;
        *out(out_count, "out_count")? = r.reports.len();
        Ok(())
    })
}

/// All reports as a JSON array; free the string with `bt_string_free`.
#[no_mangle]
pub unsafe extern "C" fn bt_run_report_json(r: *const BtRun, out_json: *mut *mut c_char) -> BtStatus {
    guard(|| {
        let r = handle(r, "run")?;
        let o = out(out_json, "out_json")?;
        let text = serde_json::to_string(&r.reports).map_err(|e| fail(e.into()))?;
        *o = owned_string(text);
        Ok(())
    })
}

/// Number of time samples and sites of the stored trajectory.
#[no_mangle]
pub unsafe extern "C" fn bt_run_trajectory_shape(
    r: *const BtRun,
    out_samples: *mut usize,
    out_sites: *mut usize,
) -> BtStatus {
    guard(|| {
        let r = handle(r, "run")?;
        *out(out_samples, "out_samples")? = r.sim.trajectory.len();
        *out(out_sites, "out_sites")? = r.sim.trajectory.sites();
        Ok(())
    })
}

/// Time and normalized occupations of sample `k`; `out_x` must hold `sites` values.
#[no_mangle]
pub unsafe extern "C" fn bt_run_sample(r: *const BtRun, k: usize, out_t: *mut f64, out_x: *mut f64) -> BtStatus {
    guard(|| {
        let r = handle(r, "run")?;
        let traj = &r.sim.trajectory;
        if k >= traj.len() {
            return Err(fail(Error::IndexOutOfRange {
                index: k,
                len: traj.len(),
            }));
        }
        *out(out_t, "out_t")? = traj.times()[k];
        if out_x.is_null() {
            return Err(null("out_x"));
        }
        let x = traj.occupations(k);
        std::slice::from_raw_parts_mut(out_x, x.len()).copy_from_slice(x);
        Ok(())
    })
}

/// Parameters with `mu = 1`, no dissipation and one boson on one site.
#[no_mangle]
pub unsafe extern "C" fn bt_bound_params_new(
    j: f64,
    phi: f64,
    alpha: f64,
    dimension: usize,
    epsilon: f64,
    out_params: *mut *mut BtBoundParams,
) -> BtStatus {
    guard(|| {
        let o = out(out_params, "out_params")?;
        let p = BoundParams::new(j, phi, alpha, dimension, epsilon);
        p.validate().map_err(fail)?;
        *o = Box::into_raw(Box::new(BtBoundParams(p)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bt_bound_params_free(p: *mut BtBoundParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

unsafe fn update(p: *mut BtBoundParams, f: impl FnOnce(&mut BoundParams)) -> BtStatus {
    guard(|| {
        let h = out(p, "params")?;
        let mut next = h.0.clone();
        f(&mut next);
        next.validate().map_err(fail)?;
        h.0 = next;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bt_bound_params_set_mu(p: *mut BtBoundParams, mu: f64) -> BtStatus {
    update(p, |q| q.mu = mu)
}

#[no_mangle]
pub unsafe extern "C" fn bt_bound_params_set_loss(p: *mut BtBoundParams, gamma: f64) -> BtStatus {
    update(p, |q| q.gamma = gamma)
}

#[no_mangle]
pub unsafe extern "C" fn bt_bound_params_set_gain_loss(p: *mut BtBoundParams, gamma1: f64, gamma2: f64) -> BtStatus {
    update(p, |q| {
        q.gamma1 = gamma1;
        q.gamma2 = gamma2;
    })
}

#[no_mangle]
pub unsafe extern "C" fn bt_bound_params_set_population(
    p: *mut BtBoundParams,
    n_bosons: usize,
    lattice_size: usize,
) -> BtStatus {
    update(p, |q| {
        q.n_bosons = n_bosons;
        q.lattice_size = lattice_size;
    })
}

#[no_mangle]
pub unsafe extern "C" fn bt_bound_evaluate(
    p: *const BtBoundParams,
    kind: BtBoundKind,
    d_xy: f64,
    tau: f64,
    delta_n0: usize,
    out_result: *mut BtBoundResult,
) -> BtStatus {
    guard(|| {
        let p = handle(p, "params")?;
        let o = out(out_result, "out_result")?;
        let inputs = BoundInputs { d_xy, tau, delta_n0 };
        let r = bounds::evaluate(kind.into(), &p.0, &inputs).map_err(fail)?;
        *o = BtBoundResult {
            value: r.value,
            feasible: r.feasible,
            epsilon: r.epsilon,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bt_riemann_zeta(s: f64, out_value: *mut f64) -> BtStatus {
    guard(|| {
        let o = out(out_value, "out_value")?;
        *o = bounds::riemann_zeta(s).map_err(fail)?;
        Ok(())
    })
}

unsafe fn transport_inputs(
    n: usize,
    x: *const f64,
    y: *const f64,
    cost: *const f64,
) -> Result<(Distribution, Distribution, CostMatrix), BtStatus> {
    let x = Distribution::new(slice(x, n, "x")?.to_vec()).map_err(fail)?;
    let y = Distribution::new(slice(y, n, "y")?.to_vec()).map_err(fail)?;
    let c = slice(cost, n * n, "cost")?;
    let c = CostMatrix::new(c.chunks(n.max(1)).map(<[f64]>::to_vec).collect()).map_err(fail)?;
    Ok((x, y, c))
}

/// Balanced optimal transport value. `cost` is row-major `n x n`, entry `(m, k)` the
/// cost of moving mass from point `k` to point `m`.
#[no_mangle]
pub unsafe extern "C" fn bt_wasserstein(
    n: usize,
    x: *const f64,
    y: *const f64,
    cost: *const f64,
    out_value: *mut f64,
) -> BtStatus {
    guard(|| {
        let o = out(out_value, "out_value")?;
        let (x, y, c) = transport_inputs(n, x, y, cost)?;
        *o = ot::wasserstein(&x, &y, &c).map_err(fail)?.value;
        Ok(())
    })
}

/// Cheapest way to deliver all of `y` from supplies capped by `x`; needs `sum x >= sum y`.
#[no_mangle]
pub unsafe extern "C" fn bt_generalized_wasserstein(
    n: usize,
    x: *const f64,
    y: *const f64,
    cost: *const f64,
    out_value: *mut f64,
) -> BtStatus {
    guard(|| {
        let o = out(out_value, "out_value")?;
        let (x, y, c) = transport_inputs(n, x, y, cost)?;
        *o = ot::generalized_wasserstein(&x, &y, &c).map_err(fail)?.value;
        Ok(())
    })
}
