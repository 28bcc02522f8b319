//! C ABI over `fracgame`. Objects cross the boundary as opaque handles that
//! the caller releases with the matching `*_free` function; every fallible
//! call returns an [`FgStatus`] and leaves a message for
//! [`fg_last_error_message`] on failure. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fracgame::cli::{emit_report, ReportFormat, Scenario};
use fracgame::equilibrium::{solve_m_star, EquilibriumSolution};
use fracgame::fbm::{self, FbmSampler, HurstParam, Method, TimeGrid};
use fracgame::girsanov::GirsanovKernel;
use fracgame::verify::{run_suite, Check, SuiteConfig};
use fracgame::{Error, ErrorClass};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FgStatus {
    Ok = 0,
    CheckFailed = 1,
    InputError = 2,
    NumericalError = 3,
    NullPointer = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FgMethod {
    Cholesky = 0,
    Circulant = 1,
}

/// A solved game.
pub struct FgSolution {
    inner: EquilibriumSolution,
}

/// An fBm path generator on a fixed grid.
pub struct FgPathSampler {
    inner: FbmSampler,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Status(FgStatus, String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(FgStatus::NullPointer, format!("`{what}` is null"))
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<FgStatus, Failure>) -> FgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(&msg);
            s
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(&format!("error class={} msg={e}", e.class()));
            match e.class() {
                ErrorClass::Numerical => FgStatus::NumericalError,
                ErrorClass::Input | ErrorClass::Io => FgStatus::InputError,
            }
        }
        Err(_) => {
            set_error("internal panic");
            FgStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Status(FgStatus::InputError, format!("`{what}` is not UTF-8")))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<FgStatus, Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(FgStatus::Ok)
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).expect("no interior nul").into_raw()
}

/// Message of the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer obtained from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a JSON scenario and solves for `m*`.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn fg_solve_scenario_json(json: *const c_char, out: *mut *mut FgSolution) -> FgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let sc = Scenario::from_json(read_str(json, "json")?)?;
        let sol = solve_m_star(&sc.spec()?, &sc.solver()?)?;
        write(out, Box::into_raw(Box::new(FgSolution { inner: sol })), "out")
    })
}

/// # Safety
/// `sol` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fg_solution_m_star(sol: *const FgSolution, out: *mut f64) -> FgStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        write(out, sol.inner.m_star(), "out")
    })
}

/// Value of the budget function at `m`.
///
/// # Safety
/// `sol` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fg_solution_budget(sol: *const FgSolution, m: f64, out: *mut f64) -> FgStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        if !(m > 0.0 && m.is_finite()) {
            return Err(Failure::Status(
                FgStatus::InputError,
                format!("m = {m} must be positive"),
            ));
        }
        write(out, sol.inner.budget(m), "out")
    })
}

/// Solution summary as a JSON string, released with [`fg_string_free`].
///
/// # Safety
/// `sol` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fg_solution_summary_json(sol: *const FgSolution, out: *mut *mut c_char) -> FgStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = serde_json::to_string(&sol.inner.summary()).expect("summary serializes");
        write(out, into_c_string(text), "out")
    })
}

/// # Safety
/// `sol` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fg_solution_free(sol: *mut FgSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// fBm autocovariance `E[B_s B_t]`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fg_autocov(s: f64, t: f64, h: f64, out: *mut f64) -> FgStatus {
    guard(|| write(out, fbm::autocov(s, t, HurstParam::new(h)?), "out"))
}

/// Kernel `phi(s, t) = H(2H-1)|s-t|^(2H-2)`; fails on the diagonal.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fg_phi(s: f64, t: f64, h: f64, out: *mut f64) -> FgStatus {
    guard(|| write(out, fbm::phi(s, t, HurstParam::new(h)?)?, "out"))
}

/// Drift-removal kernel `K(t)` for drift `c` on `[0, horizon]`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fg_kernel_k(c: f64, horizon: f64, h: f64, t: f64, out: *mut f64) -> FgStatus {
    guard(|| {
        let k = GirsanovKernel::new(c, horizon, HurstParam::new(h)?)?;
        write(out, k.kernel_k(t)?, "out")
    })
}

/// Creates a sampler for fBm on `steps` cells of `[0, horizon]`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fg_sampler_new(
    horizon: f64,
    steps: usize,
    h: f64,
    method: FgMethod,
    seed: u64,
    out: *mut *mut FgPathSampler,
) -> FgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let method = match method {
            FgMethod::Cholesky => Method::Cholesky,
            FgMethod::Circulant => Method::Circulant,
        };
        let inner = FbmSampler::new(TimeGrid::new(horizon, steps)?, HurstParam::new(h)?, method, seed)?;
        write(out, Box::into_raw(Box::new(FgPathSampler { inner })), "out")
    })
}

/// Writes path `stream` into `values`, which must hold `steps + 1` numbers.
///
/// # Safety
/// `sampler` must be a live handle and `values` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn fg_sampler_path(
    sampler: *const FgPathSampler,
    stream: u64,
    values: *mut f64,
    len: usize,
) -> FgStatus {
    guard(|| {
        let s = sampler.as_ref().ok_or_else(|| null("sampler"))?;
        if values.is_null() {
            return Err(null("values"));
        }
        let need = s.inner.grid().steps() + 1;
        if len != need {
            return Err(Failure::Status(
                FgStatus::InputError,
                format!("buffer holds {len} values, path has {need}"),
            ));
        }
        let path = s.inner.path(stream);
        std::slice::from_raw_parts_mut(values, len).copy_from_slice(&path.values);
        Ok(FgStatus::Ok)
    })
}

/// # Safety
/// `sampler` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fg_sampler_free(sampler: *mut FgPathSampler) {
    if !sampler.is_null() {
        drop(Box::from_raw(sampler));
    }
}

/// Runs the full verification suite with the scenario's numerics and
/// returns the JSON-lines report through `out` (release with
/// [`fg_string_free`]). Returns `CHECK_FAILED` if any check fails; the
/// report is written in that case too.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fg_verify_scenario_json(json: *const c_char, out: *mut *mut c_char) -> FgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let sc = Scenario::from_json(read_str(json, "json")?)?;
        let nm = &sc.numerics;
        let cfg = SuiteConfig {
            spec: sc.spec()?,
            solver: sc.solver()?,
            grid: nm.grid,
            paths: nm.paths,
            seed: nm.seed,
            method: nm.method,
            checks: Check::ALL.to_vec(),
            endpoint_paths: nm.endpoint_paths,
            argmax_pairs: nm.argmax_pairs,
        };
        let reports = run_suite(&cfg)?;
        let mut buf = Vec::new();
        emit_report(&reports, ReportFormat::Jsonl, &mut buf).map_err(Error::from)?;
        write(out, into_c_string(String::from_utf8(buf).expect("ASCII report")), "out")?;
        Ok(if reports.iter().all(|r| r.pass) {
            FgStatus::Ok
        } else {
            FgStatus::CheckFailed
        })
    })
}
