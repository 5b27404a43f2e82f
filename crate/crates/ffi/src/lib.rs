//! C ABI for `stable-sde`.
//!
//! Conventions:
//! * every fallible call returns an [`SsdeStatus`]; on failure the message
//!   is available from [`ssde_last_error`] on the same thread;
//! * results are written through out-pointers;
//! * objects are opaque handles released with their `*_free` function;
//! * strings returned by the library are released with
//!   [`ssde_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stable_sde::experiments::{parse_configs, run_experiment};
use stable_sde::function::parse_set;
use stable_sde::functionals::{path_integral, Thresholds};
use stable_sde::integral_tests::{kernel_integral, power_law_test};
use stable_sde::rng::stream;
use stable_sde::sde::{classify_sde, solve_with};
use stable_sde::stable::{sample_path, GridSpec, PathSample, StableParams};
use stable_sde::wiener::{build_example_set, unit_ball_capacity, wiener_sum, ShellSpec};
use stable_sde::{Error, ErrorClass, FunctionSpec, IntervalSet};

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsdeStatus {
    Ok = 0,
    /// A null pointer or a string that is not UTF-8.
    InvalidArgument = 1,
    /// Parameters or inputs rejected by validation.
    Validation = 2,
    /// I/O or other runtime failure.
    Runtime = 3,
    /// An internal panic was caught at the boundary.
    Panic = 4,
}

/// Opaque function specification (an `f` or a `σ`).
pub struct SsdeFunction(FunctionSpec);

/// Opaque sampled path skeleton.
pub struct SsdePath(PathSample);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

enum Failure {
    Arg(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `body`, translating errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> SsdeStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SsdeStatus::Ok
        }
        Ok(Err(Failure::Arg(msg))) => {
            set_error(msg);
            SsdeStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(format!("{}: {e}", e.kind()));
            match e.class() {
                ErrorClass::Validation => SsdeStatus::Validation,
                ErrorClass::Runtime => SsdeStatus::Runtime,
            }
        }
        Err(_) => {
            set_error("internal panic");
            SsdeStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Arg(name));
    }
    // SAFETY: the caller passes a valid NUL-terminated string.
    unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| Failure::Arg(name))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    // SAFETY: the caller passes a valid, writable pointer or null.
    unsafe { p.as_mut() }.ok_or(Failure::Arg(name))
}

unsafe fn handle<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: the caller passes a live handle or null.
    unsafe { p.as_ref() }.ok_or(Failure::Arg(name))
}

fn c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::Arg("output contains a NUL byte"))
}

fn json_out<T: serde::Serialize>(v: &T, out: &mut *mut c_char) -> Result<(), Failure> {
    *out = c_string(serde_json::to_string(v).map_err(Error::from)?)?;
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn ssde_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ssde_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: allocated by `CString::into_raw` in this crate.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Parses a function from JSON or the inline mini-language
/// (e.g. `power:|x|^1.5`).
///
/// # Safety
/// `src` must be a NUL-terminated string; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ssde_function_parse(src: *const c_char, out: *mut *mut SsdeFunction) -> SsdeStatus {
    guard(|| {
        let out = unsafe { out_arg(out, "out")? };
        let f = FunctionSpec::parse(unsafe { str_arg(src, "src")? })?;
        *out = Box::into_raw(Box::new(SsdeFunction(f)));
        Ok(())
    })
}

/// Value of the function at `x` (`+inf` on poles).
///
/// # Safety
/// `f` must be a live handle; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ssde_function_eval(f: *const SsdeFunction, x: f64, out: *mut f64) -> SsdeStatus {
    guard(|| {
        *unsafe { out_arg(out, "out")? } = unsafe { handle(f, "f")? }.0.eval(x);
        Ok(())
    })
}

/// # Safety
/// `f` must be null or a handle from [`ssde_function_parse`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ssde_function_free(f: *mut SsdeFunction) {
    if !f.is_null() {
        // SAFETY: allocated by `Box::into_raw` in this crate.
        drop(unsafe { Box::from_raw(f) });
    }
}

/// Samples a path from `z` on a uniform grid, using random stream
/// `(seed, index)`.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ssde_path_sample(
    alpha: f64,
    z: f64,
    horizon: f64,
    step: f64,
    seed: u64,
    index: u64,
    out: *mut *mut SsdePath,
) -> SsdeStatus {
    guard(|| {
        let out = unsafe { out_arg(out, "out")? };
        let params = StableParams::new(alpha)?;
        let path = sample_path(&params, z, horizon, step, None, &mut stream(seed, index))?;
        *out = Box::into_raw(Box::new(SsdePath(path)));
        Ok(())
    })
}

/// Number of nodes of the path.
///
/// # Safety
/// `path` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ssde_path_len(path: *const SsdePath) -> usize {
    // SAFETY: the caller passes a live handle or null.
    unsafe { path.as_ref() }.map_or(0, |p| p.0.len())
}

/// Copies up to `cap` node times and values into `times` and `values`
/// (either may be null) and returns the number of nodes copied.
///
/// # Safety
/// `path` must be a live handle; non-null buffers must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ssde_path_copy(path: *const SsdePath, times: *mut f64, values: *mut f64, cap: usize) -> usize {
    // SAFETY: the caller passes a live handle or null.
    let Some(p) = (unsafe { path.as_ref() }) else {
        return 0;
    };
    let n = p.0.len().min(cap);
    if !times.is_null() {
        // SAFETY: `times` holds at least `cap ≥ n` doubles.
        unsafe { ptr::copy_nonoverlapping(p.0.times().as_ptr(), times, n) };
    }
    if !values.is_null() {
        // SAFETY: as above.
        unsafe { ptr::copy_nonoverlapping(p.0.values().as_ptr(), values, n) };
    }
    n
}

/// `∫_0^t f(X_s) ds` along the path (`+inf` allowed).
///
/// # Safety
/// `path` and `f` must be live handles; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ssde_path_integral(
    path: *const SsdePath,
    f: *const SsdeFunction,
    t: f64,
    out: *mut f64,
) -> SsdeStatus {
    guard(|| {
        let out = unsafe { out_arg(out, "out")? };
        let v = path_integral(&unsafe { handle(path, "path")? }.0, &unsafe { handle(f, "f")? }.0, t)?;
        *out = v.value();
        Ok(())
    })
}

/// # Safety
/// `path` must be null or a handle from [`ssde_path_sample`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ssde_path_free(path: *mut SsdePath) {
    if !path.is_null() {
        // SAFETY: allocated by `Box::into_raw` in this crate.
        drop(unsafe { Box::from_raw(path) });
    }
}

/// Capacity of the unit ball `[−1, 1]`.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ssde_unit_ball_capacity(alpha: f64, out: *mut f64) -> SsdeStatus {
    guard(|| {
        *unsafe { out_arg(out, "out")? } = unit_ball_capacity(alpha)?;
        Ok(())
    })
}

/// Classification report of `dZ = σ(Z−)dX` as JSON.
///
/// # Safety
/// `sigma` must be a live handle; `out_json` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ssde_classify_json(
    alpha: f64,
    sigma: *const SsdeFunction,
    out_json: *mut *mut c_char,
) -> SsdeStatus {
    guard(|| {
        let out = unsafe { out_arg(out_json, "out_json")? };
        json_out(&classify_sde(alpha, &unsafe { handle(sigma, "sigma")? }.0)?, out)
    })
}

/// `∫_domain f(y)|z − y|^{α−1} dy` as a JSON verdict. `domain` is a set
/// such as `[-1,1)` or `[[0,1],[2,3]]`; null means the whole line.
///
/// # Safety
/// `f` must be a live handle; `domain` null or a NUL-terminated string;
/// `out_json` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ssde_kernel_integral_json(
    alpha: f64,
    z: f64,
    f: *const SsdeFunction,
    domain: *const c_char,
    tol: f64,
    out_json: *mut *mut c_char,
) -> SsdeStatus {
    guard(|| {
        let out = unsafe { out_arg(out_json, "out_json")? };
        let domain = if domain.is_null() {
            IntervalSet::real_line()
        } else {
            parse_set(unsafe { str_arg(domain, "domain")? }).ok_or(Failure::Arg("domain"))?
        };
        json_out(
            &kernel_integral(alpha, z, &unsafe { handle(f, "f")? }.0, &domain, tol)?,
            out,
        )
    })
}

/// Closed-form test for `σ = |x|^β` as a JSON verdict.
///
/// # Safety
/// `out_json` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ssde_power_law_test_json(alpha: f64, beta: f64, out_json: *mut *mut c_char) -> SsdeStatus {
    guard(|| {
        let out = unsafe { out_arg(out_json, "out_json")? };
        json_out(&power_law_test(alpha, beta)?, out)
    })
}

/// Wiener series of the first `n_max` blocks of the example set on dyadic
/// shells `1..=n_max`, as JSON.
///
/// # Safety
/// `out_json` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ssde_wiener_example_json(alpha: f64, n_max: u32, out_json: *mut *mut c_char) -> SsdeStatus {
    guard(|| {
        let out = unsafe { out_arg(out_json, "out_json")? };
        let set = build_example_set(n_max)?;
        let spec = ShellSpec::new(0.0, 2.0, 1, i32::try_from(n_max).map_err(|_| Failure::Arg("n_max"))?)?;
        json_out(&wiener_sum(alpha, &spec, &set)?.to_json(None), out)
    })
}

/// Solves by time change on a uniform grid and returns the CSV
/// `s,phi,z_value` (with a trailing status line).
///
/// # Safety
/// `sigma` must be a live handle; `out_csv` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ssde_solve_csv(
    alpha: f64,
    sigma: *const SsdeFunction,
    z: f64,
    horizon: f64,
    step: f64,
    seed: u64,
    out_csv: *mut *mut c_char,
) -> SsdeStatus {
    guard(|| {
        let out = unsafe { out_arg(out_csv, "out_csv")? };
        let sol = solve_with(
            alpha,
            &unsafe { handle(sigma, "sigma")? }.0,
            z,
            horizon,
            &GridSpec::uniform(step),
            Thresholds::default(),
            None,
            &mut stream(seed, 0),
        )?;
        *out = c_string(sol.to_csv())?;
        Ok(())
    })
}

/// Runs an experiment config (JSON object or array) and returns its CSV.
/// `threads = 0` uses one worker per core; the output does not depend on it.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out_csv` a writable
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn ssde_run_experiment_csv(
    config_json: *const c_char,
    threads: usize,
    out_csv: *mut *mut c_char,
) -> SsdeStatus {
    guard(|| {
        let out = unsafe { out_arg(out_csv, "out_csv")? };
        let cfgs = parse_configs(unsafe { str_arg(config_json, "config_json")? })?;
        let mut buf = Vec::new();
        run_experiment(&cfgs, &mut buf, threads)?;
        *out = c_string(String::from_utf8(buf).map_err(|_| Failure::Arg("non-UTF-8 output"))?)?;
        Ok(())
    })
}
