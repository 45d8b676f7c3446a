//! C ABI for the crash-robust investment library.
//!
//! Conventions:
//! - every handle (`WciModel`, `WciSurface`, `WciPaths`) is opaque and
//!   owned by the caller once returned; release it with the matching
//!   `wci_*_free`, which accepts null,
//! - functions return a [`WciStatus`]; out-parameters are written only on
//!   `WCI_STATUS_OK`,
//! - the message for the most recent failure on the current thread is
//!   available through [`wci_last_error`] until the next failing call.
//!
//! The header `include/wcinvest.h` is generated from this file by
//! cbindgen in the build script.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use wcinvest::cli::config::parse_config;
use wcinvest::error::Error;
use wcinvest::factor::{simulate_paths, PathBundle, RngSpec};
use wcinvest::market::ModelSpec;
use wcinvest::presets::PresetId;
use wcinvest::solver::{policy_surface, solve_pde, PolicySurface, SolverConfig, ValueSurface};

/// Status code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WciStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Arguments violate a model or configuration invariant.
    InvalidArgument = 3,
    /// Arguments left the mathematical domain of an operation.
    DomainError = 4,
    /// A numerical routine failed.
    SolverError = 5,
    /// File output failed.
    IoError = 6,
    /// The library panicked; the handle states are unchanged.
    Panic = 7,
}

/// Opaque market model handle.
pub struct WciModel {
    spec: ModelSpec,
}

/// Opaque solved-surface handle (exposure and policy on one grid).
pub struct WciSurface {
    value: ValueSurface,
    policy: PolicySurface,
    z0: f64,
}

/// Opaque simulated-paths handle.
pub struct WciPaths {
    bundle: PathBundle,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap());
}

fn status_of(err: &Error) -> WciStatus {
    match err {
        Error::Domain(_) => WciStatus::DomainError,
        Error::InvalidModel(_) | Error::Config { .. } | Error::Verification(_) => {
            WciStatus::InvalidArgument
        }
        Error::Solver(_) => WciStatus::SolverError,
        Error::Io(_) => WciStatus::IoError,
    }
}

fn fail(err: Error) -> WciStatus {
    let code = status_of(&err);
    set_error(&err.to_string());
    code
}

fn guarded<F: FnOnce() -> WciStatus>(f: F) -> WciStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => {
            set_error("internal panic");
            WciStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, WciStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(WciStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        WciStatus::InvalidUtf8
    })
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wci_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Create a model from a preset name (`a`, `b`, `c`, `d` or `ko`).
///
/// # Safety
/// `name` must be a valid NUL-terminated string; `out` must be valid for
/// a single pointer write.
#[no_mangle]
pub unsafe extern "C" fn wci_model_preset(name: *const c_char, out: *mut *mut WciModel) -> WciStatus {
    if out.is_null() {
        set_error("null out pointer");
        return WciStatus::NullArgument;
    }
    let name = match read_str(name) {
        Ok(s) => s,
        Err(code) => return code,
    };
    guarded(|| match PresetId::parse(name) {
        Ok(id) => {
            let spec = wcinvest::presets::preset(id);
            *out = Box::into_raw(Box::new(WciModel { spec }));
            WciStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Create a model from flat `key = value` configuration text (same
/// format as the CLI config files).
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out` must be valid for
/// a single pointer write.
#[no_mangle]
pub unsafe extern "C" fn wci_model_from_config(
    text: *const c_char,
    out: *mut *mut WciModel,
) -> WciStatus {
    if out.is_null() {
        set_error("null out pointer");
        return WciStatus::NullArgument;
    }
    let text = match read_str(text) {
        Ok(s) => s,
        Err(code) => return code,
    };
    guarded(|| match parse_config(text) {
        Ok(cfg) => {
            *out = Box::into_raw(Box::new(WciModel { spec: cfg.model }));
            WciStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// # Safety
/// `model` must be a pointer previously returned by this library, or null.
#[no_mangle]
pub unsafe extern "C" fn wci_model_free(model: *mut WciModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Assumption report. Quantities that do not apply (e.g. the Feller
/// index of a non-CIR factor) come back as NaN.
///
/// # Safety
/// `model` must be a live model handle; out-pointers may be null when the
/// corresponding value is not wanted.
#[no_mangle]
pub unsafe extern "C" fn wci_model_conditions(
    model: *const WciModel,
    feller_index: *mut f64,
    exp_moment_threshold: *mut f64,
    admissible_cap: *mut f64,
) -> WciStatus {
    let Some(m) = model.as_ref() else {
        set_error("null model handle");
        return WciStatus::NullArgument;
    };
    let rep = m.spec.check_conditions();
    if !feller_index.is_null() {
        *feller_index = rep.feller_index.unwrap_or(f64::NAN);
    }
    if !exp_moment_threshold.is_null() {
        *exp_moment_threshold = rep.exp_moment_threshold.unwrap_or(f64::NAN);
    }
    if !admissible_cap.is_null() {
        *admissible_cap = rep.admissible_cap;
    }
    WciStatus::Ok
}

/// Post-crash optimal allocation at factor value `x`.
///
/// # Safety
/// `model` must be a live model handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn wci_model_merton(
    model: *const WciModel,
    x: f64,
    out: *mut f64,
) -> WciStatus {
    let Some(m) = model.as_ref() else {
        set_error("null model handle");
        return WciStatus::NullArgument;
    };
    if out.is_null() {
        set_error("null out pointer");
        return WciStatus::NullArgument;
    }
    guarded(|| match m.spec.merton(x) {
        Ok(v) => {
            *out = v;
            WciStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Generator `f(x, y)` of the backward exposure equation.
///
/// # Safety
/// `model` must be a live model handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn wci_model_generator(
    model: *const WciModel,
    x: f64,
    y: f64,
    out: *mut f64,
) -> WciStatus {
    let Some(m) = model.as_ref() else {
        set_error("null model handle");
        return WciStatus::NullArgument;
    };
    if out.is_null() {
        set_error("null out pointer");
        return WciStatus::NullArgument;
    }
    guarded(|| match m.spec.generator(x, y) {
        Ok(v) => {
            *out = v;
            WciStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Solve the exposure PDE. Pass 0 for `n_t` or `n_x` to use the
/// production defaults (1000 and 200).
///
/// # Safety
/// `model` must be a live model handle; `out` must be valid for a single
/// pointer write.
#[no_mangle]
pub unsafe extern "C" fn wci_solve(
    model: *const WciModel,
    n_t: u32,
    n_x: u32,
    out: *mut *mut WciSurface,
) -> WciStatus {
    let Some(m) = model.as_ref() else {
        set_error("null model handle");
        return WciStatus::NullArgument;
    };
    if out.is_null() {
        set_error("null out pointer");
        return WciStatus::NullArgument;
    }
    let mut cfg = SolverConfig::default();
    if n_t > 0 {
        cfg.n_t = n_t as usize;
    }
    if n_x > 0 {
        cfg.n_x = n_x as usize;
    }
    guarded(|| {
        if let Err(e) = cfg.validate() {
            return fail(e);
        }
        match solve_pde(&m.spec, &cfg) {
            Ok(value) => {
                let policy = policy_surface(&value, m.spec.crash.l_woc);
                let handle = WciSurface { value, policy, z0: m.spec.factor.z0 };
                *out = Box::into_raw(Box::new(handle));
                WciStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `surface` must be a pointer previously returned by this library, or null.
#[no_mangle]
pub unsafe extern "C" fn wci_surface_free(surface: *mut WciSurface) {
    if !surface.is_null() {
        drop(Box::from_raw(surface));
    }
}

/// Exposure `v(t, x)` by bilinear interpolation (x clamps to the grid).
///
/// # Safety
/// `surface` must be a live surface handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn wci_surface_exposure_at(
    surface: *const WciSurface,
    t: f64,
    x: f64,
    out: *mut f64,
) -> WciStatus {
    let Some(s) = surface.as_ref() else {
        set_error("null surface handle");
        return WciStatus::NullArgument;
    };
    if out.is_null() {
        set_error("null out pointer");
        return WciStatus::NullArgument;
    }
    *out = s.value.value_at(t, x).0;
    WciStatus::Ok
}

/// Allocation `pi(t, x)` by bilinear interpolation (x clamps to the grid).
///
/// # Safety
/// `surface` must be a live surface handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn wci_surface_policy_at(
    surface: *const WciSurface,
    t: f64,
    x: f64,
    out: *mut f64,
) -> WciStatus {
    let Some(s) = surface.as_ref() else {
        set_error("null surface handle");
        return WciStatus::NullArgument;
    };
    if out.is_null() {
        set_error("null out pointer");
        return WciStatus::NullArgument;
    }
    *out = s.policy.eval(t, x).0;
    WciStatus::Ok
}

/// Exposure at `(0, z0)`: the initial utility crash exposure of the model.
///
/// # Safety
/// `surface` must be a live surface handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn wci_surface_initial_exposure(
    surface: *const WciSurface,
    out: *mut f64,
) -> WciStatus {
    let Some(s) = surface.as_ref() else {
        set_error("null surface handle");
        return WciStatus::NullArgument;
    };
    if out.is_null() {
        set_error("null out pointer");
        return WciStatus::NullArgument;
    }
    *out = s.value.value_at(0.0, s.z0).0;
    WciStatus::Ok
}

/// Write the exposure (`as_policy = false`) or allocation surface
/// (`as_policy = true`) as long-format CSV `t,x,v`.
///
/// # Safety
/// `surface` must be a live surface handle; `path` a valid NUL-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn wci_surface_write_csv(
    surface: *const WciSurface,
    path: *const c_char,
    as_policy: bool,
) -> WciStatus {
    let Some(s) = surface.as_ref() else {
        set_error("null surface handle");
        return WciStatus::NullArgument;
    };
    let path = match read_str(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    guarded(|| {
        let mut buf = Vec::new();
        let res = if as_policy { s.policy.write_csv(&mut buf) } else { s.value.write_csv(&mut buf) };
        if let Err(e) = res.and_then(|_| std::fs::write(path, &buf)) {
            return fail(Error::Io(e.to_string()));
        }
        WciStatus::Ok
    })
}

/// Simulate factor paths on a uniform grid with per-path substreams.
///
/// # Safety
/// `model` must be a live model handle; `out` must be valid for a single
/// pointer write.
#[no_mangle]
pub unsafe extern "C" fn wci_simulate(
    model: *const WciModel,
    n_paths: u32,
    n_steps: u32,
    seed: u64,
    out: *mut *mut WciPaths,
) -> WciStatus {
    let Some(m) = model.as_ref() else {
        set_error("null model handle");
        return WciStatus::NullArgument;
    };
    if out.is_null() {
        set_error("null out pointer");
        return WciStatus::NullArgument;
    }
    guarded(|| {
        match simulate_paths(
            &m.spec.factor,
            n_paths as usize,
            n_steps as usize,
            m.spec.horizon,
            &RngSpec::new(seed),
        ) {
            Ok(bundle) => {
                *out = Box::into_raw(Box::new(WciPaths { bundle }));
                WciStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `paths` must be a pointer previously returned by this library, or null.
#[no_mangle]
pub unsafe extern "C" fn wci_paths_free(paths: *mut WciPaths) {
    if !paths.is_null() {
        drop(Box::from_raw(paths));
    }
}

/// Number of simulated paths.
///
/// # Safety
/// `paths` must be a live paths handle (null returns 0).
#[no_mangle]
pub unsafe extern "C" fn wci_paths_count(paths: *const WciPaths) -> u32 {
    paths.as_ref().map_or(0, |p| p.bundle.n_paths() as u32)
}

/// Number of grid points per path (steps + 1).
///
/// # Safety
/// `paths` must be a live paths handle (null returns 0).
#[no_mangle]
pub unsafe extern "C" fn wci_paths_len(paths: *const WciPaths) -> usize {
    paths.as_ref().map_or(0, |p| p.bundle.times.len())
}

/// Copy the time grid into `buf` (length from [`wci_paths_len`]).
///
/// # Safety
/// `buf` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn wci_paths_times(
    paths: *const WciPaths,
    buf: *mut f64,
    len: usize,
) -> WciStatus {
    let Some(p) = paths.as_ref() else {
        set_error("null paths handle");
        return WciStatus::NullArgument;
    };
    if buf.is_null() {
        set_error("null buffer");
        return WciStatus::NullArgument;
    }
    if len < p.bundle.times.len() {
        set_error("buffer too small for the time grid");
        return WciStatus::InvalidArgument;
    }
    std::ptr::copy_nonoverlapping(p.bundle.times.as_ptr(), buf, p.bundle.times.len());
    WciStatus::Ok
}

/// Copy one path's factor values into `buf` (length from [`wci_paths_len`]).
///
/// # Safety
/// `buf` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn wci_paths_values(
    paths: *const WciPaths,
    path: u32,
    buf: *mut f64,
    len: usize,
) -> WciStatus {
    let Some(p) = paths.as_ref() else {
        set_error("null paths handle");
        return WciStatus::NullArgument;
    };
    if buf.is_null() {
        set_error("null buffer");
        return WciStatus::NullArgument;
    }
    let Some(values) = p.bundle.values.get(path as usize) else {
        set_error("path index out of range");
        return WciStatus::InvalidArgument;
    };
    if len < values.len() {
        set_error("buffer too small for the path");
        return WciStatus::InvalidArgument;
    }
    std::ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    WciStatus::Ok
}

/// Write paths as CSV (`t,path0,path1,...`).
///
/// # Safety
/// `paths` must be a live paths handle; `path` a valid NUL-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn wci_paths_write_csv(
    paths: *const WciPaths,
    path: *const c_char,
) -> WciStatus {
    let Some(p) = paths.as_ref() else {
        set_error("null paths handle");
        return WciStatus::NullArgument;
    };
    let path = match read_str(path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    guarded(|| {
        let mut buf = Vec::new();
        if let Err(e) = p.bundle.write_csv(&mut buf).and_then(|_| std::fs::write(path, &buf)) {
            return fail(Error::Io(e.to_string()));
        }
        WciStatus::Ok
    })
}
