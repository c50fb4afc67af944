//! C ABI over `extinction-core`.
//!
//! Every function returns an [`ExtStatus`]; results come back through out
//! pointers. Objects are opaque handles released with the matching `*_free`
//! function. After a non-zero status, [`ext_last_error_message`] describes
//! the failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use extinction_core::characteristics::DEFAULT_RHO_TOL;
use extinction_core::{
    markov, solver, CdfGrid, DurationLaw, EpidemicCharacteristics, Error, InfectivityLaw, QuadratureSpec, RunConfig,
    TiltBasis,
};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidLaw = 3,
    NoFiniteRoot = 4,
    Numerical = 5,
    Config = 6,
    BufferTooSmall = 7,
    Panic = 99,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtDurationKind {
    Dirac = 0,
    Exponential = 1,
    Uniform = 2,
}

/// `kind` holds an [`ExtDurationKind`] value. `Dirac`: value `a`.
/// `Exponential`: rate `a`. `Uniform`: `[a, b]`.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct ExtDuration {
    pub kind: u32,
    pub a: f64,
    pub b: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtTiltBasis {
    Lifetime = 0,
    InfectiousPeriod = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct ExtCharacteristics {
    pub r_eff: f64,
    pub rho: f64,
    pub s_bar: f64,
    pub lambda_hat_star: f64,
}

/// `truncation_bound` is NaN when no decay rate was given.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct ExtMean {
    pub mean_days: f64,
    pub tail_mass: f64,
    pub truncation_bound: f64,
}

/// Opaque infectivity law.
pub struct ExtLaw(InfectivityLaw);

/// Opaque extinction-time CDF grid.
pub struct ExtCdfGrid(CdfGrid);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(ExtStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Domain(_) => ExtStatus::InvalidArgument,
            Error::InvalidLaw(_) => ExtStatus::InvalidLaw,
            Error::NoFiniteRoot { .. } => ExtStatus::NoFiniteRoot,
            Error::GridOverflow(_) | Error::Invariant(_) | Error::MassDrift { .. } => ExtStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(ExtStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ExtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ExtStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ExtStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: caller passes a live handle or null
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    // SAFETY: non-null and supplied by the caller as writable
    unsafe { out.write(value) };
    Ok(())
}

// C callers can pass any integer, so enums travel as u32 and are checked here.
fn duration(d: ExtDuration) -> Result<DurationLaw, Failure> {
    match d.kind {
        k if k == ExtDurationKind::Dirac as u32 => Ok(DurationLaw::Dirac { a: d.a }),
        k if k == ExtDurationKind::Exponential as u32 => Ok(DurationLaw::Exponential { rate: d.a }),
        k if k == ExtDurationKind::Uniform as u32 => Ok(DurationLaw::Uniform { lo: d.a, hi: d.b }),
        k => Err(Failure(ExtStatus::InvalidArgument, format!("unknown duration kind {k}"))),
    }
}

fn basis(b: u32) -> Result<TiltBasis, Failure> {
    match b {
        b if b == ExtTiltBasis::Lifetime as u32 => Ok(TiltBasis::Lifetime),
        b if b == ExtTiltBasis::InfectiousPeriod as u32 => Ok(TiltBasis::InfectiousPeriod),
        b => Err(Failure(ExtStatus::InvalidArgument, format!("unknown tilt basis {b}"))),
    }
}

unsafe fn emit_law(law: Result<InfectivityLaw, Error>, s_bar: f64, out: *mut *mut ExtLaw) -> Result<(), Failure> {
    let law = law?.scaled(s_bar)?;
    unsafe { put(out, Box::into_raw(Box::new(ExtLaw(law)))) }
}

/// Thread-local message for the last failed call, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn ext_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ext_law_constant_rate(lambda: f64, eta: ExtDuration, s_bar: f64, out: *mut *mut ExtLaw) -> ExtStatus {
    guard(|| unsafe { emit_law(InfectivityLaw::constant_rate(lambda, duration(eta)?), s_bar, out) })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ext_law_exposed_constant_rate(
    lambda: f64,
    xi: ExtDuration,
    eta: ExtDuration,
    s_bar: f64,
    out: *mut *mut ExtLaw,
) -> ExtStatus {
    guard(|| unsafe { emit_law(InfectivityLaw::exposed_constant_rate(lambda, duration(xi)?, duration(eta)?), s_bar, out) })
}

/// Triangular ramp with peak `peak` reached `ramp` days after `τ`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ext_law_triangular(
    peak: f64,
    ramp: f64,
    tau: ExtDuration,
    eta: ExtDuration,
    s_bar: f64,
    out: *mut *mut ExtLaw,
) -> ExtStatus {
    guard(|| unsafe {
        let law = InfectivityLaw::triangular_ramp(peak, duration(tau)?, duration(eta)?).and_then(|l| l.with_ramp(ramp));
        emit_law(law, s_bar, out)
    })
}

/// Law described by the `model` section of a JSON run configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ext_law_from_config_json(json: *const c_char, out: *mut *mut ExtLaw) -> ExtStatus {
    guard(|| unsafe {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure(ExtStatus::Config, e.to_string()))?;
        let cfg = RunConfig::from_json(text).map_err(|e| Failure(ExtStatus::Config, e.to_string()))?;
        let law = cfg.law()?;
        put(out, Box::into_raw(Box::new(ExtLaw(law))))
    })
}

/// # Safety
/// `law` must come from an `ext_law_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ext_law_free(law: *mut ExtLaw) {
    if !law.is_null() {
        drop(unsafe { Box::from_raw(law) });
    }
}

/// # Safety
/// `law` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ext_characteristics(law: *const ExtLaw, out: *mut ExtCharacteristics) -> ExtStatus {
    guard(|| unsafe {
        let law = deref(law, "law")?;
        let c = EpidemicCharacteristics::of(&law.0, &QuadratureSpec::default(), DEFAULT_RHO_TOL)?;
        put(
            out,
            ExtCharacteristics {
                r_eff: c.r_eff,
                rho: c.rho,
                s_bar: c.s_bar,
                lambda_hat_star: c.lambda_hat_star,
            },
        )
    })
}

/// # Safety
/// `law` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ext_solve_cdf(law: *const ExtLaw, n: usize, horizon: f64, out: *mut *mut ExtCdfGrid) -> ExtStatus {
    guard(|| unsafe {
        let law = deref(law, "law")?;
        let g = solver::solve_cdf(&law.0, n, horizon, &QuadratureSpec::default())?;
        put(out, Box::into_raw(Box::new(ExtCdfGrid(g))))
    })
}

/// CDF for one ancestor of uniformly distributed infection age; `tilt` is
/// an [`ExtTiltBasis`] value.
///
/// # Safety
/// `law` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ext_solve_tilted_cdf(
    law: *const ExtLaw,
    n: usize,
    horizon: f64,
    tilt: u32,
    out: *mut *mut ExtCdfGrid,
) -> ExtStatus {
    guard(|| unsafe {
        let law = deref(law, "law")?;
        let g = solver::solve_tilted_cdf(&law.0, n, horizon, &QuadratureSpec::default(), basis(tilt)?)?;
        put(out, Box::into_raw(Box::new(ExtCdfGrid(g))))
    })
}

/// Number of grid points, or 0 for a null handle.
///
/// # Safety
/// `grid` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ext_cdf_len(grid: *const ExtCdfGrid) -> usize {
    unsafe { grid.as_ref() }.map_or(0, |g| g.0.len())
}

/// Copies the grid values into `buf`. Fails with `BUFFER_TOO_SMALL` (and
/// writes nothing) when `cap` is less than [`ext_cdf_len`].
///
/// # Safety
/// `grid` must be a live handle; `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ext_cdf_values(grid: *const ExtCdfGrid, buf: *mut f64, cap: usize) -> ExtStatus {
    guard(|| unsafe {
        let g = deref(grid, "grid")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let n = g.0.len();
        if cap < n {
            return Err(Failure(ExtStatus::BufferTooSmall, format!("need {n} slots, got {cap}")));
        }
        ptr::copy_nonoverlapping(g.0.values.as_ptr(), buf, n);
        Ok(())
    })
}

/// Step-interpolated `F(t)`.
///
/// # Safety
/// `grid` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ext_cdf_eval(grid: *const ExtCdfGrid, t: f64, out: *mut f64) -> ExtStatus {
    guard(|| unsafe {
        let g = deref(grid, "grid")?;
        put(out, g.0.eval(t)?)
    })
}

/// New grid holding `F^m`.
///
/// # Safety
/// `grid` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ext_cdf_power(grid: *const ExtCdfGrid, m: u32, out: *mut *mut ExtCdfGrid) -> ExtStatus {
    guard(|| unsafe {
        let g = deref(grid, "grid")?;
        put(out, Box::into_raw(Box::new(ExtCdfGrid(g.0.power(m)?))))
    })
}

/// Mean extinction time up to `cutoff`; pass NaN for `rho` to skip the
/// truncation bound.
///
/// # Safety
/// `grid` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ext_cdf_mean(grid: *const ExtCdfGrid, cutoff: f64, rho: f64, out: *mut ExtMean) -> ExtStatus {
    guard(|| unsafe {
        let g = deref(grid, "grid")?;
        let m = g.0.mean(cutoff, (!rho.is_nan()).then_some(rho))?;
        put(
            out,
            ExtMean {
                mean_days: m.mean_days,
                tail_mass: m.tail_mass,
                truncation_bound: m.truncation_bound.unwrap_or(f64::NAN),
            },
        )
    })
}

/// # Safety
/// `grid` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ext_cdf_free(grid: *mut ExtCdfGrid) {
    if !grid.is_null() {
        drop(unsafe { Box::from_raw(grid) });
    }
}

/// Markov SIR extinction CDF for one ancestor.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ext_sir_cdf(r_eff: f64, rho: f64, t: f64, out: *mut f64) -> ExtStatus {
    guard(|| unsafe { put(out, markov::sir_cdf(r_eff, rho, t)?) })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ext_sir_mean(r_eff: f64, rho: f64, out: *mut f64) -> ExtStatus {
    guard(|| unsafe { put(out, markov::sir_mean(r_eff, rho)?) })
}
