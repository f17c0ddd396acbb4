//! C ABI over `bae-core`.
//!
//! A `BaeSimulator` is created from configuration text and released with
//! [`bae_simulator_free`]. Every fallible call returns a [`BaeStatus`]; on a
//! nonzero status the message is available from [`bae_last_error`] on the
//! same thread. Panics are caught and reported as `BAE_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bae_core::bae::bae_report;
use bae_core::config::{parse_config, RunConfig};
use bae_core::model::ProbeParams;
use bae_core::perturb::PerturbativeSolver;
use bae_core::spectra::{
    duan_quantity_with, output_point, quadrature_point, Contraction, DuanMethod, DuanOptions, QuadratureSelector,
};
use bae_core::SimError;

/// Result codes. `BAE_STATUS_OK` is zero; the rest mirror the error kinds of
/// the core library plus argument errors at the boundary.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    BufferTooSmall = 4,
    ParseError = 10,
    ValidationError = 11,
    InvalidParameter = 12,
    DegeneratePumps = 13,
    UnequalOccupations = 14,
    NonHermitianResult = 15,
    SidebandOverflow = 16,
    PhaseConditionViolated = 17,
    NotConverged = 18,
    IllConditioned = 19,
    ExtractionIllConditioned = 20,
    InvalidGrid = 21,
    IoError = 22,
    Panic = 99,
}

impl From<&SimError> for BaeStatus {
    fn from(e: &SimError) -> Self {
        match e {
            SimError::InvalidParameter { .. } => BaeStatus::InvalidParameter,
            SimError::DegeneratePumps { .. } => BaeStatus::DegeneratePumps,
            SimError::UnequalOccupations { .. } => BaeStatus::UnequalOccupations,
            SimError::NonHermitianResult { .. } => BaeStatus::NonHermitianResult,
            SimError::SidebandOverflow { .. } => BaeStatus::SidebandOverflow,
            SimError::PhaseConditionViolated { .. } => BaeStatus::PhaseConditionViolated,
            SimError::NotConverged(_) => BaeStatus::NotConverged,
            SimError::IllConditioned { .. } => BaeStatus::IllConditioned,
            SimError::ExtractionIllConditioned { .. } => BaeStatus::ExtractionIllConditioned,
            SimError::InvalidGrid(_) => BaeStatus::InvalidGrid,
            SimError::Parse { .. } => BaeStatus::ParseError,
            SimError::Validation { .. } => BaeStatus::ValidationError,
            SimError::Io(_) => BaeStatus::IoError,
        }
    }
}

/// Selects how the Duan variances are obtained.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaeDuanMethod {
    Direct = 0,
    Output = 1,
}

/// Collective quadrature selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaeQuadrature {
    XSigma = 0,
    YSigma = 1,
    XDelta = 2,
    YDelta = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BaeDuanResult {
    pub var_x_sigma: f64,
    pub var_y_delta: f64,
    pub duan_sum: f64,
    pub violated: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BaeVerdict {
    pub pass: bool,
    pub phase_ok: bool,
    /// φ₁ − φ₂ wrapped into (−π, π].
    pub dphi: f64,
    /// Largest residual among checks required to vanish.
    pub max_zero_residual: f64,
    /// Smallest exposed-quadrature norm, or 0 when none is exposed.
    pub min_exposed_norm: f64,
}

/// Opaque simulator handle.
pub struct BaeSimulator {
    config: RunConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> Result<(), (BaeStatus, String)>) -> BaeStatus {
    set_error(String::new());
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BaeStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside bae-ffi".into());
            BaeStatus::Panic
        }
    }
}

fn sim_err(e: SimError) -> (BaeStatus, String) {
    (BaeStatus::from(&e), e.to_string())
}

fn null(what: &str) -> (BaeStatus, String) {
    (BaeStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `sim` must be null or a handle from [`bae_simulator_new`] not yet freed.
unsafe fn handle<'a>(sim: *const BaeSimulator) -> Result<&'a BaeSimulator, (BaeStatus, String)> {
    sim.as_ref().ok_or_else(|| null("simulator"))
}

/// Creates a simulator from `key=value` configuration text (NUL-terminated,
/// UTF-8). An empty string selects the defaults.
///
/// # Safety
/// `config` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn bae_simulator_new(config: *const c_char, out: *mut *mut BaeSimulator) -> BaeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if config.is_null() {
            return Err(null("config"));
        }
        let text = CStr::from_ptr(config)
            .to_str()
            .map_err(|e| (BaeStatus::InvalidUtf8, format!("config is not UTF-8: {e}")))?;
        let config = parse_config(text).map_err(sim_err)?;
        *out = Box::into_raw(Box::new(BaeSimulator { config }));
        Ok(())
    })
}

/// Releases a simulator. Null is ignored.
///
/// # Safety
/// `sim` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn bae_simulator_free(sim: *mut BaeSimulator) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bae_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Writes the 64-character config fingerprint plus NUL into `buf`.
///
/// # Safety
/// `sim` must be a live handle and `buf` point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bae_fingerprint(sim: *const BaeSimulator, buf: *mut c_char, len: usize) -> BaeStatus {
    guard(|| {
        let sim = handle(sim)?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let fp = sim.config.fingerprint();
        if len < fp.len() + 1 {
            return Err((BaeStatus::BufferTooSmall, format!("need {} bytes, got {len}", fp.len() + 1)));
        }
        ptr::copy_nonoverlapping(fp.as_ptr(), buf as *mut u8, fp.len());
        *buf.add(fp.len()) = 0;
        Ok(())
    })
}

/// Duan variances and their sum.
///
/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bae_duan(
    sim: *const BaeSimulator,
    method: BaeDuanMethod,
    out: *mut BaeDuanResult,
) -> BaeStatus {
    guard(|| {
        let sim = handle(sim)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let c = &sim.config;
        let method = match method {
            BaeDuanMethod::Direct => DuanMethod::DirectQuadrature,
            BaeDuanMethod::Output => DuanMethod::OutputExtraction,
        };
        let opts =
            DuanOptions { half_width: (c.window > 0.0).then_some(c.window), points: c.points, adaptive: c.adaptive };
        let d = duan_quantity_with(&c.params, &c.probe, method, &opts).map_err(sim_err)?;
        *out = BaeDuanResult {
            var_x_sigma: d.var_x_sigma,
            var_y_delta: d.var_y_delta,
            duan_sum: d.duan_sum,
            violated: d.violated,
        };
        Ok(())
    })
}

/// # Safety
/// `omega` must point to `n` readable and `values` to `n` writable doubles.
unsafe fn fill(
    omega: *const f64,
    values: *mut f64,
    n: usize,
    f: impl Fn(f64) -> Result<f64, SimError>,
) -> Result<(), (BaeStatus, String)> {
    if n == 0 {
        return Ok(());
    }
    if omega.is_null() {
        return Err(null("omega"));
    }
    if values.is_null() {
        return Err(null("values"));
    }
    let omega = std::slice::from_raw_parts(omega, n);
    let values = std::slice::from_raw_parts_mut(values, n);
    for (w, v) in omega.iter().zip(values.iter_mut()) {
        if !w.is_finite() {
            return Err((BaeStatus::InvalidArgument, format!("omega {w} is not finite")));
        }
        *v = f(*w).map_err(sim_err)?;
    }
    Ok(())
}

/// Symmetrized spectrum of an unprobed collective quadrature at `n`
/// frequencies.
///
/// # Safety
/// `sim` must be a live handle; `omega` and `values` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn bae_quadrature_spectrum(
    sim: *const BaeSimulator,
    quadrature: BaeQuadrature,
    omega: *const f64,
    n: usize,
    values: *mut f64,
) -> BaeStatus {
    guard(|| {
        let sim = handle(sim)?;
        let p = &sim.config.params;
        let sel = match quadrature {
            BaeQuadrature::XSigma => QuadratureSelector::X_SIGMA,
            BaeQuadrature::YSigma => QuadratureSelector::Y_SIGMA,
            BaeQuadrature::XDelta => QuadratureSelector::X_DELTA,
            BaeQuadrature::YDelta => QuadratureSelector::Y_DELTA,
        };
        let solver = PerturbativeSolver::new(p, &ProbeParams::off()).map_err(sim_err)?;
        let c = Contraction::original(p).map_err(sim_err)?;
        fill(omega, values, n, |w| quadrature_point(sel, &solver, &c, w))
    })
}

/// Homodyne output spectrum at the configured relative angle `theta`.
///
/// # Safety
/// `sim` must be a live handle; `omega` and `values` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn bae_output_spectrum(
    sim: *const BaeSimulator,
    omega: *const f64,
    n: usize,
    values: *mut f64,
) -> BaeStatus {
    guard(|| {
        let sim = handle(sim)?;
        let c = &sim.config;
        let solver = PerturbativeSolver::new(&c.params, &c.probe).map_err(sim_err)?;
        let contraction = Contraction::original(&c.params).map_err(sim_err)?;
        fill(omega, values, n, |w| output_point(&solver, &contraction, c.theta, w))
    })
}

/// Backaction-evasion verdict for the configured probe.
///
/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bae_verify(sim: *const BaeSimulator, out: *mut BaeVerdict) -> BaeStatus {
    guard(|| {
        let sim = handle(sim)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = bae_report(&sim.config.params, &sim.config.probe).map_err(sim_err)?;
        let zero = r.checks.iter().filter(|c| !c.name.starts_with("exposed_")).map(|c| c.residual).fold(0.0, f64::max);
        let exposed = r
            .checks
            .iter()
            .filter(|c| c.name.starts_with("exposed_"))
            .map(|c| c.residual)
            .fold(f64::INFINITY, f64::min);
        *out = BaeVerdict {
            pass: r.pass,
            phase_ok: r.phase_ok,
            dphi: r.dphi,
            max_zero_residual: zero,
            min_exposed_norm: if exposed.is_finite() { exposed } else { 0.0 },
        };
        Ok(())
    })
}
