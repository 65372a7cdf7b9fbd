//! C ABI over the gss4d library: opaque handles for configurations and
//! constellations, status-code error reporting with a thread-local message,
//! and a flat evaluation entry point.
//!
//! Conventions: every function is `extern "C"`; handles are created and
//! destroyed only through this interface; all pointers must be non-null
//! unless documented otherwise; strings are NUL-terminated UTF-8; panics
//! never cross the boundary (they become `GSS4D_STATUS_PANIC`).

use gss4d::config::RunConfig;
use gss4d::constellation::{
    build_gss_constellation, load_constellation_file, pm16qam, ps_pm16qam_constellation,
    save_constellation_file, Constellation, PSDistribution, ParamVector, ShapingConfig,
};
use gss4d::experiments::{evaluate_link, REP_OPTIMIZE, REP_REPORT};
use gss4d::metrics::papr_symbols;
use gss4d::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gss4dStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A numeric argument or state was outside its domain.
    Domain = 3,
    /// A configuration was structurally invalid.
    Config = 4,
    /// An input was degenerate (for example, zero received power).
    Degenerate = 5,
    /// An estimator had too little data to produce a result.
    Estimation = 6,
    /// A constellation file failed to parse.
    Parse = 7,
    /// The adaptive fiber stepper underflowed its minimum step.
    StepUnderflow = 8,
    /// An I/O operation failed.
    Io = 9,
    /// Serialization or deserialization failed.
    Serde = 10,
    /// A panic was caught at the boundary.
    Panic = 11,
    /// An output buffer was too small.
    BufferTooSmall = 12,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message.into());
}

fn status_of(err: &Error) -> Gss4dStatus {
    match err {
        Error::Domain(_) => Gss4dStatus::Domain,
        Error::Config(_) => Gss4dStatus::Config,
        Error::Degenerate(_) => Gss4dStatus::Degenerate,
        Error::Estimation(_) => Gss4dStatus::Estimation,
        Error::Parse { .. } => Gss4dStatus::Parse,
        Error::StepUnderflow(_) => Gss4dStatus::StepUnderflow,
        Error::Io(_) => Gss4dStatus::Io,
        Error::Json(_) | Error::Toml(_) => Gss4dStatus::Serde,
    }
}

fn fail(err: Error) -> Gss4dStatus {
    let code = status_of(&err);
    set_error(err.to_string());
    code
}

/// Runs a closure with panic containment, translating a panic into
/// `GSS4D_STATUS_PANIC`.
fn guarded(f: impl FnOnce() -> Gss4dStatus) -> Gss4dStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("panic inside gss4d");
            Gss4dStatus::Panic
        }
    }
}

/// # Safety
/// `ptr` must be non-null and point to a NUL-terminated string.
unsafe fn utf8_arg<'a>(ptr: *const c_char) -> Result<&'a str, Gss4dStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(Gss4dStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        Gss4dStatus::InvalidUtf8
    })
}

/// Copies the message of the most recent error on this thread into `buf`
/// (NUL-terminated, truncated to `cap` bytes). Returns the full message
/// length in bytes, excluding the terminator; call with a null `buf` or
/// zero `cap` to query the length.
///
/// # Safety
/// `buf` must be null or point to at least `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn gss4d_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// An owned run configuration. Opaque; create, mutate, and free only
/// through `gss4d_config_*`.
pub struct Gss4dConfig(RunConfig);

/// An owned constellation. Opaque; create and free only through
/// `gss4d_constellation_*`.
pub struct Gss4dConstellation(Constellation);

/// A mutual-information estimate and the evaluation's side figures.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct Gss4dLinkResult {
    /// Mutual information, bits per 4D symbol.
    pub mi_bits_per_4d: f64,
    /// Monte-Carlo standard error of `mi_bits_per_4d`.
    pub mi_stderr: f64,
    /// Fitted per-4D-symbol noise variance.
    pub sigma2: f64,
    /// Symbols that entered the estimate after edge discard.
    pub n_symbols: u64,
    /// Symbol-domain peak-to-average power ratio (linear).
    pub papr_symbol: f64,
    /// Transmit-waveform peak-to-average power ratio, dB.
    pub papr_waveform_db: f64,
}

/// Creates a configuration with the library defaults. Never fails.
#[no_mangle]
pub extern "C" fn gss4d_config_default() -> *mut Gss4dConfig {
    Box::into_raw(Box::new(Gss4dConfig(RunConfig::default())))
}

/// Loads a TOML configuration from `path` into `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gss4d_config_load(
    path: *const c_char,
    out: *mut *mut Gss4dConfig,
) -> Gss4dStatus {
    if out.is_null() {
        set_error("null output pointer");
        return Gss4dStatus::NullPointer;
    }
    let path = match utf8_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    guarded(|| match RunConfig::load(Path::new(path)) {
        Ok(cfg) => {
            *out = Box::into_raw(Box::new(Gss4dConfig(cfg)));
            Gss4dStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Replaces the master seed.
///
/// # Safety
/// `cfg` must be a live handle from `gss4d_config_*`.
#[no_mangle]
pub unsafe extern "C" fn gss4d_config_set_seed(cfg: *mut Gss4dConfig, seed: u64) -> Gss4dStatus {
    match cfg.as_mut() {
        Some(c) => {
            c.0.master_seed = seed;
            Gss4dStatus::Ok
        }
        None => {
            set_error("null config handle");
            Gss4dStatus::NullPointer
        }
    }
}

/// Applies the quick profile (smaller symbol counts, coarser stepping).
///
/// # Safety
/// `cfg` must be a live handle from `gss4d_config_*`.
#[no_mangle]
pub unsafe extern "C" fn gss4d_config_apply_quick(cfg: *mut Gss4dConfig) -> Gss4dStatus {
    match cfg.as_mut() {
        Some(c) => {
            c.0.apply_quick();
            Gss4dStatus::Ok
        }
        None => {
            set_error("null config handle");
            Gss4dStatus::NullPointer
        }
    }
}

/// Frees a configuration handle. Null is a no-op.
///
/// # Safety
/// `cfg` must be null or a live handle; it is dead afterwards.
#[no_mangle]
pub unsafe extern "C" fn gss4d_config_free(cfg: *mut Gss4dConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Creates the PM-16QAM baseline. Never fails.
#[no_mangle]
pub extern "C" fn gss4d_constellation_pm16qam() -> *mut Gss4dConstellation {
    Box::into_raw(Box::new(Gss4dConstellation(pm16qam())))
}

/// Creates probabilistically shaped PM-16QAM with outer-ring probability
/// `p3` into `*out`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gss4d_constellation_ps_pm16qam(
    p3: f64,
    out: *mut *mut Gss4dConstellation,
) -> Gss4dStatus {
    if out.is_null() {
        set_error("null output pointer");
        return Gss4dStatus::NullPointer;
    }
    guarded(|| {
        match PSDistribution::new(p3).and_then(ps_pm16qam_constellation) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(Gss4dConstellation(c)));
                Gss4dStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Builds an energy-normalized GSS constellation for modulation order
/// 2^`m` with `k` shells from `n_params` free parameters (first the `k`
/// shell radii ascending, then triples of hyperspherical angles) into
/// `*out`.
///
/// # Safety
/// `params` must point to `n_params` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gss4d_constellation_build_gss(
    m: u32,
    k: u32,
    params: *const f64,
    n_params: usize,
    out: *mut *mut Gss4dConstellation,
) -> Gss4dStatus {
    if out.is_null() || (params.is_null() && n_params > 0) {
        set_error("null pointer argument");
        return Gss4dStatus::NullPointer;
    }
    let values = std::slice::from_raw_parts(params, n_params).to_vec();
    guarded(|| {
        let built = ShapingConfig::new(m, k)
            .and_then(|shaping| {
                let pv = ParamVector::from_values(&shaping, values)?;
                build_gss_constellation(&pv, &shaping, None)
            });
        match built {
            Ok(c) => {
                *out = Box::into_raw(Box::new(Gss4dConstellation(c)));
                Gss4dStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Loads a constellation from the text format into `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gss4d_constellation_load(
    path: *const c_char,
    out: *mut *mut Gss4dConstellation,
) -> Gss4dStatus {
    if out.is_null() {
        set_error("null output pointer");
        return Gss4dStatus::NullPointer;
    }
    let path = match utf8_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    guarded(|| match load_constellation_file(path) {
        Ok(c) => {
            *out = Box::into_raw(Box::new(Gss4dConstellation(c)));
            Gss4dStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Writes a constellation to the text format at `path`.
///
/// # Safety
/// `c` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gss4d_constellation_save(
    c: *const Gss4dConstellation,
    path: *const c_char,
) -> Gss4dStatus {
    let handle = match c.as_ref() {
        Some(h) => h,
        None => {
            set_error("null constellation handle");
            return Gss4dStatus::NullPointer;
        }
    };
    let path = match utf8_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    guarded(|| match save_constellation_file(&handle.0, path) {
        Ok(()) => Gss4dStatus::Ok,
        Err(e) => fail(e),
    })
}

/// Number of points.
///
/// # Safety
/// `c` must be a live handle. Returns 0 on null.
#[no_mangle]
pub unsafe extern "C" fn gss4d_constellation_size(c: *const Gss4dConstellation) -> usize {
    c.as_ref().map_or(0, |h| h.0.size())
}

/// Prior-weighted mean symbol energy.
///
/// # Safety
/// `c` must be a live handle. Returns NaN on null.
#[no_mangle]
pub unsafe extern "C" fn gss4d_constellation_mean_energy(c: *const Gss4dConstellation) -> f64 {
    c.as_ref().map_or(f64::NAN, |h| h.0.mean_energy())
}

/// Source entropy in bits per 4D symbol.
///
/// # Safety
/// `c` must be a live handle. Returns NaN on null.
#[no_mangle]
pub unsafe extern "C" fn gss4d_constellation_entropy_bits(c: *const Gss4dConstellation) -> f64 {
    c.as_ref().map_or(f64::NAN, |h| h.0.entropy_bits())
}

/// Symbol-domain peak-to-average power ratio (linear).
///
/// # Safety
/// `c` must be a live handle. Returns NaN on null.
#[no_mangle]
pub unsafe extern "C" fn gss4d_constellation_papr(c: *const Gss4dConstellation) -> f64 {
    c.as_ref().map_or(f64::NAN, |h| papr_symbols(&h.0))
}

/// Copies the point coordinates into `buf` as point-major quadruples
/// (x1, x2, x3, x4), requiring `cap >= 4 * size`.
///
/// # Safety
/// `c` must be a live handle; `buf` must point to `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gss4d_constellation_points(
    c: *const Gss4dConstellation,
    buf: *mut f64,
    cap: usize,
) -> Gss4dStatus {
    let handle = match c.as_ref() {
        Some(h) => h,
        None => {
            set_error("null constellation handle");
            return Gss4dStatus::NullPointer;
        }
    };
    if buf.is_null() {
        set_error("null buffer");
        return Gss4dStatus::NullPointer;
    }
    let needed = 4 * handle.0.size();
    if cap < needed {
        set_error(format!("buffer holds {cap} doubles, need {needed}"));
        return Gss4dStatus::BufferTooSmall;
    }
    for (i, p) in handle.0.points.iter().enumerate() {
        *buf.add(4 * i) = p.x1;
        *buf.add(4 * i + 1) = p.x2;
        *buf.add(4 * i + 2) = p.x3;
        *buf.add(4 * i + 3) = p.x4;
    }
    Gss4dStatus::Ok
}

/// Frees a constellation handle. Null is a no-op.
///
/// # Safety
/// `c` must be null or a live handle; it is dead afterwards.
#[no_mangle]
pub unsafe extern "C" fn gss4d_constellation_free(c: *mut Gss4dConstellation) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Runs the full link evaluation (shaping, fiber, noise loading, receiver,
/// mutual information) for `c` under `cfg` at one operating point.
/// `use_final_symbols` selects the reporting symbol count and replicate;
/// zero selects the optimizer profile (common random numbers).
///
/// # Safety
/// `cfg` and `c` must be live handles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gss4d_evaluate_link(
    cfg: *const Gss4dConfig,
    c: *const Gss4dConstellation,
    distance_km: f64,
    power_dbm: f64,
    use_final_symbols: i32,
    out: *mut Gss4dLinkResult,
) -> Gss4dStatus {
    let (cfg, c) = match (cfg.as_ref(), c.as_ref()) {
        (Some(cfg), Some(c)) => (cfg, c),
        _ => {
            set_error("null handle argument");
            return Gss4dStatus::NullPointer;
        }
    };
    if out.is_null() {
        set_error("null output pointer");
        return Gss4dStatus::NullPointer;
    }
    guarded(|| {
        let (n, rep) = if use_final_symbols != 0 {
            (cfg.0.n_symbols_final, REP_REPORT)
        } else {
            (cfg.0.n_symbols, REP_OPTIMIZE)
        };
        match evaluate_link(&c.0, &cfg.0, distance_km, power_dbm, n, rep) {
            Ok(eval) => {
                *out = Gss4dLinkResult {
                    mi_bits_per_4d: eval.mi.mi_bits_per_4d,
                    mi_stderr: eval.mi.stderr,
                    sigma2: eval.mi.sigma2,
                    n_symbols: eval.mi.n_symbols as u64,
                    papr_symbol: eval.papr_symbol,
                    papr_waveform_db: eval.papr_waveform_db,
                };
                Gss4dStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
