//! C ABI over the simulator. Every function returns an [`SdStatus`]; on
//! failure the message is kept per thread and read with
//! [`sd_last_error_message`]. Handles are heap objects owned by the caller
//! and released with their `_free` function. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use superdiff::analysis::TransportLabel;
use superdiff::config::ExperimentConfig;
use superdiff::experiments::{run_simulation, Simulation};
use superdiff::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad config, argument or lattice; same code as the CLI exit status.
    InvalidArgument = 2,
    ResourceLimit = 3,
    Numeric = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdField {
    Times = 0,
    Mean = 1,
    Stderr = 2,
    LocalExponent = 3,
    RunningExponent = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdLabel {
    Ballistic = 0,
    Superdiffusive = 1,
    Diffusive = 2,
    Intermediate = 3,
}

/// Parsed and validated experiment config.
pub struct SdConfig(ExperimentConfig);

/// Result of one simulation: correlator series and exponent analysis.
pub struct SdSimulation(Simulation);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SdStatus {
    match e {
        Error::ResourceLimit { .. } => SdStatus::ResourceLimit,
        Error::Numeric(_) => SdStatus::Numeric,
        Error::Io(_) => SdStatus::Io,
        _ => SdStatus::InvalidArgument,
    }
}

/// Runs `f`, turning errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), (SdStatus, String)>) -> SdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SdStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(msg);
            SdStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (SdStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SdStatus, String) {
    (SdStatus::NullPointer, format!("{what} is null"))
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn sd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a JSON config; `"{}"` gives all defaults.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sd_config_from_json(json: *const c_char, out: *mut *mut SdConfig) -> SdStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (SdStatus::InvalidArgument, format!("json is not UTF-8: {e}")))?;
        let cfg = ExperimentConfig::from_json(text).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SdConfig(cfg)));
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from [`sd_config_from_json`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn sd_config_free(cfg: *mut SdConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs the configured folded-chain simulation.
///
/// # Safety
/// `cfg` must be a live config handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sd_simulate(cfg: *const SdConfig, out: *mut *mut SdSimulation) -> SdStatus {
    guard(|| {
        let cfg = &cfg.as_ref().ok_or_else(|| null("cfg"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = cfg.folded_lattice().map_err(lib_err)?;
        let sim = run_simulation(cfg, &spec, cfg.physics.lambda, cfg.physics.jperp_ratio).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SdSimulation(sim)));
        Ok(())
    })
}

/// # Safety
/// `sim` must come from [`sd_simulate`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn sd_simulation_free(sim: *mut SdSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Number of values in `field`. Correlator fields have `steps + 1`
/// entries; exponent fields have `steps - 1`, one per slope between
/// consecutive positive times.
///
/// # Safety
/// `sim` must be a live handle and `len` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sd_simulation_len(sim: *const SdSimulation, field: SdField, len: *mut usize) -> SdStatus {
    guard(|| {
        let sim = &sim.as_ref().ok_or_else(|| null("sim"))?.0;
        if len.is_null() {
            return Err(null("len"));
        }
        *len = field_of(sim, field).len();
        Ok(())
    })
}

fn field_of(sim: &Simulation, field: SdField) -> &[f64] {
    match field {
        SdField::Times => &sim.series.times,
        SdField::Mean => &sim.series.mean,
        SdField::Stderr => &sim.series.stderr,
        SdField::LocalExponent => &sim.exponents.local,
        SdField::RunningExponent => &sim.exponents.running,
    }
}

/// Copies `field` into `buf`, which must hold at least its length.
///
/// # Safety
/// `buf` must be writable for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn sd_simulation_copy(
    sim: *const SdSimulation,
    field: SdField,
    buf: *mut f64,
    cap: usize,
) -> SdStatus {
    guard(|| {
        let sim = &sim.as_ref().ok_or_else(|| null("sim"))?.0;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let src = field_of(sim, field);
        if cap < src.len() {
            return Err((
                SdStatus::BufferTooSmall,
                format!("buffer holds {cap} values, {} needed", src.len()),
            ));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
        Ok(())
    })
}

/// Window-mean running exponent and its transport label.
///
/// # Safety
/// `sim` must be a live handle; `exponent` and `label` writable pointers.
#[no_mangle]
pub unsafe extern "C" fn sd_simulation_class(
    sim: *const SdSimulation,
    exponent: *mut f64,
    label: *mut SdLabel,
) -> SdStatus {
    guard(|| {
        let sim = &sim.as_ref().ok_or_else(|| null("sim"))?.0;
        if exponent.is_null() || label.is_null() {
            return Err(null("output"));
        }
        *exponent = sim.class.exponent;
        *label = match sim.class.label {
            TransportLabel::Ballistic => SdLabel::Ballistic,
            TransportLabel::Superdiffusive => SdLabel::Superdiffusive,
            TransportLabel::Diffusive => SdLabel::Diffusive,
            TransportLabel::Intermediate => SdLabel::Intermediate,
        };
        Ok(())
    })
}
