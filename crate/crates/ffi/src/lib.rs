//! C ABI over `interlock-core`.
//!
//! Objects are opaque handles created and destroyed through this API. Every
//! fallible call returns an [`InterlockStatus`]; on failure the message is
//! available from [`interlock_last_error_message`] on the same thread.
//! Strings returned through out-parameters are owned by the caller and must
//! be released with [`interlock_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use interlock_core::cycle::CycleProgram;
use interlock_core::kinematics::{alpha, beta, cycle_turn_angle, AnchorSide, TurnDirection};
use interlock_core::planner::{plan, predict, Goal, PlannerCalibration};
use interlock_core::sim::{run_program, RunSummary, SimConfig, SimRun};
use interlock_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InterlockStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad configuration, program, goal or file contents.
    InvalidInput = 2,
    /// The model failed while running.
    RuntimeError = 3,
    InvalidUtf8 = 4,
    IndexOutOfRange = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InterlockSide {
    Left = 0,
    Right = 1,
}

impl From<InterlockSide> for AnchorSide {
    fn from(s: InterlockSide) -> Self {
        match s {
            InterlockSide::Left => AnchorSide::Left,
            InterlockSide::Right => AnchorSide::Right,
        }
    }
}

impl From<InterlockSide> for TurnDirection {
    fn from(s: InterlockSide) -> Self {
        match s {
            InterlockSide::Left => TurnDirection::Left,
            InterlockSide::Right => TurnDirection::Right,
        }
    }
}

/// Simulator configuration.
pub struct InterlockConfig {
    inner: SimConfig,
}

/// Result of a simulated run.
pub struct InterlockRun {
    run: SimRun,
    config: SimConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: InterlockStatus, message: impl Into<String>) -> InterlockStatus {
    set_error(message.into());
    status
}

fn from_core(e: Error) -> InterlockStatus {
    let status = if e.is_usage() {
        InterlockStatus::InvalidInput
    } else {
        InterlockStatus::RuntimeError
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> InterlockStatus) -> InterlockStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(InterlockStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, InterlockStatus> {
    if p.is_null() {
        return Err(fail(
            InterlockStatus::NullPointer,
            format!("{name} is null"),
        ));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(InterlockStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, InterlockStatus> {
    p.as_ref()
        .ok_or_else(|| fail(InterlockStatus::NullPointer, format!("{name} is null")))
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> InterlockStatus {
    if out.is_null() {
        return fail(InterlockStatus::NullPointer, format!("{name} is null"));
    }
    out.write(value);
    InterlockStatus::Ok
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> InterlockStatus {
    match CString::new(s) {
        Ok(c) => write_out(out, c.into_raw(), "out"),
        Err(_) => fail(InterlockStatus::RuntimeError, "output contains a nul byte"),
    }
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn interlock_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn interlock_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn interlock_config_default(
    out: *mut *mut InterlockConfig,
) -> InterlockStatus {
    guard(|| {
        let handle = Box::new(InterlockConfig {
            inner: SimConfig::default(),
        });
        write_out(out, Box::into_raw(handle), "out")
    })
}

/// Parse a JSON configuration; missing fields take their defaults.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn interlock_config_from_json(
    json: *const c_char,
    out: *mut *mut InterlockConfig,
) -> InterlockStatus {
    guard(|| {
        let text = tri!(str_arg(json, "json"));
        let inner = tri!(SimConfig::from_json(text).map_err(from_core));
        write_out(
            out,
            Box::into_raw(Box::new(InterlockConfig { inner })),
            "out",
        )
    })
}

/// # Safety
/// `config` must come from this library and not have been freed. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn interlock_config_free(config: *mut InterlockConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn interlock_config_set_seed(
    config: *mut InterlockConfig,
    seed: u64,
) -> InterlockStatus {
    guard(|| match config.as_mut() {
        Some(c) => {
            c.inner.rng_seed = seed;
            InterlockStatus::Ok
        }
        None => fail(InterlockStatus::NullPointer, "config is null"),
    })
}

/// Configuration as pretty JSON.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn interlock_config_to_json(
    config: *const InterlockConfig,
    out: *mut *mut c_char,
) -> InterlockStatus {
    guard(|| {
        let c = tri!(ref_arg(config, "config"));
        write_string(out, c.inner.to_json_pretty())
    })
}

/// Contraction heading change in degrees for a spike anchored on `side`.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn interlock_alpha_deg(
    config: *const InterlockConfig,
    side: InterlockSide,
    out: *mut f64,
) -> InterlockStatus {
    guard(|| {
        let c = tri!(ref_arg(config, "config"));
        write_out(
            out,
            alpha(&c.inner.geometry, side.into()).to_degrees(),
            "out",
        )
    })
}

/// Expansion heading change in degrees for a cycle contracting on `side`.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn interlock_beta_deg(
    config: *const InterlockConfig,
    side: InterlockSide,
    out: *mut f64,
) -> InterlockStatus {
    guard(|| {
        let c = tri!(ref_arg(config, "config"));
        let b =
            tri!(beta(&c.inner.geometry, &c.inner.weight_transfer, side.into()).map_err(from_core));
        write_out(out, b.to_degrees(), "out")
    })
}

/// Signed heading change of one turn cycle in `direction`, degrees.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn interlock_cycle_turn_deg(
    config: *const InterlockConfig,
    direction: InterlockSide,
    out: *mut f64,
) -> InterlockStatus {
    guard(|| {
        let c = tri!(ref_arg(config, "config"));
        let a = tri!(cycle_turn_angle(
            &c.inner.geometry,
            &c.inner.weight_transfer,
            direction.into()
        )
        .map_err(from_core));
        write_out(out, a.to_degrees(), "out")
    })
}

/// Simulate a cycle program given as JSON.
///
/// # Safety
/// `config` must be a live handle, `program_json` a nul-terminated string
/// and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn interlock_run_program(
    config: *const InterlockConfig,
    program_json: *const c_char,
    out: *mut *mut InterlockRun,
) -> InterlockStatus {
    guard(|| {
        let c = tri!(ref_arg(config, "config"));
        let text = tri!(str_arg(program_json, "program_json"));
        let program = tri!(CycleProgram::from_json(text).map_err(from_core));
        let run = tri!(run_program(&program, &c.inner).map_err(from_core));
        let handle = Box::new(InterlockRun {
            run,
            config: c.inner,
        });
        write_out(out, Box::into_raw(handle), "out")
    })
}

/// # Safety
/// `run` must come from this library and not have been freed. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn interlock_run_free(run: *mut InterlockRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of telemetry samples, or 0 for a null handle.
///
/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn interlock_run_sample_count(run: *const InterlockRun) -> usize {
    run.as_ref().map_or(0, |r| r.run.telemetry.len())
}

/// Time, position and heading (radians) of sample `index`.
///
/// # Safety
/// `run` must be a live handle; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn interlock_run_sample(
    run: *const InterlockRun,
    index: usize,
    t: *mut f64,
    x: *mut f64,
    y: *mut f64,
    heading: *mut f64,
) -> InterlockStatus {
    guard(|| {
        let r = tri!(ref_arg(run, "run"));
        let Some(s) = r.run.telemetry.get(index) else {
            return fail(
                InterlockStatus::IndexOutOfRange,
                format!("sample {index} of {}", r.run.telemetry.len()),
            );
        };
        if t.is_null() || x.is_null() || y.is_null() || heading.is_null() {
            return fail(InterlockStatus::NullPointer, "output pointer is null");
        }
        t.write(s.t);
        x.write(s.pose.x);
        y.write(s.pose.y);
        heading.write(s.pose.heading);
        InterlockStatus::Ok
    })
}

/// Summary of the run as JSON.
///
/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn interlock_run_summary_json(
    run: *const InterlockRun,
    out: *mut *mut c_char,
) -> InterlockStatus {
    guard(|| {
        let r = tri!(ref_arg(run, "run"));
        let summary = tri!(RunSummary::new(&r.run, &r.config).map_err(from_core));
        let text = tri!(serde_json::to_string(&summary)
            .map_err(|e| fail(InterlockStatus::RuntimeError, e.to_string())));
        write_string(out, text)
    })
}

/// Write the telemetry CSV to `path`.
///
/// # Safety
/// `run` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn interlock_run_write_telemetry_csv(
    run: *const InterlockRun,
    path: *const c_char,
) -> InterlockStatus {
    guard(|| {
        let r = tri!(ref_arg(run, "run"));
        let path = tri!(str_arg(path, "path"));
        let file = tri!(interlock_core::io::create(path.as_ref()).map_err(from_core));
        tri!(interlock_core::io::write_telemetry_csv(file, &r.run.telemetry).map_err(from_core));
        InterlockStatus::Ok
    })
}

/// Plan a goal given as JSON, e.g. `{"goal":"headland_turn","direction":"left"}`.
/// `calibration_json` may be null to use the default calibration. The
/// result holds the program and its predicted outcome.
///
/// # Safety
/// String arguments must be nul-terminated (or null where allowed) and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn interlock_plan_json(
    goal_json: *const c_char,
    calibration_json: *const c_char,
    out: *mut *mut c_char,
) -> InterlockStatus {
    guard(|| {
        let goal_text = tri!(str_arg(goal_json, "goal_json"));
        let goal: Goal = tri!(serde_json::from_str(goal_text)
            .map_err(|e| fail(InterlockStatus::InvalidInput, e.to_string())));
        let calibration = if calibration_json.is_null() {
            PlannerCalibration::default()
        } else {
            let text = tri!(str_arg(calibration_json, "calibration_json"));
            tri!(PlannerCalibration::from_json(text).map_err(from_core))
        };
        let p = tri!(plan(&goal, &calibration).map_err(from_core));
        let prediction = tri!(predict(&p.program, &calibration).map_err(from_core));
        let value = serde_json::json!({
            "program": p.program,
            "overshoot": p.overshoot,
            "prediction": prediction,
        });
        write_string(out, value.to_string())
    })
}
