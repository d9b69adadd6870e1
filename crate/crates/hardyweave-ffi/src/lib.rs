//! C ABI over the simulator. Callers get opaque report handles plus a
//! status code; every allocating call has a matching `*_free`.
//!
//! Ownership rules:
//! - `hw_hardy_run` / `hw_run_circuit_json` write an owned pointer into
//!   the out-parameter only on `HW_STATUS_OK`.
//! - Strings returned by `hw_report_json` are NUL-terminated and must be
//!   released with `hw_string_free`.
//! - Passing NULL where a handle is expected returns
//!   `HW_STATUS_INVALID_ARGUMENT`; freeing NULL is a no-op.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use num_complex::Complex64;

use hardyweave::analysis::{noise_ratios, verify_hardy_paradox};
use hardyweave::dsl::{compile_circuit, parse_circuit, CompileOptions};
use hardyweave::error::Error;
use hardyweave::pipeline::{run_full, LaserConfig};
use hardyweave::report::{
    render_hardy_text, HardyInputs, HardyResults, Record, RunInputs, RunResults,
};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HwStatus {
    /// Success.
    HwStatusOk = 0,
    /// Bad arguments: NULL pointers, invalid UTF-8, unparseable input,
    /// or parameters outside the supported regime.
    HwStatusInvalidArgument = 1,
    /// The configuration is valid but the physics gate failed: the pair
    /// cancellation left a residual, or post-selection selected nothing.
    HwStatusPhysicsGate = 2,
    /// Unexpected internal failure.
    HwStatusInternal = 3,
}

use HwStatus::*;

/// Opaque result of a pipeline run.
pub struct HwHardyReport {
    inputs: HardyInputs,
    results: HardyResults,
}

fn status_for(err: &Error) -> HwStatus {
    match err.root() {
        Error::CancellationFailed { .. } | Error::EmptySelection => HwStatusPhysicsGate,
        _ => HwStatusInvalidArgument,
    }
}

fn run_hardy_impl(
    alpha: Complex64,
    beta: Complex64,
    gamma: Complex64,
    q: Complex64,
    pump_n_max: u8,
) -> Result<HwHardyReport, Error> {
    let cfg = LaserConfig {
        alpha,
        beta,
        gamma,
        pump_n_max,
    };
    cfg.validate()?;
    let pipeline = run_full(&cfg, q)?;
    let noise = noise_ratios(&cfg, q)?;
    let paradox = verify_hardy_paradox(&cfg, q)?;
    Ok(HwHardyReport {
        inputs: HardyInputs {
            alpha: alpha.into(),
            beta: beta.into(),
            gamma: gamma.into(),
            q: q.into(),
            pump_n_max,
            tol: hardyweave::pipeline::CANCELLATION_TOL,
        },
        results: HardyResults {
            condition5_residual: pipeline.condition5_residual,
            cancellation_residual: pipeline.cancellation_residual,
            stages: vec![],
            probabilities: pipeline.detection_table,
            noise,
            paradox,
        },
    })
}

/// Runs the canonical pipeline. On `HW_STATUS_OK`, `*out_report` owns a
/// report that must be released with `hw_report_free`.
///
/// # Safety
/// `out_report` must be NULL or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn hw_hardy_run(
    alpha_re: f64,
    alpha_im: f64,
    beta_re: f64,
    beta_im: f64,
    gamma_re: f64,
    gamma_im: f64,
    q_re: f64,
    q_im: f64,
    pump_n_max: u8,
    out_report: *mut *mut HwHardyReport,
) -> HwStatus {
    if out_report.is_null() {
        return HwStatusInvalidArgument;
    }
    let result = run_hardy_impl(
        Complex64::new(alpha_re, alpha_im),
        Complex64::new(beta_re, beta_im),
        Complex64::new(gamma_re, gamma_im),
        Complex64::new(q_re, q_im),
        pump_n_max,
    );
    match result {
        Ok(report) => {
            unsafe { *out_report = Box::into_raw(Box::new(report)) };
            HwStatusOk
        }
        Err(e) => {
            unsafe { *out_report = ptr::null_mut() };
            status_for(&e)
        }
    }
}

/// Copies the four coincidence probabilities into `out[0..4]` in the
/// order cc, cd, dc, dd.
///
/// # Safety
/// `report` must be NULL or a live handle from `hw_hardy_run`; `out` must be NULL or valid for writing four `double`s.
#[no_mangle]
pub unsafe extern "C" fn hw_report_probabilities(
    report: *const HwHardyReport,
    out: *mut f64,
) -> HwStatus {
    if report.is_null() || out.is_null() {
        return HwStatusInvalidArgument;
    }
    let table = unsafe { &(*report).results.probabilities };
    let values = [table.cc, table.cd, table.dc, table.dd];
    unsafe { ptr::copy_nonoverlapping(values.as_ptr(), out, 4) };
    HwStatusOk
}

/// Copies the two residuals into `out[0..2]`: the cancellation-condition
/// relative residual, then the measured surviving-pair residual.
///
/// # Safety
/// `report` must be NULL or a live handle from `hw_hardy_run`; `out` must be NULL or valid for writing two `double`s.
#[no_mangle]
pub unsafe extern "C" fn hw_report_residuals(report: *const HwHardyReport, out: *mut f64) -> HwStatus {
    if report.is_null() || out.is_null() {
        return HwStatusInvalidArgument;
    }
    let r = unsafe { &(*report).results };
    let values = [r.condition5_residual, r.cancellation_residual];
    unsafe { ptr::copy_nonoverlapping(values.as_ptr(), out, 2) };
    HwStatusOk
}

/// Returns 1 when the paradox verdict holds, 0 when it does not, and -1
/// for a NULL report.
///
/// # Safety
/// `report` must be NULL or a live handle from `hw_hardy_run`.
#[no_mangle]
pub unsafe extern "C" fn hw_report_verdict(report: *const HwHardyReport) -> i32 {
    if report.is_null() {
        return -1;
    }
    unsafe { (*report).results.paradox.verdict as i32 }
}

/// Serializes the full report (schema_version "1") into an owned
/// NUL-terminated string; release with `hw_string_free`.
///
/// # Safety
/// `report` must be NULL or a live handle from `hw_hardy_run`.
#[no_mangle]
pub unsafe extern "C" fn hw_report_json(report: *const HwHardyReport) -> *mut c_char {
    if report.is_null() {
        return ptr::null_mut();
    }
    let record = unsafe {
        Record::new(
            "hardy",
            (*report).inputs.clone(),
            (*report).results.clone(),
        )
    };
    CString::new(record.to_json())
        .map(CString::into_raw)
        .unwrap_or(ptr::null_mut())
}

/// Human-readable rendering of the report; release with `hw_string_free`.
///
/// # Safety
/// `report` must be NULL or a live handle from `hw_hardy_run`.
#[no_mangle]
pub unsafe extern "C" fn hw_report_text(report: *const HwHardyReport) -> *mut c_char {
    if report.is_null() {
        return ptr::null_mut();
    }
    let text = unsafe { render_hardy_text(&(*report).results) };
    CString::new(text)
        .map(CString::into_raw)
        .unwrap_or(ptr::null_mut())
}

/// Parses, compiles, and runs a circuit program; on `HW_STATUS_OK`
/// writes an owned JSON string into `*out_json` (release with
/// `hw_string_free`).
///
/// # Safety
/// `source` must be NULL or a NUL-terminated string; `out_json` must be NULL or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn hw_run_circuit_json(
    source: *const c_char,
    pump_n_max: u8,
    out_json: *mut *mut c_char,
) -> HwStatus {
    if source.is_null() || out_json.is_null() {
        return HwStatusInvalidArgument;
    }
    unsafe { *out_json = ptr::null_mut() };
    let text = match unsafe { CStr::from_ptr(source) }.to_str() {
        Ok(t) => t,
        Err(_) => return HwStatusInvalidArgument,
    };
    let circuit = match parse_circuit(text) {
        Ok(c) => c,
        Err(_) => return HwStatusInvalidArgument,
    };
    let run = match compile_circuit(&circuit, &CompileOptions { pump_n_max })
        .and_then(|c| c.run())
    {
        Ok(r) => r,
        Err(e) => return status_for(&e),
    };
    let record = Record::new(
        "run",
        RunInputs {
            file: String::new(),
            pump_n_max,
        },
        RunResults {
            condition5_residual: run.condition5_residual,
            cancellation_residual: run.cancellation_residual,
            probabilities: run.probabilities,
            stages: None,
        },
    );
    match CString::new(record.to_json()) {
        Ok(s) => {
            unsafe { *out_json = s.into_raw() };
            HwStatusOk
        }
        Err(_) => HwStatusInternal,
    }
}

/// Releases a string returned by this library. NULL is a no-op.
///
/// # Safety
/// `s` must be NULL or a string previously returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Releases a report handle. NULL is a no-op.
///
/// # Safety
/// `report` must be NULL or a handle previously returned by `hw_hardy_run`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hw_report_free(report: *mut HwHardyReport) {
    if !report.is_null() {
        drop(unsafe { Box::from_raw(report) });
    }
}
