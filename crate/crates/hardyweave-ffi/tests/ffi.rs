//! Exercises the C ABI from Rust, including the NULL contracts.

use std::ffi::{CStr, CString};
use std::ptr;

use hardyweave_ffi::*;

#[test]
fn run_and_read_back_defaults() {
    unsafe {
        let mut report: *mut HwHardyReport = ptr::null_mut();
        let status =
            hw_hardy_run(0.01, 0.0, 0.01, 0.0, 0.05, 0.0, 0.001, 0.0, 3, &mut report);
        assert_eq!(status, HwStatus::HwStatusOk);
        assert!(!report.is_null());

        let mut probs = [0.0f64; 4];
        assert_eq!(
            hw_report_probabilities(report, probs.as_mut_ptr()),
            HwStatus::HwStatusOk
        );
        assert!((probs[0] - 0.75).abs() < 1e-9);
        for p in &probs[1..] {
            assert!((p - 1.0 / 12.0).abs() < 1e-9);
        }

        let mut residuals = [0.0f64; 2];
        assert_eq!(
            hw_report_residuals(report, residuals.as_mut_ptr()),
            HwStatus::HwStatusOk
        );
        assert!(residuals[0] < 1e-12);
        assert!(residuals[1] < 1e-9);

        assert_eq!(hw_report_verdict(report), 1);

        let json = hw_report_json(report);
        assert!(!json.is_null());
        let text = CStr::from_ptr(json).to_str().unwrap();
        let value: serde_json::Value = serde_json::from_str(text).unwrap();
        assert_eq!(value["schema_version"], "1");
        hw_string_free(json);

        hw_report_free(report);
    }
}

#[test]
fn physics_gate_maps_to_status_two() {
    unsafe {
        let mut report: *mut HwHardyReport = ptr::null_mut();
        let status = hw_hardy_run(0.01, 0.0, 0.01, 0.0, 0.0, 0.0, 0.001, 0.0, 3, &mut report);
        assert_eq!(status, HwStatus::HwStatusPhysicsGate);
        assert!(report.is_null());
    }
}

#[test]
fn invalid_parameters_map_to_status_one() {
    unsafe {
        let mut report: *mut HwHardyReport = ptr::null_mut();
        // |alpha| != |beta| is outside the supported configuration
        let status =
            hw_hardy_run(0.01, 0.0, 0.02, 0.0, 0.05, 0.0, 0.001, 0.0, 3, &mut report);
        assert_eq!(status, HwStatus::HwStatusInvalidArgument);
        assert!(report.is_null());
    }
}

#[test]
fn null_arguments_are_rejected_not_crashed() {
    unsafe {
        assert_eq!(
            hw_hardy_run(
                0.01,
                0.0,
                0.01,
                0.0,
                0.05,
                0.0,
                0.001,
                0.0,
                3,
                ptr::null_mut()
            ),
            HwStatus::HwStatusInvalidArgument
        );
        assert_eq!(
            hw_report_probabilities(ptr::null(), ptr::null_mut()),
            HwStatus::HwStatusInvalidArgument
        );
        assert_eq!(hw_report_verdict(ptr::null()), -1);
        assert!(hw_report_json(ptr::null()).is_null());
        hw_string_free(ptr::null_mut());
        hw_report_free(ptr::null_mut());
    }
}

#[test]
fn circuit_entry_point_round_trips_json() {
    unsafe {
        let source = CString::new(hardyweave::dsl::HARDY_CIRC).unwrap();
        let mut json: *mut std::ffi::c_char = ptr::null_mut();
        let status = hw_run_circuit_json(source.as_ptr(), 3, &mut json);
        assert_eq!(status, HwStatus::HwStatusOk);
        let text = CStr::from_ptr(json).to_str().unwrap();
        let value: serde_json::Value = serde_json::from_str(text).unwrap();
        let dd = value["results"]["probabilities"]["d_S d_I"]
            .as_f64()
            .unwrap();
        assert!((dd - 1.0 / 12.0).abs() < 1e-9);
        hw_string_free(json);

        let bad = CString::new("zap\n").unwrap();
        let mut out: *mut std::ffi::c_char = ptr::null_mut();
        assert_eq!(
            hw_run_circuit_json(bad.as_ptr(), 3, &mut out),
            HwStatus::HwStatusInvalidArgument
        );
        assert!(out.is_null());
    }
}
