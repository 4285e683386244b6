use std::ffi::CStr;
use std::ptr;

use specsep_ffi::*;

fn model(u: &[f64], t: &[f64], w: &[f64], y: f64) -> *mut SpecsepModel {
    let mut m = ptr::null_mut();
    let st = unsafe { specsep_model_new(u.as_ptr(), t.as_ptr(), w.as_ptr(), u.len(), y, &mut m) };
    assert_eq!(st, SpecsepStatus::Ok);
    assert!(!m.is_null());
    m
}

fn last_error() -> String {
    let p = specsep_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn mp_solve_matches_closed_form() {
    let m = model(&[0.0], &[1.0], &[1.0], 0.25);
    let mut out = [0.0; 4];
    assert_eq!(unsafe { specsep_solve_at(m, 1.0, 0.5, out.as_mut_ptr()) }, SpecsepStatus::Ok);
    // z s² + (z + 1 - y) s + 1 = 0
    let z = num_complex::Complex64::new(1.0, 0.5);
    let s = num_complex::Complex64::new(out[0], out[1]);
    assert!((z * s * s + (z + 0.75) * s + 1.0).norm() < 1e-9);
    assert!(out[1] > 0.0 && out[3] > 0.0);
    unsafe { specsep_model_free(m) };
}

#[test]
fn gaps_and_counts_round_trip() {
    let m = model(&[0.0], &[1.0], &[1.0], 0.25);
    let mut list = ptr::null_mut();
    assert_eq!(unsafe { specsep_find_gaps(m, &mut list) }, SpecsepStatus::Ok);
    assert_eq!(unsafe { specsep_gap_list_len(list) }, 2);
    let mut gap = SpecsepGap { a: 0.0, b: 0.0, g_a: 0.0, g_b: 0.0, y: 0.0 };
    assert_eq!(unsafe { specsep_gap_list_get(list, 1, &mut gap) }, SpecsepStatus::Ok);
    assert!((gap.a - 2.25).abs() < 1e-9 && gap.b.is_infinite());
    assert_eq!(unsafe { specsep_gap_list_get(list, 2, &mut gap) }, SpecsepStatus::InvalidArgument);
    assert!(last_error().contains("out of range"));

    assert_eq!(unsafe { specsep_gap_list_get(list, 1, &mut gap) }, SpecsepStatus::Ok);
    let (mut below, mut above) = (0usize, 0usize);
    let st = unsafe { specsep_predict_counts(m, &gap, 100, SPECSEP_CONVENTION_DERIVATION, &mut below, &mut above) };
    assert_eq!(st, SpecsepStatus::Ok);
    assert_eq!((below, above), (100, 0));
    let st = unsafe { specsep_predict_counts(m, &gap, 100, SPECSEP_CONVENTION_THEOREM, &mut below, &mut above) };
    assert_eq!(st, SpecsepStatus::Ok);
    assert_eq!((below, above), (0, 100));
    let st = unsafe { specsep_predict_counts(m, &gap, 100, 9, &mut below, &mut above) };
    assert_eq!(st, SpecsepStatus::InvalidArgument);

    unsafe {
        specsep_gap_list_free(list);
        specsep_model_free(m);
    }
}

#[test]
fn density_and_boundary_value() {
    let m = model(&[0.0], &[1.0], &[1.0], 0.25);
    let xs = [1.0, 3.0];
    let mut f = [0.0; 2];
    assert_eq!(unsafe { specsep_density(m, xs.as_ptr(), 2, f.as_mut_ptr()) }, SpecsepStatus::Ok);
    let want = ((2.25f64 - 1.0) * (1.0 - 0.25)).sqrt() / (2.0 * std::f64::consts::PI * 0.25);
    assert!((f[0] - want).abs() < 1e-6);
    assert!(f[1].abs() < 1e-9);
    let mut out = [0.0; 4];
    assert_eq!(unsafe { specsep_boundary_value(m, 0.0, out.as_mut_ptr()) }, SpecsepStatus::InvalidArgument);
    unsafe { specsep_model_free(m) };
}

#[test]
fn invalid_inputs_report_codes() {
    let mut m = ptr::null_mut();
    let w = [0.5];
    let st = unsafe { specsep_model_new([0.0].as_ptr(), [1.0].as_ptr(), w.as_ptr(), 1, 0.25, &mut m) };
    assert_eq!(st, SpecsepStatus::InvalidArgument);
    assert!(m.is_null());
    assert!(last_error().contains("invalid spectrum"));

    let st = unsafe { specsep_model_new(ptr::null(), [1.0].as_ptr(), [1.0].as_ptr(), 1, 0.25, &mut m) };
    assert_eq!(st, SpecsepStatus::NullPointer);

    let good = model(&[0.0], &[1.0], &[1.0], 0.25);
    assert_eq!(unsafe { specsep_solve_at(good, 1.0, -1.0, [0.0; 4].as_mut_ptr()) }, SpecsepStatus::InvalidArgument);
    assert_eq!(unsafe { specsep_model_set_solver(good, -1.0, 10, 0.5, 1.0, 1e-8) }, SpecsepStatus::InvalidArgument);
    assert_eq!(unsafe { specsep_model_set_solver(good, 1e-11, 20_000, 0.5, 1.0, 1e-9) }, SpecsepStatus::Ok);
    unsafe {
        specsep_model_free(good);
        specsep_model_free(ptr::null_mut());
        specsep_gap_list_free(ptr::null_mut());
    }
    assert_eq!(unsafe { specsep_gap_list_len(ptr::null()) }, 0);
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/specsep.h");
    for name in [
        "specsep_model_new",
        "specsep_model_free",
        "specsep_model_set_solver",
        "specsep_solve_at",
        "specsep_boundary_value",
        "specsep_density",
        "specsep_find_gaps",
        "specsep_gap_list_len",
        "specsep_gap_list_get",
        "specsep_gap_list_free",
        "specsep_predict_counts",
        "specsep_last_error_message",
        "SPECSEP_STATUS_POLE",
        "SPECSEP_CONVENTION_THEOREM",
        "typedef struct SpecsepModel SpecsepModel",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
