use std::ffi::CStr;
use std::ptr;

use mlclust_ffi::*;

fn matrix(n: usize, values: &[f64]) -> *mut MlcCorrelation {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { mlc_correlation_new(n, values.as_ptr(), &mut out) }, MlcStatus::Ok);
    out
}

fn last_error() -> String {
    let p = mlc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn blocks() -> Vec<f64> {
    // Two blocks of three at correlation 0.8.
    let mut v = vec![0.0; 36];
    for i in 0..6 {
        for j in 0..6 {
            v[i * 6 + j] = if i == j { 1.0 } else if i / 3 == j / 3 { 0.8 } else { 0.0 };
        }
    }
    v
}

#[test]
fn likelihood_of_a_pair() {
    let c = matrix(3, &[1.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 1.0]);
    let mut l = 0.0;
    let status = unsafe { mlc_log_likelihood(c, [1u32, 1, 2].as_ptr(), 3, &mut l) };
    assert_eq!(status, MlcStatus::Ok);
    assert!((l - 0.5 * (4.0f64 / 3.0).ln()).abs() < 1e-15);
    assert_eq!(unsafe { mlc_correlation_size(c) }, 3);
    unsafe { mlc_correlation_free(c) };
}

#[test]
fn evolve_and_read_back() {
    let c = matrix(6, &blocks());
    let mut cfg = mlc_ga_config_default();
    assert_eq!(cfg.population_size, 1000);
    cfg.population_size = 200;
    cfg.seed = 4;
    cfg.workers = 2;
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { mlc_evolve(c, &cfg, &mut r) }, MlcStatus::Ok);
    let mut labels = [0u32; 6];
    assert_eq!(unsafe { mlc_result_labels(r, labels.as_mut_ptr(), 6) }, MlcStatus::Ok);
    assert_eq!(labels, [1, 1, 1, 2, 2, 2]);
    let mut term = MlcTermination::MaxGenerations;
    assert_eq!(unsafe { mlc_result_termination(r, &mut term) }, MlcStatus::Ok);
    assert_ne!(term, MlcTermination::MaxGenerations);
    assert!(unsafe { mlc_result_generations(r) } > 0);

    let mut exact = [0u32; 6];
    let mut best = 0.0;
    assert_eq!(unsafe { mlc_brute_force(c, exact.as_mut_ptr(), 6, &mut best) }, MlcStatus::Ok);
    assert_eq!(exact, labels);
    assert_eq!(best, unsafe { mlc_result_fitness(r) });

    assert_eq!(unsafe { mlc_result_labels(r, labels.as_mut_ptr(), 5) }, MlcStatus::DimensionMismatch);
    unsafe {
        mlc_result_free(r);
        mlc_correlation_free(c);
    }
}

#[test]
fn rmt_clean_returns_a_new_handle() {
    let c = matrix(6, &blocks());
    let mut cleaned = ptr::null_mut();
    assert_eq!(unsafe { mlc_rmt_clean(c, 0.1, &mut cleaned) }, MlcStatus::Ok);
    let mut values = vec![0.0; 36];
    assert_eq!(unsafe { mlc_correlation_values(cleaned, values.as_mut_ptr(), 36) }, MlcStatus::Ok);
    assert!((0..6).all(|i| values[i * 7] == 1.0));
    assert_eq!(unsafe { mlc_rmt_clean(c, -1.0, &mut cleaned) }, MlcStatus::InvalidInput);
    unsafe {
        mlc_correlation_free(cleaned);
        mlc_correlation_free(c);
    }
}

#[test]
fn errors_are_reported() {
    let mut out = ptr::null_mut();
    let bad = [1.0, 0.5, 0.4, 1.0];
    assert_eq!(unsafe { mlc_correlation_new(2, bad.as_ptr(), &mut out) }, MlcStatus::InvalidInput);
    assert!(out.is_null());
    assert!(last_error().contains("symmetric"), "{}", last_error());

    assert_eq!(unsafe { mlc_correlation_new(2, ptr::null(), &mut out) }, MlcStatus::NullPointer);
    assert!(last_error().contains("values"));

    let c = matrix(2, &[1.0, 0.0, 0.0, 1.0]);
    let mut l = 0.0;
    assert_eq!(unsafe { mlc_log_likelihood(c, [1u32, 3].as_ptr(), 2, &mut l) }, MlcStatus::InvalidInput);
    assert_eq!(unsafe { mlc_log_likelihood(c, [1u32].as_ptr(), 1, &mut l) }, MlcStatus::DimensionMismatch);
    assert_eq!(unsafe { mlc_evolve(ptr::null(), ptr::null(), &mut ptr::null_mut()) }, MlcStatus::NullPointer);
    unsafe { mlc_correlation_free(c) };

    let big = matrix(13, &identity(13));
    let mut labels = [0u32; 13];
    assert_eq!(unsafe { mlc_brute_force(big, labels.as_mut_ptr(), 13, &mut l) }, MlcStatus::TooLarge);
    unsafe { mlc_correlation_free(big) };
}

fn identity(n: usize) -> Vec<f64> {
    (0..n * n).map(|k| if k % (n + 1) == 0 { 1.0 } else { 0.0 }).collect()
}

#[test]
fn null_handles_are_harmless() {
    unsafe {
        mlc_correlation_free(ptr::null_mut());
        mlc_result_free(ptr::null_mut());
        assert_eq!(mlc_correlation_size(ptr::null()), 0);
        assert!(mlc_result_fitness(ptr::null()).is_nan());
    }
    let v = unsafe { CStr::from_ptr(mlc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_is_generated() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/mlclust.h")).unwrap();
    for symbol in ["mlc_correlation_new", "mlc_evolve", "mlc_result_labels", "mlc_brute_force", "MLC_STATUS_PANIC"] {
        assert!(header.contains(symbol), "{symbol}");
    }
}
