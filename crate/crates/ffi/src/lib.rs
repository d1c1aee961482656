//! C ABI over `mlclust`.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible call returns an
//! [`MlcStatus`]; on failure a description is available from
//! [`mlc_last_error`] on the same thread. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mlclust::ga::TerminationReason;
use mlclust::{CorrelationMatrix, Error, GaConfig, GaResult, Partition};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    DimensionMismatch = 3,
    TooLarge = 4,
    Numerical = 5,
    Parse = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlcTermination {
    MaxGenerations = 0,
    Stalled = 1,
    Converged = 2,
}

/// Genetic algorithm settings. Start from [`mlc_ga_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MlcGaConfig {
    pub population_size: usize,
    pub max_generations: usize,
    pub p_crossover: f64,
    pub p_mutation: f64,
    pub error_tolerance: f64,
    pub stall_generations: usize,
    pub elite_size: usize,
    pub p_knowledge_crossover: f64,
    pub seed: u64,
    pub workers: usize,
}

/// Opaque correlation matrix.
pub struct MlcCorrelation(CorrelationMatrix);

/// Opaque GA result.
pub struct MlcGaResult(GaResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MlcStatus {
    match e {
        Error::InvalidInput(_) => MlcStatus::InvalidInput,
        Error::DimensionMismatch { .. } => MlcStatus::DimensionMismatch,
        Error::TooLarge { .. } => MlcStatus::TooLarge,
        Error::Numerical(_) => MlcStatus::Numerical,
        Error::Parse { .. } => MlcStatus::Parse,
        Error::Io(_) => MlcStatus::Io,
    }
}

/// Runs `f`, recording any error or panic for [`mlc_last_error`].
fn guard(f: impl FnOnce() -> Result<(), MlcFailure>) -> MlcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MlcStatus::Ok,
        Ok(Err(MlcFailure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            MlcStatus::NullPointer
        }
        Ok(Err(MlcFailure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            MlcStatus::Panic
        }
    }
}

enum MlcFailure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for MlcFailure {
    fn from(e: Error) -> Self {
        MlcFailure::Lib(e)
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, MlcFailure> {
    p.as_ref().ok_or(MlcFailure::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], MlcFailure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(MlcFailure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], MlcFailure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(MlcFailure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn check_len(expected: usize, actual: usize) -> Result<(), MlcFailure> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual }.into());
    }
    Ok(())
}

/// Message of the last failed call on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mlc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn mlc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a correlation matrix from `n * n` row-major values.
///
/// # Safety
/// `values` must point to `n * n` readable doubles and `out` to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn mlc_correlation_new(n: usize, values: *const f64, out: *mut *mut MlcCorrelation) -> MlcStatus {
    guard(|| {
        if out.is_null() {
            return Err(MlcFailure::Null("out"));
        }
        let len = n.checked_mul(n).ok_or(Error::TooLarge { n, limit: 1 << 32 })?;
        let v = slice(values, len, "values")?;
        let c = CorrelationMatrix::new(n, v.to_vec())?;
        *out = Box::into_raw(Box::new(MlcCorrelation(c)));
        Ok(())
    })
}

/// # Safety
/// `c` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mlc_correlation_free(c: *mut MlcCorrelation) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Number of assets, or 0 for a null handle.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mlc_correlation_size(c: *const MlcCorrelation) -> usize {
    c.as_ref().map_or(0, |c| c.0.n())
}

/// Copies the `n * n` row-major values into `out`.
///
/// # Safety
/// `c` must be a live handle and `out` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mlc_correlation_values(c: *const MlcCorrelation, out: *mut f64, len: usize) -> MlcStatus {
    guard(|| {
        let c = &deref(c, "matrix")?.0;
        check_len(c.n() * c.n(), len)?;
        slice_mut(out, len, "out")?.copy_from_slice(c.as_slice());
        Ok(())
    })
}

/// Log-likelihood of the partition given by `labels` (values in `1..=n`).
///
/// # Safety
/// `c` must be a live handle, `labels` must hold `n` values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn mlc_log_likelihood(
    c: *const MlcCorrelation,
    labels: *const u32,
    n: usize,
    out: *mut f64,
) -> MlcStatus {
    guard(|| {
        let c = &deref(c, "matrix")?.0;
        let p = Partition::from_labels(slice(labels, n, "labels")?.to_vec())?;
        let v = mlclust::log_likelihood(&p, c)?;
        *out.as_mut().ok_or(MlcFailure::Null("out"))? = v;
        Ok(())
    })
}

/// Default settings.
#[no_mangle]
pub extern "C" fn mlc_ga_config_default() -> MlcGaConfig {
    let d = GaConfig::default();
    MlcGaConfig {
        population_size: d.population_size,
        max_generations: d.max_generations,
        p_crossover: d.p_crossover,
        p_mutation: d.p_mutation,
        error_tolerance: d.error_tolerance,
        stall_generations: d.stall_generations,
        elite_size: d.elite_size,
        p_knowledge_crossover: d.p_knowledge_crossover,
        seed: d.seed,
        workers: d.workers,
    }
}

fn to_config(c: &MlcGaConfig) -> GaConfig {
    GaConfig {
        population_size: c.population_size,
        max_generations: c.max_generations,
        p_crossover: c.p_crossover,
        p_mutation: c.p_mutation,
        error_tolerance: c.error_tolerance,
        stall_generations: c.stall_generations,
        elite_size: c.elite_size,
        p_knowledge_crossover: c.p_knowledge_crossover,
        seed: c.seed,
        workers: c.workers,
        ..GaConfig::default()
    }
}

/// Runs the genetic algorithm. A null `cfg` means default settings.
///
/// # Safety
/// `c` must be a live handle, `cfg` null or readable, `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn mlc_evolve(
    c: *const MlcCorrelation,
    cfg: *const MlcGaConfig,
    out: *mut *mut MlcGaResult,
) -> MlcStatus {
    guard(|| {
        let c = &deref(c, "matrix")?.0;
        if out.is_null() {
            return Err(MlcFailure::Null("out"));
        }
        let cfg = cfg.as_ref().map_or_else(GaConfig::default, to_config);
        let r = mlclust::evolve(c, &cfg)?;
        *out = Box::into_raw(Box::new(MlcGaResult(r)));
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn mlc_result_free(r: *mut MlcGaResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Best fitness, or NaN for a null handle.
///
/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn mlc_result_fitness(r: *const MlcGaResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.best_fitness)
}

/// Generations run, or 0 for a null handle.
///
/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn mlc_result_generations(r: *const MlcGaResult) -> usize {
    r.as_ref().map_or(0, |r| r.0.generations_run)
}

/// Why the run stopped.
///
/// # Safety
/// `r` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn mlc_result_termination(r: *const MlcGaResult, out: *mut MlcTermination) -> MlcStatus {
    guard(|| {
        let r = &deref(r, "result")?.0;
        *out.as_mut().ok_or(MlcFailure::Null("out"))? = match r.termination_reason {
            TerminationReason::MaxGenerations => MlcTermination::MaxGenerations,
            TerminationReason::Stalled => MlcTermination::Stalled,
            TerminationReason::Converged => MlcTermination::Converged,
        };
        Ok(())
    })
}

/// Copies the best partition's canonical labels into `out`.
///
/// # Safety
/// `r` must be a live result handle and `out` hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn mlc_result_labels(r: *const MlcGaResult, out: *mut u32, len: usize) -> MlcStatus {
    guard(|| {
        let labels = deref(r, "result")?.0.best_partition.labels();
        check_len(labels.len(), len)?;
        slice_mut(out, len, "out")?.copy_from_slice(labels);
        Ok(())
    })
}

/// Exhaustive maximum (at most 12 assets). Writes `n` labels and the fitness.
///
/// # Safety
/// `c` must be a live handle, `labels` hold `len` writable values, `fitness` be writable.
#[no_mangle]
pub unsafe extern "C" fn mlc_brute_force(
    c: *const MlcCorrelation,
    labels: *mut u32,
    len: usize,
    fitness: *mut f64,
) -> MlcStatus {
    guard(|| {
        let c = &deref(c, "matrix")?.0;
        check_len(c.n(), len)?;
        let fitness = fitness.as_mut().ok_or(MlcFailure::Null("fitness"))?;
        let labels = slice_mut(labels, len, "labels")?;
        let r = mlclust::oracle::brute_force_max(c)?;
        labels.copy_from_slice(r.best_partition.labels());
        *fitness = r.best_fitness;
        Ok(())
    })
}

/// Random-matrix cleaning with ratio `q = N / D`; writes a new handle.
///
/// # Safety
/// `c` must be a live handle and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn mlc_rmt_clean(c: *const MlcCorrelation, q: f64, out: *mut *mut MlcCorrelation) -> MlcStatus {
    guard(|| {
        let c = &deref(c, "matrix")?.0;
        if out.is_null() {
            return Err(MlcFailure::Null("out"));
        }
        let cleaned = mlclust::preprocess::rmt_clean(c, q)?;
        *out = Box::into_raw(Box::new(MlcCorrelation(cleaned)));
        Ok(())
    })
}
