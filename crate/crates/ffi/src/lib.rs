//! C ABI for the stabtune toolkit.
//!
//! Conventions:
//! - Constructors return an opaque handle, or NULL on failure.
//! - Other fallible functions return [`StStatus`]; `Ok` is 0.
//! - After any failure the message is available via [`st_last_error`]
//!   (per thread).
//! - Handles must be released exactly once with their `*_free` function;
//!   freeing NULL is a no-op.
//! - Matrices are row-major; feature indices are 0-based `size_t`.
//! - Families of feature sets are passed as one concatenated index buffer
//!   plus a per-set length buffer.
//!
//! The matching header is generated into `include/stabtune.h` at build
//! time.

use stabtune::data::{Dataset, FeatureSet};
use stabtune::error::Error;
use stabtune::l0logreg::{accuracy, fit_l0, fit_logistic, SolverOptions, SparseModel};
use stabtune::simdata::{sample_dataset, ScenarioSpec};
use stabtune::stability::{sma, smu, SimilarityMatrix};
use stabtune::stabsel::{selection_frequencies, subsample_solver_options, StabSelParams};
use stabtune::tuning::{epsilon_constraint_select, ConfigPerformance, SelectionParams};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

/// Result of a fallible call. Anything but `Ok` leaves a message readable
/// via `st_last_error`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// An argument violated a documented precondition.
    InvalidArgument = 2,
    /// The computation itself failed.
    RuntimeError = 3,
}

/// A loaded dataset (feature matrix plus 0/1 labels).
pub struct StDataset(Dataset);

/// A fitted sparse logistic model.
pub struct StModel(SparseModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let sanitized: String = message.chars().filter(|&ch| ch != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("NUL bytes removed");
    });
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::default();
    });
}

fn status_of(e: &Error) -> StStatus {
    // the CLI's exit-code policy draws the same line between bad input
    // (2) and failed computation (3)
    match stabtune::cli::exit_code(e) {
        2 => StStatus::InvalidArgument,
        _ => StStatus::RuntimeError,
    }
}

fn fail(e: &Error) -> StStatus {
    set_last_error(&e.to_string());
    status_of(e)
}

fn null_pointer(what: &str) -> StStatus {
    set_last_error(&format!("{what} must not be NULL"));
    StStatus::NullPointer
}

/// Run `f` behind a panic guard so no unwinding crosses the C boundary.
fn guarded<T>(default: T, f: impl FnOnce() -> T) -> T {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(value) => value,
        Err(_) => {
            set_last_error("internal panic");
            default
        }
    }
}

/// Copy the last error message of this thread into `buffer` (NUL
/// terminated, truncated to `length` bytes) and return the size the full
/// message needs, including the terminator. `buffer` may be NULL to query
/// the size only. An empty message (size 1) means no error is recorded.
#[no_mangle]
pub unsafe extern "C" fn st_last_error(buffer: *mut c_char, length: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes_with_nul();
        if !buffer.is_null() && length > 0 {
            let n = bytes.len().min(length);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buffer, n);
            // always NUL-terminate what we wrote
            *buffer.add(n - 1) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn st_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

unsafe fn dataset_ref<'a>(handle: *const StDataset) -> Option<&'a Dataset> {
    handle.as_ref().map(|h| &h.0)
}

unsafe fn model_ref<'a>(handle: *const StModel) -> Option<&'a SparseModel> {
    handle.as_ref().map(|h| &h.0)
}

/// Build a dataset from a row-major `n x p` matrix and `n` labels in
/// {0, 1}. Returns NULL on invalid input.
#[no_mangle]
pub unsafe extern "C" fn st_dataset_new(
    x: *const f64,
    n: usize,
    p: usize,
    y: *const u8,
) -> *mut StDataset {
    guarded(std::ptr::null_mut(), || {
        if x.is_null() || y.is_null() {
            null_pointer("x and y");
            return std::ptr::null_mut();
        }
        if n == 0 || p == 0 || n.checked_mul(p).is_none() {
            set_last_error("n and p must be positive and n * p must not overflow");
            return std::ptr::null_mut();
        }
        let values = std::slice::from_raw_parts(x, n * p);
        let labels = std::slice::from_raw_parts(y, n).to_vec();
        let matrix = nalgebra::DMatrix::from_row_slice(n, p, values);
        match Dataset::new(matrix, labels, None) {
            Ok(data) => {
                clear_last_error();
                Box::into_raw(Box::new(StDataset(data)))
            }
            Err(e) => {
                fail(&e);
                std::ptr::null_mut()
            }
        }
    })
}

unsafe fn cstr_arg<'a>(ptr: *const c_char, what: &str) -> Option<&'a str> {
    if ptr.is_null() {
        null_pointer(what);
        return None;
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Some(s),
        Err(_) => {
            set_last_error(&format!("{what} is not valid UTF-8"));
            None
        }
    }
}

/// Load a dataset from a CSV file with a header row; `label` names the
/// 0/1 class column. Returns NULL on failure.
#[no_mangle]
pub unsafe extern "C" fn st_dataset_from_csv(
    path: *const c_char,
    label: *const c_char,
) -> *mut StDataset {
    guarded(std::ptr::null_mut(), || {
        let (Some(path), Some(label)) = (cstr_arg(path, "path"), cstr_arg(label, "label"))
        else {
            return std::ptr::null_mut();
        };
        match Dataset::read_csv_file(&PathBuf::from(path), label) {
            Ok(data) => {
                clear_last_error();
                Box::into_raw(Box::new(StDataset(data)))
            }
            Err(e) => {
                fail(&e);
                std::ptr::null_mut()
            }
        }
    })
}

/// Simulate a block-correlated dataset (see the core crate's scenario
/// documentation). Returns NULL on invalid parameters.
#[no_mangle]
pub unsafe extern "C" fn st_simulate(
    n: usize,
    p: usize,
    block_size: usize,
    within_corr: f64,
    between_corr: f64,
    n_generating: usize,
    seed: u64,
) -> *mut StDataset {
    guarded(std::ptr::null_mut(), || {
        let spec = ScenarioSpec {
            n,
            p,
            block_size,
            within_corr,
            between_corr,
            n_generating,
            seed,
        };
        match sample_dataset(&spec) {
            Ok((data, _truth)) => {
                clear_last_error();
                Box::into_raw(Box::new(StDataset(data)))
            }
            Err(e) => {
                fail(&e);
                std::ptr::null_mut()
            }
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn st_dataset_free(dataset: *mut StDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of observations; 0 if the handle is NULL.
#[no_mangle]
pub unsafe extern "C" fn st_dataset_n(dataset: *const StDataset) -> usize {
    dataset_ref(dataset).map_or(0, Dataset::n)
}

/// Number of features; 0 if the handle is NULL.
#[no_mangle]
pub unsafe extern "C" fn st_dataset_p(dataset: *const StDataset) -> usize {
    dataset_ref(dataset).map_or(0, Dataset::p)
}

unsafe fn collect_family(
    indices: *const usize,
    set_sizes: *const usize,
    n_sets: usize,
) -> Option<Vec<FeatureSet>> {
    if indices.is_null() || set_sizes.is_null() {
        null_pointer("indices and set_sizes");
        return None;
    }
    let sizes = std::slice::from_raw_parts(set_sizes, n_sets);
    let total: usize = sizes.iter().sum();
    let flat = std::slice::from_raw_parts(indices, total);
    let mut sets = Vec::with_capacity(n_sets);
    let mut offset = 0;
    for &size in sizes {
        sets.push(FeatureSet::new(flat[offset..offset + size].iter().copied()));
        offset += size;
    }
    Some(sets)
}

/// Unadjusted selection stability of a family of feature sets over `p`
/// features. `indices` concatenates all sets; `set_sizes[i]` is the length
/// of set `i`.
#[no_mangle]
pub unsafe extern "C" fn st_smu(
    indices: *const usize,
    set_sizes: *const usize,
    n_sets: usize,
    p: usize,
    out_score: *mut f64,
) -> StStatus {
    guarded(StStatus::RuntimeError, || {
        if out_score.is_null() {
            return null_pointer("out_score");
        }
        let Some(sets) = collect_family(indices, set_sizes, n_sets) else {
            return StStatus::NullPointer;
        };
        match smu(&sets, p) {
            Ok(result) => {
                clear_last_error();
                *out_score = result.score;
                StStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Adjusted selection stability with exact block similarity: features in
/// the same block of `block_size` consecutive indices count as
/// exchangeable. `theta` is the similarity threshold, `mc_samples` the
/// Monte-Carlo budget for the expectation (use 10000 when unsure).
#[no_mangle]
pub unsafe extern "C" fn st_sma_block(
    indices: *const usize,
    set_sizes: *const usize,
    n_sets: usize,
    p: usize,
    block_size: usize,
    theta: f64,
    mc_samples: u32,
    seed: u64,
    out_score: *mut f64,
) -> StStatus {
    guarded(StStatus::RuntimeError, || {
        if out_score.is_null() {
            return null_pointer("out_score");
        }
        let Some(sets) = collect_family(indices, set_sizes, n_sets) else {
            return StStatus::NullPointer;
        };
        let sim = match SimilarityMatrix::block_structure(p, block_size, theta) {
            Ok(sim) => sim,
            Err(e) => return fail(&e),
        };
        match sma(&sets, &sim, mc_samples, seed) {
            Ok(result) => {
                clear_last_error();
                *out_score = result.score;
                StStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Adjusted selection stability with a dense symmetric `p x p` similarity
/// matrix (row-major, values in [0, 1], unit diagonal).
#[no_mangle]
pub unsafe extern "C" fn st_sma_dense(
    indices: *const usize,
    set_sizes: *const usize,
    n_sets: usize,
    p: usize,
    similarity: *const f64,
    theta: f64,
    mc_samples: u32,
    seed: u64,
    out_score: *mut f64,
) -> StStatus {
    guarded(StStatus::RuntimeError, || {
        if out_score.is_null() {
            return null_pointer("out_score");
        }
        if similarity.is_null() {
            return null_pointer("similarity");
        }
        let Some(sets) = collect_family(indices, set_sizes, n_sets) else {
            return StStatus::NullPointer;
        };
        let Some(total) = p.checked_mul(p) else {
            set_last_error("p * p overflows");
            return StStatus::InvalidArgument;
        };
        let values = std::slice::from_raw_parts(similarity, total);
        let matrix = nalgebra::DMatrix::from_row_slice(p, p, values);
        let sim = match SimilarityMatrix::from_dense(matrix, theta) {
            Ok(sim) => sim,
            Err(e) => return fail(&e),
        };
        match sma(&sets, &sim, mc_samples, seed) {
            Ok(result) => {
                clear_last_error();
                *out_score = result.score;
                StStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Fit a logistic model with at most `k` features chosen by greedy best
/// subset search. Returns NULL on failure.
#[no_mangle]
pub unsafe extern "C" fn st_fit_l0(dataset: *const StDataset, k: usize) -> *mut StModel {
    guarded(std::ptr::null_mut(), || {
        let Some(data) = dataset_ref(dataset) else {
            null_pointer("dataset");
            return std::ptr::null_mut();
        };
        match fit_l0(data, k, &SolverOptions::default()) {
            Ok(model) => {
                clear_last_error();
                Box::into_raw(Box::new(StModel(model)))
            }
            Err(e) => {
                fail(&e);
                std::ptr::null_mut()
            }
        }
    })
}

/// Fit a logistic model on a fixed feature set. Returns NULL on failure.
#[no_mangle]
pub unsafe extern "C" fn st_fit_logistic(
    dataset: *const StDataset,
    features: *const usize,
    n_features: usize,
) -> *mut StModel {
    guarded(std::ptr::null_mut(), || {
        let Some(data) = dataset_ref(dataset) else {
            null_pointer("dataset");
            return std::ptr::null_mut();
        };
        if features.is_null() && n_features > 0 {
            null_pointer("features");
            return std::ptr::null_mut();
        }
        let set = if n_features == 0 {
            FeatureSet::empty()
        } else {
            let indices = std::slice::from_raw_parts(features, n_features);
            FeatureSet::new(indices.iter().copied())
        };
        match fit_logistic(data, &set, &SolverOptions::default()) {
            Ok(model) => {
                clear_last_error();
                Box::into_raw(Box::new(StModel(model)))
            }
            Err(e) => {
                fail(&e);
                std::ptr::null_mut()
            }
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn st_model_free(model: *mut StModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of selected features; 0 if the handle is NULL.
#[no_mangle]
pub unsafe extern "C" fn st_model_support_size(model: *const StModel) -> usize {
    model_ref(model).map_or(0, |m| m.features.len())
}

/// Copy the selected feature indices (ascending) into `buffer` and return
/// the number of features. At most `length` values are written; call with
/// a NULL buffer to query the size.
#[no_mangle]
pub unsafe extern "C" fn st_model_support(
    model: *const StModel,
    buffer: *mut usize,
    length: usize,
) -> usize {
    let Some(m) = model_ref(model) else { return 0 };
    let support = m.features.as_slice();
    if !buffer.is_null() {
        let n = support.len().min(length);
        std::ptr::copy_nonoverlapping(support.as_ptr(), buffer, n);
    }
    support.len()
}

/// Copy the coefficients (aligned with the support indices) into `buffer`
/// and return the number of coefficients, analogous to
/// [`st_model_support`].
#[no_mangle]
pub unsafe extern "C" fn st_model_coefficients(
    model: *const StModel,
    buffer: *mut f64,
    length: usize,
) -> usize {
    let Some(m) = model_ref(model) else { return 0 };
    if !buffer.is_null() {
        let n = m.coefficients.len().min(length);
        std::ptr::copy_nonoverlapping(m.coefficients.as_ptr(), buffer, n);
    }
    m.coefficients.len()
}

/// Model intercept; NaN if the handle is NULL.
#[no_mangle]
pub unsafe extern "C" fn st_model_intercept(model: *const StModel) -> f64 {
    model_ref(model).map_or(f64::NAN, |m| m.intercept)
}

/// Mean logistic training loss; NaN if the handle is NULL.
#[no_mangle]
pub unsafe extern "C" fn st_model_train_loss(model: *const StModel) -> f64 {
    model_ref(model).map_or(f64::NAN, |m| m.train_loss)
}

/// Whether the fit converged to gradient tolerance with bounded
/// standardized coefficients; false if the handle is NULL.
#[no_mangle]
pub unsafe extern "C" fn st_model_converged(model: *const StModel) -> bool {
    model_ref(model).is_some_and(|m| m.converged)
}

/// Classification accuracy of `model` on `dataset`, written to
/// `out_accuracy`.
#[no_mangle]
pub unsafe extern "C" fn st_accuracy(
    model: *const StModel,
    dataset: *const StDataset,
    out_accuracy: *mut f64,
) -> StStatus {
    guarded(StStatus::RuntimeError, || {
        if out_accuracy.is_null() {
            return null_pointer("out_accuracy");
        }
        let (Some(m), Some(d)) = (model_ref(model), dataset_ref(dataset)) else {
            return null_pointer("model and dataset");
        };
        match accuracy(m, d) {
            Ok(value) => {
                clear_last_error();
                *out_accuracy = value;
                StStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Stability-selection frequencies on complementary subsample pairs.
/// Writes one frequency per feature into `out_frequencies` (capacity p)
/// and the per-subsample support size into `out_q`.
///
/// `cutoff` in (0.5, 1] and `pfer` > 0 bound the per-family error rate;
/// `n_subsamples` must be even and at least 2.
#[no_mangle]
pub unsafe extern "C" fn st_stabsel_frequencies(
    dataset: *const StDataset,
    cutoff: f64,
    pfer: f64,
    n_subsamples: usize,
    seed: u64,
    out_frequencies: *mut f64,
    out_q: *mut usize,
) -> StStatus {
    guarded(StStatus::RuntimeError, || {
        if out_frequencies.is_null() || out_q.is_null() {
            return null_pointer("out_frequencies and out_q");
        }
        let Some(data) = dataset_ref(dataset) else {
            return null_pointer("dataset");
        };
        let params = StabSelParams {
            cutoff,
            pfer,
            n_subsamples,
            seed,
        };
        match selection_frequencies(data, &params, &subsample_solver_options()) {
            Ok(freqs) => {
                clear_last_error();
                std::ptr::copy_nonoverlapping(freqs.freq.as_ptr(), out_frequencies, data.p());
                *out_q = freqs.q_used;
                StStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Pick one configuration from parallel arrays of cross-validated
/// accuracy and stability scores: keep those within `acc_tolerance` of the
/// best accuracy, then within `stab_tolerance` of the best remaining
/// stability, then prefer accuracy, stability and finally a seeded random
/// tie-break. Writes the chosen array index to `out_index`.
#[no_mangle]
pub unsafe extern "C" fn st_select_config(
    accuracies: *const f64,
    stabilities: *const f64,
    n_configs: usize,
    acc_tolerance: f64,
    stab_tolerance: f64,
    seed: u64,
    out_index: *mut usize,
) -> StStatus {
    guarded(StStatus::RuntimeError, || {
        if accuracies.is_null() || stabilities.is_null() || out_index.is_null() {
            return null_pointer("accuracies, stabilities and out_index");
        }
        let accs = std::slice::from_raw_parts(accuracies, n_configs);
        let stabs = std::slice::from_raw_parts(stabilities, n_configs);
        let configs: Vec<ConfigPerformance> = (0..n_configs)
            .map(|i| ConfigPerformance {
                k: i,
                mean_accuracy: accs[i],
                stability: Some(stabs[i]),
                fold_feature_sets: Vec::new(),
                fold_accuracies: Vec::new(),
            })
            .collect();
        let params = SelectionParams {
            acc_const: acc_tolerance,
            stab_const: stab_tolerance,
            seed,
        };
        match epsilon_constraint_select(&configs, &params) {
            Ok(chosen) => {
                clear_last_error();
                *out_index = chosen.k;
                StStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}
