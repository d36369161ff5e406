//! C ABI over the tunegain core. Every handle is opaque: create it through a
//! `tg_*` constructor, pass it back by pointer, release it with the matching
//! `tg_*_free`. Fallible calls return a [`TgStatus`]; anything but `Ok`
//! leaves a message readable through [`tg_last_error`] on the calling
//! thread. No call transfers ownership of its arguments unless documented.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tunegain::coverage::CoverageMatrix;
use tunegain::gain::{compute_gain, compute_all_gains, rank_classes, Ranking};
use tunegain::space::HyperParameterSpace;
use tunegain::strategies::{run_strategy, StrategySpec, TuningResult};
use tunegain::Error;

/// Outcome of a fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TgStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Reading or writing a file failed.
    Io = 3,
    /// The inputs were rejected (parse error, unknown name, bad value).
    Invalid = 4,
    /// An internal invariant failed; the library state is still sound.
    Panic = 5,
}

/// A hyper-parameter grid.
pub struct TgSpace(HyperParameterSpace);

/// A replayable coverage matrix plus its class index.
pub struct TgMatrix {
    matrix: CoverageMatrix,
    class_ids: Vec<String>,
}

/// An ordering of classes, best candidate first.
pub struct TgRanking(Ranking);

/// The outcome of one tuning run.
pub struct TgResult(TuningResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: String) {
    let clean = message.replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(clean).expect("NUL stripped"));
}

fn fail(status: TgStatus, message: impl Into<String>) -> TgStatus {
    set_error(message.into());
    status
}

fn fail_from(err: &Error) -> TgStatus {
    let status = match err {
        Error::Io { .. } => TgStatus::Io,
        _ => TgStatus::Invalid,
    };
    fail(status, err.to_string())
}

fn guarded(body: impl FnOnce() -> TgStatus) -> TgStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(TgStatus::Panic, "panic across the C boundary"),
    }
}

unsafe fn c_str<'a>(pointer: *const c_char, what: &str) -> Result<&'a str, TgStatus> {
    if pointer.is_null() {
        return Err(fail(TgStatus::NullArgument, format!("{what} is null")));
    }
    unsafe { CStr::from_ptr(pointer) }
        .to_str()
        .map_err(|_| fail(TgStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

/// Copies `text` NUL-terminated into `buf`; `cap` counts bytes including the
/// terminator.
unsafe fn copy_c_string(text: &str, buf: *mut c_char, cap: usize) -> TgStatus {
    if buf.is_null() {
        return fail(TgStatus::NullArgument, "output buffer is null");
    }
    let bytes = text.as_bytes();
    if cap <= bytes.len() {
        return fail(
            TgStatus::Invalid,
            format!("buffer holds {cap} bytes, need {}", bytes.len() + 1),
        );
    }
    unsafe {
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), bytes.len());
        *buf.add(bytes.len()) = 0;
    }
    TgStatus::Ok
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, empty until one occurs. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tg_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Builds the builtin hyper-parameter grid. Release with `tg_space_free`.
#[no_mangle]
pub extern "C" fn tg_space_builtin() -> *mut TgSpace {
    Box::into_raw(Box::new(TgSpace(HyperParameterSpace::builtin())))
}

/// Loads a space from a JSON file into `*out`. Release with `tg_space_free`.
///
/// # Safety
/// `path` must point to a NUL-terminated string and `out` to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn tg_space_load(path: *const c_char, out: *mut *mut TgSpace) -> TgStatus {
    guarded(|| {
        if out.is_null() {
            return fail(TgStatus::NullArgument, "out is null");
        }
        let path = match unsafe { c_str(path, "path") } {
            Ok(p) => p,
            Err(status) => return status,
        };
        match HyperParameterSpace::load(path) {
            Ok(space) => {
                unsafe { *out = Box::into_raw(Box::new(TgSpace(space))) };
                TgStatus::Ok
            }
            Err(e) => fail_from(&e),
        }
    })
}

/// Number of configurations in the grid; 0 when `space` is null.
///
/// # Safety
/// `space` must be null or a live pointer from a `tg_space_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn tg_space_size(space: *const TgSpace) -> usize {
    if space.is_null() {
        return 0;
    }
    unsafe { &*space }.0.size()
}

/// Releases a space; null is a no-op.
///
/// # Safety
/// `space` must be null or an unreleased pointer from a `tg_space_*`
/// constructor.
#[no_mangle]
pub unsafe extern "C" fn tg_space_free(space: *mut TgSpace) {
    if !space.is_null() {
        drop(unsafe { Box::from_raw(space) });
    }
}

/// Loads a coverage matrix CSV into `*out`, validated against `space` (null
/// means the builtin grid; the space is only read). Release with
/// `tg_matrix_free`.
///
/// # Safety
/// `path` must point to a NUL-terminated string, `space` must be null or a
/// live space pointer, and `out` must point to writable storage for one
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn tg_matrix_load(
    path: *const c_char,
    space: *const TgSpace,
    out: *mut *mut TgMatrix,
) -> TgStatus {
    guarded(|| {
        if out.is_null() {
            return fail(TgStatus::NullArgument, "out is null");
        }
        let path = match unsafe { c_str(path, "path") } {
            Ok(p) => p,
            Err(status) => return status,
        };
        let space = if space.is_null() {
            HyperParameterSpace::builtin()
        } else {
            unsafe { &*space }.0.clone()
        };
        match CoverageMatrix::load(path, space) {
            Ok(matrix) => {
                let class_ids = matrix.class_ids();
                unsafe { *out = Box::into_raw(Box::new(TgMatrix { matrix, class_ids })) };
                TgStatus::Ok
            }
            Err(e) => fail_from(&e),
        }
    })
}

/// Number of classes in the matrix; 0 when `matrix` is null.
///
/// # Safety
/// `matrix` must be null or a live pointer from `tg_matrix_load`.
#[no_mangle]
pub unsafe extern "C" fn tg_matrix_n_classes(matrix: *const TgMatrix) -> usize {
    if matrix.is_null() {
        return 0;
    }
    unsafe { &*matrix }.class_ids.len()
}

/// Copies the id of the `index`-th class (sorted order) NUL-terminated into
/// `buf` of `cap` bytes.
///
/// # Safety
/// `matrix` must be a live pointer from `tg_matrix_load` and `buf` must hold
/// at least `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tg_matrix_class_id(
    matrix: *const TgMatrix,
    index: usize,
    buf: *mut c_char,
    cap: usize,
) -> TgStatus {
    guarded(|| {
        if matrix.is_null() {
            return fail(TgStatus::NullArgument, "matrix is null");
        }
        let ids = &unsafe { &*matrix }.class_ids;
        match ids.get(index) {
            Some(id) => unsafe { copy_c_string(id, buf, cap) },
            None => fail(
                TgStatus::Invalid,
                format!("class index {index} out of range 0..{}", ids.len()),
            ),
        }
    })
}

/// Releases a matrix; null is a no-op.
///
/// # Safety
/// `matrix` must be null or an unreleased pointer from `tg_matrix_load`.
#[no_mangle]
pub unsafe extern "C" fn tg_matrix_free(matrix: *mut TgMatrix) {
    if !matrix.is_null() {
        drop(unsafe { Box::from_raw(matrix) });
    }
}

/// Computes one class's tuning gain. Each output pointer may be null to skip
/// that component.
///
/// # Safety
/// `matrix` must be a live pointer from `tg_matrix_load`, `class_id` a
/// NUL-terminated string, and every non-null output pointer must be writable.
#[no_mangle]
pub unsafe extern "C" fn tg_gain(
    matrix: *const TgMatrix,
    class_id: *const c_char,
    variation: *mut f64,
    sparsity: *mut f64,
    gain: *mut f64,
) -> TgStatus {
    guarded(|| {
        if matrix.is_null() {
            return fail(TgStatus::NullArgument, "matrix is null");
        }
        let class_id = match unsafe { c_str(class_id, "class_id") } {
            Ok(s) => s,
            Err(status) => return status,
        };
        match compute_gain(&unsafe { &*matrix }.matrix, class_id) {
            Ok(record) => {
                unsafe {
                    if !variation.is_null() {
                        *variation = record.variation;
                    }
                    if !sparsity.is_null() {
                        *sparsity = record.sparsity;
                    }
                    if !gain.is_null() {
                        *gain = record.gain;
                    }
                }
                TgStatus::Ok
            }
            Err(e) => fail_from(&e),
        }
    })
}

/// Ranks every class by its true tuning gain into `*out`. Release with
/// `tg_ranking_free`.
///
/// # Safety
/// `matrix` must be a live pointer from `tg_matrix_load` and `out` must
/// point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn tg_rank_by_gain(
    matrix: *const TgMatrix,
    out: *mut *mut TgRanking,
) -> TgStatus {
    guarded(|| {
        if matrix.is_null() {
            return fail(TgStatus::NullArgument, "matrix is null");
        }
        if out.is_null() {
            return fail(TgStatus::NullArgument, "out is null");
        }
        let build = || -> Result<Ranking, Error> {
            let gains = compute_all_gains(&unsafe { &*matrix }.matrix)?;
            let scores: Vec<(String, f64)> =
                gains.into_iter().map(|g| (g.class_id, g.gain)).collect();
            rank_classes(&scores, "gain")
        };
        match build() {
            Ok(ranking) => {
                unsafe { *out = Box::into_raw(Box::new(TgRanking(ranking))) };
                TgStatus::Ok
            }
            Err(e) => fail_from(&e),
        }
    })
}

/// Number of classes in the ranking; 0 when `ranking` is null.
///
/// # Safety
/// `ranking` must be null or a live pointer from `tg_rank_by_gain`.
#[no_mangle]
pub unsafe extern "C" fn tg_ranking_len(ranking: *const TgRanking) -> usize {
    if ranking.is_null() {
        return 0;
    }
    unsafe { &*ranking }.0.classes.len()
}

/// Copies the id of the class ranked at `index` (0 is the best candidate)
/// NUL-terminated into `buf` of `cap` bytes.
///
/// # Safety
/// `ranking` must be a live pointer from `tg_rank_by_gain` and `buf` must
/// hold at least `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tg_ranking_class(
    ranking: *const TgRanking,
    index: usize,
    buf: *mut c_char,
    cap: usize,
) -> TgStatus {
    guarded(|| {
        if ranking.is_null() {
            return fail(TgStatus::NullArgument, "ranking is null");
        }
        let classes = &unsafe { &*ranking }.0.classes;
        match classes.get(index) {
            Some(id) => unsafe { copy_c_string(id, buf, cap) },
            None => fail(
                TgStatus::Invalid,
                format!("rank index {index} out of range 0..{}", classes.len()),
            ),
        }
    })
}

/// Releases a ranking; null is a no-op.
///
/// # Safety
/// `ranking` must be null or an unreleased pointer from `tg_rank_by_gain`.
#[no_mangle]
pub unsafe extern "C" fn tg_ranking_free(ranking: *mut TgRanking) {
    if !ranking.is_null() {
        drop(unsafe { Box::from_raw(ranking) });
    }
}

/// Replays one tuning strategy over the matrix into `*out`. `label` is one
/// of: default glob_mg rnd_rs rnd_mg rnd_de pri_rs pri_mg pri_de. `cutoff`
/// in (0, 1] sizes prioritized and random subsets. `ranking` may be null for
/// strategies that do not need one. Release with `tg_result_free`.
///
/// # Safety
/// `matrix` must be a live pointer from `tg_matrix_load`, `label` a
/// NUL-terminated string, `ranking` null or a live ranking pointer, and
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn tg_run_strategy(
    matrix: *const TgMatrix,
    label: *const c_char,
    cutoff: f64,
    budget_hours: u64,
    seed: u64,
    ranking: *const TgRanking,
    out: *mut *mut TgResult,
) -> TgStatus {
    guarded(|| {
        if matrix.is_null() {
            return fail(TgStatus::NullArgument, "matrix is null");
        }
        if out.is_null() {
            return fail(TgStatus::NullArgument, "out is null");
        }
        let label = match unsafe { c_str(label, "label") } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let ranking = if ranking.is_null() {
            None
        } else {
            Some(&unsafe { &*ranking }.0)
        };
        let run = || -> Result<TuningResult, Error> {
            let spec = StrategySpec::from_label(label, cutoff)?;
            run_strategy(&spec, &unsafe { &*matrix }.matrix, ranking, budget_hours, seed)
        };
        match run() {
            Ok(result) => {
                unsafe { *out = Box::into_raw(Box::new(TgResult(result))) };
                TgStatus::Ok
            }
            Err(e) => fail_from(&e),
        }
    })
}

/// Total extra branches covered versus the default configuration; 0 when
/// `result` is null.
///
/// # Safety
/// `result` must be null or a live pointer from `tg_run_strategy`.
#[no_mangle]
pub unsafe extern "C" fn tg_result_total_extra(result: *const TgResult) -> f64 {
    if result.is_null() {
        return 0.0;
    }
    unsafe { &*result }.0.total_extra
}

/// Evaluations charged against the budget; 0 when `result` is null.
///
/// # Safety
/// `result` must be null or a live pointer from `tg_run_strategy`.
#[no_mangle]
pub unsafe extern "C" fn tg_result_total_evals(result: *const TgResult) -> u64 {
    if result.is_null() {
        return 0;
    }
    unsafe { &*result }.0.total_evals
}

/// Writes the per-class outcome CSV to `path`.
///
/// # Safety
/// `result` must be a live pointer from `tg_run_strategy` and `path` a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tg_result_save_csv(
    result: *const TgResult,
    path: *const c_char,
) -> TgStatus {
    guarded(|| {
        if result.is_null() {
            return fail(TgStatus::NullArgument, "result is null");
        }
        let path = match unsafe { c_str(path, "path") } {
            Ok(p) => p,
            Err(status) => return status,
        };
        match unsafe { &*result }.0.save(path) {
            Ok(()) => TgStatus::Ok,
            Err(e) => fail_from(&e),
        }
    })
}

/// Releases a result; null is a no-op.
///
/// # Safety
/// `result` must be null or an unreleased pointer from `tg_run_strategy`.
#[no_mangle]
pub unsafe extern "C" fn tg_result_free(result: *mut TgResult) {
    if !result.is_null() {
        drop(unsafe { Box::from_raw(result) });
    }
}
