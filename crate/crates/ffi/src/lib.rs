//! C interface to the gazeattn metrics.
//!
//! Every fallible function returns a [`GaStatus`]. On failure a message is
//! available from [`ga_last_error`] until the next call on the same thread.
//! Handles are created by `*_new`/`*_load` functions and released with the
//! matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use gazeattn::attention::entropy;
use gazeattn::gaze::HitIndex;
use gazeattn::ingest;
use gazeattn::model::{AttentionDistribution, Source, StimulusDocument};
use gazeattn::stats::{self, KlError, SpearmanError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    Io = 4,
    Parse = 5,
    LengthMismatch = 6,
    InfiniteDivergence = 7,
    ConstantInput = 8,
    TooFewSamples = 9,
    Panic = 10,
}

/// Normalized attention distribution over the words of one document.
pub struct GaDistribution(AttentionDistribution);

/// Parsed stimulus document with its word layout.
pub struct GaDocument(StimulusDocument);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl ToString) {
    let msg = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

type Res = Result<(), (GaStatus, String)>;

fn fail<T>(status: GaStatus, msg: impl ToString) -> Result<T, (GaStatus, String)> {
    Err((status, msg.to_string()))
}

fn guard(f: impl FnOnce() -> Res) -> GaStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GaStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            GaStatus::Panic
        }
    }
}

fn non_null<'a, T>(p: *const T, what: &str) -> Result<&'a T, (GaStatus, String)> {
    // SAFETY: the caller guarantees a non-null pointer is valid for reads
    unsafe { p.as_ref() }.ok_or((GaStatus::NullPointer, format!("{what} is null")))
}

fn out<T>(p: *mut T, what: &str, value: T) -> Res {
    if p.is_null() {
        return fail(GaStatus::NullPointer, format!("{what} is null"));
    }
    // SAFETY: non-null and the caller guarantees it is writable
    unsafe { p.write(value) };
    Ok(())
}

fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (GaStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(GaStatus::NullPointer, format!("{what} is null"));
    }
    // SAFETY: the caller guarantees `len` readable values at `p`
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, (GaStatus, String)> {
    let p = non_null(p, what)?;
    // SAFETY: non-null and the caller guarantees NUL termination
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .or_else(|_| fail(GaStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library.
#[no_mangle]
pub extern "C" fn ga_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ga_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Normalizes `len` non-negative masses into a new distribution.
///
/// # Safety
/// `doc_id` must be a NUL-terminated string, `masses` must point to `len`
/// values and `out_dist` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ga_distribution_new(
    doc_id: *const c_char,
    masses: *const f64,
    len: usize,
    out_dist: *mut *mut GaDistribution,
) -> GaStatus {
    guard(|| {
        let doc_id = string(doc_id, "doc_id")?;
        let masses = slice(masses, len, "masses")?;
        let d = AttentionDistribution::from_masses(doc_id, Source::HumanAverage, masses)
            .or_else(|e| fail(GaStatus::InvalidArgument, e))?;
        out(out_dist, "out_dist", Box::into_raw(Box::new(GaDistribution(d))))
    })
}

/// # Safety
/// `dist` must come from [`ga_distribution_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ga_distribution_free(dist: *mut GaDistribution) {
    if !dist.is_null() {
        drop(Box::from_raw(dist));
    }
}

/// Number of words, or 0 for a null handle.
///
/// # Safety
/// `dist` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ga_distribution_len(dist: *const GaDistribution) -> usize {
    dist.as_ref().map_or(0, |d| d.0.len())
}

/// Copies the normalized weights into `buf`, which must hold at least
/// [`ga_distribution_len`] values.
///
/// # Safety
/// `dist` must be a live handle and `buf` writable for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn ga_distribution_weights(dist: *const GaDistribution, buf: *mut f64, cap: usize) -> GaStatus {
    guard(|| {
        let w = non_null(dist, "dist")?.0.weights();
        if cap < w.len() {
            return fail(
                GaStatus::InvalidArgument,
                format!("buffer holds {cap} values, need {}", w.len()),
            );
        }
        if buf.is_null() {
            return fail(GaStatus::NullPointer, "buf is null");
        }
        ptr::copy_nonoverlapping(w.as_ptr(), buf, w.len());
        Ok(())
    })
}

/// Shannon entropy in nats.
///
/// # Safety
/// `dist` must be a live handle and `out_nats` writable.
#[no_mangle]
pub unsafe extern "C" fn ga_entropy(dist: *const GaDistribution, out_nats: *mut f64) -> GaStatus {
    guard(|| out(out_nats, "out_nats", entropy(&non_null(dist, "dist")?.0)))
}

/// Smoothed `D(human || model)` in nats.
///
/// # Safety
/// Both handles must be live and `out_kl` writable.
#[no_mangle]
pub unsafe extern "C" fn ga_kl_divergence(
    human: *const GaDistribution,
    model: *const GaDistribution,
    epsilon: f64,
    out_kl: *mut f64,
) -> GaStatus {
    guard(|| {
        let kl = stats::kl_divergence(&non_null(human, "human")?.0, &non_null(model, "model")?.0, epsilon);
        let kl = kl.or_else(|e| {
            let status = match e {
                KlError::LengthMismatch => GaStatus::LengthMismatch,
                KlError::InfiniteDivergence(_) => GaStatus::InfiniteDivergence,
                KlError::InvalidEpsilon(_) => GaStatus::InvalidArgument,
            };
            fail(status, e)
        })?;
        out(out_kl, "out_kl", kl)
    })
}

/// Spearman rank correlation with its two-sided p-value.
///
/// # Safety
/// `x` and `y` must each point to `n` values; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ga_spearman(
    x: *const f64,
    y: *const f64,
    n: usize,
    out_rho: *mut f64,
    out_p: *mut f64,
) -> GaStatus {
    guard(|| {
        let r = stats::spearman(slice(x, n, "x")?, slice(y, n, "y")?).or_else(|e| {
            let status = match e {
                SpearmanError::ConstantInput => GaStatus::ConstantInput,
                SpearmanError::TooFewSamples(_) => GaStatus::TooFewSamples,
                SpearmanError::NonFinite => GaStatus::InvalidArgument,
                SpearmanError::LengthMismatch(..) => GaStatus::LengthMismatch,
            };
            fail(status, e)
        })?;
        out(out_rho, "out_rho", r.rho)?;
        out(out_p, "out_p", r.p_value)
    })
}

/// CDF of the studentized range with `k` groups and `df` degrees of freedom.
///
/// # Safety
/// `out_p` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ga_ptukey(q: f64, k: usize, df: f64, out_p: *mut f64) -> GaStatus {
    guard(|| {
        if k < 2 || !(df > 0.0) || q.is_nan() {
            return fail(
                GaStatus::InvalidArgument,
                format!("need k >= 2 and df > 0, got k = {k}, df = {df}"),
            );
        }
        out(out_p, "out_p", stats::studentized_range::ptukey(q, k, df))
    })
}

/// Loads a stimulus TSV. The document id is the file stem.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_doc` writable.
#[no_mangle]
pub unsafe extern "C" fn ga_document_load(path: *const c_char, out_doc: *mut *mut GaDocument) -> GaStatus {
    guard(|| {
        let path = Path::new(string(path, "path")?);
        let doc = ingest::parse_stimulus(path).or_else(|e| {
            let status = match e.kind {
                ingest::ErrorKind::Io(_) => GaStatus::Io,
                _ => GaStatus::Parse,
            };
            fail(status, e)
        })?;
        out(out_doc, "out_doc", Box::into_raw(Box::new(GaDocument(doc))))
    })
}

/// # Safety
/// `doc` must come from [`ga_document_load`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ga_document_free(doc: *mut GaDocument) {
    if !doc.is_null() {
        drop(Box::from_raw(doc));
    }
}

/// Number of words, or 0 for a null handle.
///
/// # Safety
/// `doc` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ga_document_len(doc: *const GaDocument) -> usize {
    doc.as_ref().map_or(0, |d| d.0.len())
}

/// Word under the point `(x, y)`, snapping to the nearest box within
/// `snap_px` when positive. Writes -1 when no word is hit.
///
/// # Safety
/// `doc` must be a live handle and `out_token` writable.
#[no_mangle]
pub unsafe extern "C" fn ga_hit_test(
    doc: *const GaDocument,
    x: f64,
    y: f64,
    snap_px: f64,
    out_token: *mut i64,
) -> GaStatus {
    guard(|| {
        let doc = non_null(doc, "doc")?;
        if !(x.is_finite() && y.is_finite() && snap_px >= 0.0) {
            return fail(
                GaStatus::InvalidArgument,
                "coordinates must be finite and snap non-negative",
            );
        }
        let hit = HitIndex::new(doc.0.tokens()).hit(x, y, snap_px);
        out(out_token, "out_token", hit.map_or(-1, |t| t as i64))
    })
}
