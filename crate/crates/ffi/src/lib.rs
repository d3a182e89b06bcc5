//! C ABI over `stereo-uq`.
//!
//! Handles are opaque and owned by the caller once returned; release each with
//! its `_free` function. Every fallible call returns a [`UqStatus`] and, on
//! failure, stores a message retrievable with [`uq_last_error_message`] on the
//! same thread. Images and maps are row-major `f64` buffers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use stereo_uq::grid::Image;
use stereo_uq::kernel_uq::{uq_map, UqEstimator as CoreEstimator};
use stereo_uq::matcher::{Inference, Matcher, StereoPair};
use stereo_uq::storage::{self, TensorContainer};
use stereo_uq::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Io = 4,
    Format = 5,
    Empty = 6,
    Numeric = 7,
    Panic = 8,
}

/// Trained matcher.
pub struct UqMatcher(Matcher);

/// Output of one inference call.
pub struct UqInference(Inference);

/// Fitted kernel estimator.
pub struct UqEstimator(CoreEstimator);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> UqStatus {
    match e {
        Error::DimensionMismatch { .. } | Error::ImageTooSmall { .. } => {
            UqStatus::DimensionMismatch
        }
        Error::Io { .. } | Error::MissingArtifact(_) => UqStatus::Io,
        Error::BadMagic(_)
        | Error::Truncated { .. }
        | Error::BadHeader(_)
        | Error::UnsupportedVersion(_)
        | Error::DimOverflow(_)
        | Error::EmptyDims(_)
        | Error::MissingSection(_)
        | Error::Csv(_) => UqStatus::Format,
        Error::EmptyMask | Error::EmptyDataset | Error::EmptyBank | Error::EmptyInput => {
            UqStatus::Empty
        }
        Error::DivergentLoss { .. } | Error::ZeroNormalizer | Error::NonFiniteLabel(_) => {
            UqStatus::Numeric
        }
        _ => UqStatus::InvalidArgument,
    }
}

struct Fail(UqStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(UqStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> UqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UqStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            UqStatus::Panic
        }
    }
}

/// # Safety
/// `p` is null or a NUL-terminated string.
unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(UqStatus::InvalidArgument, format!("{what} is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

/// # Safety
/// `p` is null or points to `len` readable values.
unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// # Safety
/// `out` is null or points to `len` writable values.
unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    if len != src.len() {
        return Err(Fail(
            UqStatus::DimensionMismatch,
            format!("{what} holds {len} values, {} needed", src.len()),
        ));
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), out, len);
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes). Returns the full message length in bytes.
///
/// # Safety
/// `buf` is null or points to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn uq_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Loads a model container written by `stereo-uq train`.
///
/// # Safety
/// `path` is a NUL-terminated string; `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn uq_matcher_load(
    path: *const c_char,
    out: *mut *mut UqMatcher,
) -> UqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = path_arg(path, "path")?;
        let m = storage::matcher_from_container(&TensorContainer::load(path)?)?;
        *out = Box::into_raw(Box::new(UqMatcher(m)));
        Ok(())
    })
}

/// # Safety
/// `m` is null or a handle from [`uq_matcher_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uq_matcher_free(m: *mut UqMatcher) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of disparity bins `K`; 0 for a null handle.
///
/// # Safety
/// `m` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn uq_matcher_bins(m: *const UqMatcher) -> usize {
    m.as_ref().map_or(0, |m| m.0.layout.count())
}

/// Runs the matcher on a rectified `height x width` pair (intensities 0-255).
///
/// # Safety
/// `left` and `right` point to `height * width` values; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn uq_matcher_infer(
    m: *const UqMatcher,
    left: *const f64,
    right: *const f64,
    height: usize,
    width: usize,
    out: *mut *mut UqInference,
) -> UqStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("matcher"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let n = height
            .checked_mul(width)
            .ok_or_else(|| Fail(UqStatus::InvalidArgument, "image size overflows".into()))?;
        let l = Image::from_vec(height, width, slice_arg(left, n, "left")?.to_vec())?;
        let r = Image::from_vec(height, width, slice_arg(right, n, "right")?.to_vec())?;
        let inf = m.0.infer(&StereoPair::new("ffi", l, r)?)?;
        *out = Box::into_raw(Box::new(UqInference(inf)));
        Ok(())
    })
}

/// # Safety
/// `inf` is null or a handle from [`uq_matcher_infer`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uq_inference_free(inf: *mut UqInference) {
    if !inf.is_null() {
        drop(Box::from_raw(inf));
    }
}

/// Writes the map height, width and embedding dimension.
///
/// # Safety
/// `inf` is a live handle; the out pointers are writable.
#[no_mangle]
pub unsafe extern "C" fn uq_inference_dims(
    inf: *const UqInference,
    height: *mut usize,
    width: *mut usize,
    dim: *mut usize,
) -> UqStatus {
    guard(|| {
        let inf = inf.as_ref().ok_or_else(|| null("inference"))?;
        if height.is_null() || width.is_null() || dim.is_null() {
            return Err(null("dims output"));
        }
        let e = &inf.0.embeddings;
        *height = e.height();
        *width = e.width();
        *dim = e.dim();
        Ok(())
    })
}

/// Copies the expected disparity map (`height * width` values).
///
/// # Safety
/// `inf` is a live handle; `out` points to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn uq_inference_disparity(
    inf: *const UqInference,
    out: *mut f64,
    len: usize,
) -> UqStatus {
    guard(|| {
        let inf = inf.as_ref().ok_or_else(|| null("inference"))?;
        copy_out(inf.0.disparity.as_slice(), out, len, "out")
    })
}

/// Copies the data-uncertainty (PMF variance) map.
///
/// # Safety
/// `inf` is a live handle; `out` points to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn uq_inference_data_uncertainty(
    inf: *const UqInference,
    out: *mut f64,
    len: usize,
) -> UqStatus {
    guard(|| {
        let inf = inf.as_ref().ok_or_else(|| null("inference"))?;
        copy_out(inf.0.data_uncertainty.as_slice(), out, len, "out")
    })
}

/// Copies the per-pixel PMFs (`height * width * K` values).
///
/// # Safety
/// `inf` is a live handle; `out` points to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn uq_inference_pmf(
    inf: *const UqInference,
    out: *mut f64,
    len: usize,
) -> UqStatus {
    guard(|| {
        let inf = inf.as_ref().ok_or_else(|| null("inference"))?;
        copy_out(inf.0.volume.as_slice(), out, len, "out")
    })
}

/// Copies the embeddings (`height * width * dim` values).
///
/// # Safety
/// `inf` is a live handle; `out` points to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn uq_inference_embeddings(
    inf: *const UqInference,
    out: *mut f64,
    len: usize,
) -> UqStatus {
    guard(|| {
        let inf = inf.as_ref().ok_or_else(|| null("inference"))?;
        copy_out(inf.0.embeddings.as_slice(), out, len, "out")
    })
}

/// Loads an estimator container written by `stereo-uq fit-uq`.
///
/// # Safety
/// `path` is a NUL-terminated string; `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn uq_estimator_load(
    path: *const c_char,
    out: *mut *mut UqEstimator,
) -> UqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = path_arg(path, "path")?;
        let est = storage::estimator_from_container(&TensorContainer::load(path)?)?;
        *out = Box::into_raw(Box::new(UqEstimator(est)));
        Ok(())
    })
}

/// # Safety
/// `est` is null or a handle from [`uq_estimator_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uq_estimator_free(est: *mut UqEstimator) {
    if !est.is_null() {
        drop(Box::from_raw(est));
    }
}

/// Embedding dimension of the bank; 0 for a null handle.
///
/// # Safety
/// `est` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn uq_estimator_dim(est: *const UqEstimator) -> usize {
    est.as_ref().map_or(0, |e| e.0.bank().dim())
}

/// Kernel-regression prediction and model uncertainty for one embedding.
/// `clamped` is set to 1 when the uncertainty hit the cap.
///
/// # Safety
/// `est` is a live handle; `query` points to `dim` values; outputs are writable.
#[no_mangle]
pub unsafe extern "C" fn uq_estimator_query(
    est: *const UqEstimator,
    query: *const f64,
    dim: usize,
    prediction: *mut f64,
    model_uncertainty: *mut f64,
    clamped: *mut u8,
) -> UqStatus {
    guard(|| {
        let est = est.as_ref().ok_or_else(|| null("estimator"))?;
        if prediction.is_null() || model_uncertainty.is_null() || clamped.is_null() {
            return Err(null("query output"));
        }
        let r = est.0.query(slice_arg(query, dim, "query")?)?;
        *prediction = r.prediction;
        *model_uncertainty = r.model_uncertainty;
        *clamped = u8::from(r.clamped);
        Ok(())
    })
}

/// Per-pixel model uncertainty of an inference result (`height * width` values).
///
/// # Safety
/// Handles are live; `out` points to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn uq_estimator_map(
    est: *const UqEstimator,
    inf: *const UqInference,
    out: *mut f64,
    len: usize,
) -> UqStatus {
    guard(|| {
        let est = est.as_ref().ok_or_else(|| null("estimator"))?;
        let inf = inf.as_ref().ok_or_else(|| null("inference"))?;
        let map = uq_map(&est.0, &inf.0.embeddings)?;
        copy_out(map.model_uncertainty.as_slice(), out, len, "out")
    })
}
