//! C ABI for tnfeat.
//!
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free`. Every fallible call returns a [`TnfStatus`];
//! on failure a message is available from [`tnf_last_error`] on the same
//! thread until the next failing call. Panics are caught and reported as
//! `TNF_STATUS_PANIC`.
//!
//! Shapes and element data use the library's layout: the first index varies
//! fastest, and the samples of a stack sit on its last mode.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tnfeat::hooi::{hooi_decompose, hooi_project_test};
use tnfeat::mps::{mps_decompose, mps_project_test, mps_reconstruct};
use tnfeat::{DenseTensor, Error, MpsModel, MpsOptions, TuckerModel, TuckerOptions};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TnfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    NoConvergence = 4,
    Io = 5,
    Format = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Dense tensor handle.
pub struct TnfTensor(DenseTensor);

/// Mixed-canonical MPS model handle.
pub struct TnfMpsModel(MpsModel);

/// Tucker (HOOI) model handle.
pub struct TnfTuckerModel(TuckerModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TnfStatus {
    match e {
        Error::InvalidShape(_)
        | Error::DataLength { .. }
        | Error::ModeOutOfRange { .. }
        | Error::SplitOutOfRange { .. }
        | Error::DimensionMismatch(_)
        | Error::InvalidPermutation(_) => TnfStatus::ShapeMismatch,
        Error::SvdNoConvergence { .. } => TnfStatus::NoConvergence,
        Error::Io(_) => TnfStatus::Io,
        Error::Format(_) | Error::Csv(_) | Error::Ingest { .. } => TnfStatus::Format,
        _ => TnfStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), (TnfStatus, String)>) -> TnfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TnfStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            TnfStatus::Panic
        }
    }
}

fn lib(e: Error) -> (TnfStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (TnfStatus, String) {
    (TnfStatus::NullPointer, format!("{what} is null"))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (TnfStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (TnfStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<String, (TnfStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| (TnfStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

/// Copies `src` into a caller buffer of `cap` elements, always reporting
/// the needed length through `len`.
unsafe fn copy_out<T: Copy>(src: &[T], dst: *mut T, cap: usize, len: *mut usize) -> Result<(), (TnfStatus, String)> {
    if let Some(l) = len.as_mut() {
        *l = src.len();
    }
    if cap < src.len() {
        return Err((
            TnfStatus::BufferTooSmall,
            format!("buffer holds {cap} elements, need {}", src.len()),
        ));
    }
    if !src.is_empty() {
        if dst.is_null() {
            return Err(null("buffer"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    }
    Ok(())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tnf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn tnf_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

// ---- tensors ----

/// Builds a tensor from `order` extents and `len` values (first index
/// fastest). The values are copied.
#[no_mangle]
pub unsafe extern "C" fn tnf_tensor_new(
    shape: *const usize,
    order: usize,
    data: *const f64,
    len: usize,
    out: *mut *mut TnfTensor,
) -> TnfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        if shape.is_null() && order > 0 {
            return Err(null("shape"));
        }
        if data.is_null() && len > 0 {
            return Err(null("data"));
        }
        let shape = if order == 0 { &[][..] } else { std::slice::from_raw_parts(shape, order) };
        let data = if len == 0 { &[][..] } else { std::slice::from_raw_parts(data, len) };
        let t = DenseTensor::new(shape.to_vec(), data.to_vec()).map_err(lib)?;
        *out = boxed(TnfTensor(t));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tnf_tensor_free(t: *mut TnfTensor) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of modes, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn tnf_tensor_order(t: *const TnfTensor) -> usize {
    t.as_ref().map_or(0, |t| t.0.order())
}

/// Number of elements, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn tnf_tensor_len(t: *const TnfTensor) -> usize {
    t.as_ref().map_or(0, |t| t.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn tnf_tensor_shape(t: *const TnfTensor, buf: *mut usize, cap: usize, len: *mut usize) -> TnfStatus {
    guard(|| copy_out(handle(t, "tensor")?.0.shape(), buf, cap, len))
}

#[no_mangle]
pub unsafe extern "C" fn tnf_tensor_data(t: *const TnfTensor, buf: *mut f64, cap: usize, len: *mut usize) -> TnfStatus {
    guard(|| copy_out(handle(t, "tensor")?.0.data(), buf, cap, len))
}

#[no_mangle]
pub unsafe extern "C" fn tnf_tensor_load(path: *const c_char, out: *mut *mut TnfTensor) -> TnfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let t = tnfeat::format::load_dtf(path_arg(path)?).map_err(lib)?;
        *out = boxed(TnfTensor(t));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tnf_tensor_save(t: *const TnfTensor, path: *const c_char) -> TnfStatus {
    guard(|| tnfeat::format::save_dtf(path_arg(path)?, &handle(t, "tensor")?.0).map_err(lib))
}

// ---- MPS ----

/// Decomposes a stack (samples last) at threshold `eps`. A `core_position`
/// of 0 selects the middle of the chain.
#[no_mangle]
pub unsafe extern "C" fn tnf_mps_decompose(
    stack: *const TnfTensor,
    eps: f64,
    core_position: usize,
    out: *mut *mut TnfMpsModel,
) -> TnfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let mut opts = MpsOptions::new(eps);
        if core_position > 0 {
            opts = opts.core_position(core_position);
        }
        let m = mps_decompose(&handle(stack, "stack")?.0, &opts).map_err(lib)?;
        *out = boxed(TnfMpsModel(m));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tnf_mps_free(m: *mut TnfMpsModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Copy of the training core, shaped `D_{n-1} x D_n x K`.
#[no_mangle]
pub unsafe extern "C" fn tnf_mps_core(m: *const TnfMpsModel, out: *mut *mut TnfTensor) -> TnfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(TnfTensor(handle(m, "model")?.0.core().clone()));
        Ok(())
    })
}

/// Bond dimensions `D_0 .. D_{N+1}` (both ends are 1).
#[no_mangle]
pub unsafe extern "C" fn tnf_mps_bond_dims(m: *const TnfMpsModel, buf: *mut usize, cap: usize, len: *mut usize) -> TnfStatus {
    guard(|| copy_out(handle(m, "model")?.0.bond_dims(), buf, cap, len))
}

/// Features per sample, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn tnf_mps_n_features(m: *const TnfMpsModel) -> usize {
    m.as_ref().map_or(0, |m| m.0.n_features())
}

/// Projects a test stack onto the model's factors.
#[no_mangle]
pub unsafe extern "C" fn tnf_mps_project(
    m: *const TnfMpsModel,
    stack: *const TnfTensor,
    out: *mut *mut TnfTensor,
) -> TnfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let core = mps_project_test(&handle(m, "model")?.0, &handle(stack, "stack")?.0).map_err(lib)?;
        *out = boxed(TnfTensor(core));
        Ok(())
    })
}

/// Contracts the model back to a full tensor in chain order.
#[no_mangle]
pub unsafe extern "C" fn tnf_mps_reconstruct(m: *const TnfMpsModel, out: *mut *mut TnfTensor) -> TnfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(TnfTensor(mps_reconstruct(&handle(m, "model")?.0)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tnf_mps_save(m: *const TnfMpsModel, path: *const c_char) -> TnfStatus {
    guard(|| handle(m, "model")?.0.save(path_arg(path)?).map_err(lib))
}

#[no_mangle]
pub unsafe extern "C" fn tnf_mps_load(path: *const c_char, out: *mut *mut TnfMpsModel) -> TnfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let m = MpsModel::load(path_arg(path)?).map_err(lib)?;
        *out = boxed(TnfMpsModel(m));
        Ok(())
    })
}

// ---- Tucker ----

/// HOOI decomposition of a stack (samples last). `max_iters` of 0 and a
/// non-positive `tol` select the defaults.
#[no_mangle]
pub unsafe extern "C" fn tnf_tucker_decompose(
    stack: *const TnfTensor,
    eps: f64,
    max_iters: usize,
    tol: f64,
    out: *mut *mut TnfTuckerModel,
) -> TnfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let mut opts = TuckerOptions::new(eps);
        if max_iters > 0 {
            opts = opts.max_iters(max_iters);
        }
        if tol > 0.0 {
            opts = opts.tol(tol);
        }
        let m = hooi_decompose(&handle(stack, "stack")?.0, &opts).map_err(lib)?;
        *out = boxed(TnfTuckerModel(m));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tnf_tucker_free(m: *mut TnfTuckerModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Copy of the training core, shaped `D_1 x ... x D_N x K`.
#[no_mangle]
pub unsafe extern "C" fn tnf_tucker_core(m: *const TnfTuckerModel, out: *mut *mut TnfTensor) -> TnfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(TnfTensor(handle(m, "model")?.0.core().clone()));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tnf_tucker_ranks(m: *const TnfTuckerModel, buf: *mut usize, cap: usize, len: *mut usize) -> TnfStatus {
    guard(|| copy_out(&handle(m, "model")?.0.ranks(), buf, cap, len))
}

/// Fit after initialization and after each iteration.
#[no_mangle]
pub unsafe extern "C" fn tnf_tucker_objective_trace(
    m: *const TnfTuckerModel,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> TnfStatus {
    guard(|| copy_out(handle(m, "model")?.0.objective_trace(), buf, cap, len))
}

#[no_mangle]
pub unsafe extern "C" fn tnf_tucker_project(
    m: *const TnfTuckerModel,
    stack: *const TnfTensor,
    out: *mut *mut TnfTensor,
) -> TnfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let core = hooi_project_test(&handle(m, "model")?.0, &handle(stack, "stack")?.0).map_err(lib)?;
        *out = boxed(TnfTensor(core));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tnf_tucker_save(m: *const TnfTuckerModel, path: *const c_char) -> TnfStatus {
    guard(|| handle(m, "model")?.0.save(path_arg(path)?).map_err(lib))
}

#[no_mangle]
pub unsafe extern "C" fn tnf_tucker_load(path: *const c_char, out: *mut *mut TnfTuckerModel) -> TnfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let m = TuckerModel::load(path_arg(path)?).map_err(lib)?;
        *out = boxed(TnfTuckerModel(m));
        Ok(())
    })
}
