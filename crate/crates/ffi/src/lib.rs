//! C interface to `fcm-cfl`.
//!
//! Every function returns an [`FcmStatus`]; results go through out-pointers.
//! On failure a message is kept per thread and can be read with
//! [`fcm_last_error_message`]. Element matrices live behind the opaque
//! [`FcmElement`] handle, which the caller releases with [`fcm_element_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fcm_cfl::assembly::{element_matrices_cornercut, ElementMatrices};
use fcm_cfl::eigen::{self, max_eig_dense};
use fcm_cfl::studies::{self, CflEstimate, PlateConfig, PlateOptions};
use fcm_cfl::{analytic, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotPositiveDefinite = 3,
    NotConverged = 4,
    BufferTooSmall = 5,
    Internal = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> FcmStatus {
    match e {
        Error::NotPositiveDefinite(_) => FcmStatus::NotPositiveDefinite,
        Error::NotConverged { .. } => FcmStatus::NotConverged,
        Error::InvalidArgument(_) | Error::Config(_) | Error::Parse(_) => FcmStatus::InvalidArgument,
        _ => FcmStatus::Internal,
    }
}

/// Runs `f`, turning errors and panics into a status plus the thread's message.
fn guard(f: impl FnOnce() -> Result<(), FcmStatus>) -> FcmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FcmStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside fcm-cfl");
            FcmStatus::Internal
        }
    }
}

fn lift<T>(r: fcm_cfl::Result<T>) -> Result<T, FcmStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn out_ref<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, FcmStatus> {
    // SAFETY: the caller guarantees `p` is either null or valid for writes.
    unsafe { p.as_mut() }.ok_or_else(|| {
        set_error(format!("{name} is null"));
        FcmStatus::NullPointer
    })
}

/// Message of the last failed call on this thread, or null after a success.
///
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn fcm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FcmSingleDof {
    pub mass: f64,
    pub stiffness: f64,
    pub lambda: f64,
    pub dt_crit: f64,
}

/// Closed-form mass, stiffness, eigenvalue and critical step of the
/// single-DOF corner-cut element.
///
/// # Safety
/// Pointer arguments must be null or valid for the documented access.
#[no_mangle]
pub unsafe extern "C" fn fcm_single_dof(
    chi: f64,
    alpha: f64,
    dim: usize,
    out: *mut FcmSingleDof,
) -> FcmStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let r = lift(analytic::single_dof(chi, alpha, dim))?;
        *out = FcmSingleDof {
            mass: r.mass,
            stiffness: r.stiffness,
            lambda: r.lambda,
            dt_crit: r.dt_crit,
        };
        Ok(())
    })
}

/// `2 / sqrt(lambda_max)`
///
/// # Safety
/// Pointer arguments must be null or valid for the documented access.
#[no_mangle]
pub unsafe extern "C" fn fcm_critical_dt(lambda_max: f64, out: *mut f64) -> FcmStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = lift(eigen::critical_dt(lambda_max))?;
        Ok(())
    })
}

/// `alpha^(1 / (dim + 2))`
///
/// # Safety
/// Pointer arguments must be null or valid for the documented access.
#[no_mangle]
pub unsafe extern "C" fn fcm_cfl_factor(alpha: f64, dim: usize, out: *mut f64) -> FcmStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = lift(studies::cfl_factor(alpha, dim))?;
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FcmCflEstimate {
    pub dt_full_c: f64,
    pub dt_full_l: f64,
    pub cfl_factor: f64,
    pub dt_cfl_fc: f64,
    pub c_cfl_c: f64,
    pub c_cfl_l: f64,
}

impl From<&CflEstimate> for FcmCflEstimate {
    fn from(e: &CflEstimate) -> Self {
        Self {
            dt_full_c: e.dt_full_c,
            dt_full_l: e.dt_full_l,
            cfl_factor: e.cfl_factor,
            dt_cfl_fc: e.dt_cfl_fc,
            c_cfl_c: e.c_cfl_c,
            c_cfl_l: e.c_cfl_l,
        }
    }
}

/// Uncut-element steps (consistent and lumped) and the modified CFL step
/// for an element of size `h` and wave speed `c`.
///
/// # Safety
/// Pointer arguments must be null or valid for the documented access.
#[no_mangle]
pub unsafe extern "C" fn fcm_cfl_estimate(
    dim: usize,
    degree: usize,
    alpha: f64,
    h: f64,
    c: f64,
    out: *mut FcmCflEstimate,
) -> FcmStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = (&lift(CflEstimate::compute(dim, degree, alpha, h, c))?).into();
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FcmPlateResult {
    pub dt_element: f64,
    pub dt_global: f64,
    pub dt_full_c: f64,
    pub dt_full_l: f64,
    pub dt_cfl_fc: f64,
    pub element_ok: bool,
    pub global_ok: bool,
}

/// Element-wise and global critical steps of the perforated plate with
/// holes shifted by `(dx, dy)`, on the default 45 x 15 grid.
///
/// # Safety
/// Pointer arguments must be null or valid for the documented access.
#[no_mangle]
pub unsafe extern "C" fn fcm_plate_configuration(
    degree: usize,
    depth: usize,
    alpha: f64,
    dx: f64,
    dy: f64,
    out: *mut FcmPlateResult,
) -> FcmStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let mut opts = PlateOptions::new(degree, depth);
        opts.alpha = alpha;
        let cfl = lift(CflEstimate::compute(2, degree, alpha, opts.h, 1.0))?;
        let config = PlateConfig { index: 0, dx, dy };
        let r = lift(studies::plate_configuration(&config, &opts, &cfl))?;
        *out = FcmPlateResult {
            dt_element: r.dt_element,
            dt_global: r.dt_global,
            dt_full_c: r.dt_full_c,
            dt_full_l: r.dt_full_l,
            dt_cfl_fc: r.dt_cfl_fc,
            element_ok: r.element_ok,
            global_ok: r.global_ok,
        };
        Ok(())
    })
}

/// Opaque element matrices.
pub struct FcmElement {
    inner: ElementMatrices,
}

/// Matrices of the unit element whose physical part is `[0, chi]^dim`.
///
/// On success `*out` owns a new handle; release it with [`fcm_element_free`].
///
/// # Safety
/// `el` must be null or a live handle; output pointers must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fcm_element_new_cornercut(
    degree: usize,
    dim: usize,
    chi: f64,
    alpha: f64,
    out: *mut *mut FcmElement,
) -> FcmStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let inner = lift(element_matrices_cornercut(degree, dim, chi, alpha))?;
        *out = Box::into_raw(Box::new(FcmElement { inner }));
        Ok(())
    })
}

fn element_ref<'a>(el: *const FcmElement) -> Result<&'a FcmElement, FcmStatus> {
    // SAFETY: non-null handles come from fcm_element_new_* and are not yet freed.
    unsafe { el.as_ref() }.ok_or_else(|| {
        set_error("element handle is null");
        FcmStatus::NullPointer
    })
}

/// Number of DOFs, i.e. the matrix dimension.
///
/// # Safety
/// `el` must be null or a live handle; output pointers must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fcm_element_size(el: *const FcmElement, out: *mut usize) -> FcmStatus {
    guard(|| {
        let el = element_ref(el)?;
        *out_ref(out, "out")? = el.inner.size();
        Ok(())
    })
}

fn copy_matrix(values: &[f64], buf: *mut f64, len: usize) -> Result<(), FcmStatus> {
    if buf.is_null() {
        set_error("buffer is null");
        return Err(FcmStatus::NullPointer);
    }
    let n = values.len();
    if len < n {
        set_error(format!("buffer holds {len} values, need {n}"));
        return Err(FcmStatus::BufferTooSmall);
    }
    // SAFETY: `buf` is non-null and the caller promises room for `len >= n` values.
    let dst = unsafe { std::slice::from_raw_parts_mut(buf, n) };
    dst.copy_from_slice(values);
    Ok(())
}

/// Copies the mass matrix into `buf` (column-major, `size * size` values).
///
/// # Safety
/// `el` must be null or a live handle and `buf` must be null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn fcm_element_copy_mass(
    el: *const FcmElement,
    buf: *mut f64,
    len: usize,
) -> FcmStatus {
    guard(|| copy_matrix(element_ref(el)?.inner.mass.as_slice(), buf, len))
}

/// Copies the stiffness matrix into `buf` (column-major, `size * size` values).
///
/// # Safety
/// `el` must be null or a live handle and `buf` must be null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn fcm_element_copy_stiffness(
    el: *const FcmElement,
    buf: *mut f64,
    len: usize,
) -> FcmStatus {
    guard(|| copy_matrix(element_ref(el)?.inner.stiffness.as_slice(), buf, len))
}

/// Largest generalized eigenvalue and the matching critical step.
///
/// # Safety
/// `el` must be null or a live handle; output pointers must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fcm_element_max_eig(
    el: *const FcmElement,
    lambda_max: *mut f64,
    dt_crit: *mut f64,
) -> FcmStatus {
    guard(|| {
        let el = element_ref(el)?;
        let lambda_max = out_ref(lambda_max, "lambda_max")?;
        let dt_crit = out_ref(dt_crit, "dt_crit")?;
        let s = lift(max_eig_dense(&el.inner.mass, &el.inner.stiffness))?;
        *lambda_max = s.lambda_max;
        *dt_crit = lift(s.critical_dt())?;
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `el` must be null or a live handle from `fcm_element_new_cornercut`; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn fcm_element_free(el: *mut FcmElement) {
    if !el.is_null() {
        // SAFETY: non-null handles come from Box::into_raw in fcm_element_new_*.
        drop(unsafe { Box::from_raw(el) });
    }
}
