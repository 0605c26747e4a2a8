//! C ABI for the strain-limiting constitutive toolkit.
//!
//! All functions are exported with the `slekan_` prefix and communicate
//! failure through integer status codes; results travel through out
//! pointers. Handles are opaque: C callers only ever hold pointers created
//! by `slekan_*_new`/`slekan_spline_parse` and must release them with the
//! matching `slekan_*_free`. The hand-maintained header lives in
//! `include/slekan.h`; a test checks that the two stay in sync.

// Handle types are intentionally named in C style so the Rust definitions
// line up with the header declarations.
#![allow(non_camel_case_types)]

use slekan::sle::{self, SleParams};
use slekan::spline::SplineModel;
use slekan::SlekanError;
use std::ffi::{c_char, CStr};

/// Success.
pub const SLEKAN_OK: i32 = 0;
/// A required pointer argument was null.
pub const SLEKAN_ERR_NULL_ARGUMENT: i32 = 1;
/// An argument was outside the mathematical domain of the operation.
pub const SLEKAN_ERR_DOMAIN: i32 = 2;
/// A strain magnitude at or beyond the strain limit was supplied.
pub const SLEKAN_ERR_INFEASIBLE: i32 = 3;
/// The operation does not apply to the model's mode.
pub const SLEKAN_ERR_MODE: i32 = 4;
/// Text could not be parsed as a serialized model.
pub const SLEKAN_ERR_PARSE: i32 = 5;
/// The input string was not valid UTF-8.
pub const SLEKAN_ERR_ENCODING: i32 = 6;

/// Opaque handle wrapping the constitutive parameter set.
pub struct slekan_params(SleParams);
/// Opaque handle wrapping a piecewise-linear spline model.
pub struct slekan_spline(SplineModel);

fn code_of(err: &SlekanError) -> i32 {
    match err {
        SlekanError::Domain(_) => SLEKAN_ERR_DOMAIN,
        SlekanError::InfeasibleStrain { .. } => SLEKAN_ERR_INFEASIBLE,
        SlekanError::Mode(_) => SLEKAN_ERR_MODE,
        SlekanError::Parse { .. } => SLEKAN_ERR_PARSE,
        SlekanError::CalibrationFailed { .. } => SLEKAN_ERR_DOMAIN,
        SlekanError::Io { .. } => SLEKAN_ERR_DOMAIN,
    }
}

fn write_result(out: *mut f64, value: Result<f64, SlekanError>) -> i32 {
    if out.is_null() {
        return SLEKAN_ERR_NULL_ARGUMENT;
    }
    match value {
        Ok(v) => {
            unsafe { *out = v };
            SLEKAN_OK
        }
        Err(e) => code_of(&e),
    }
}

/// Creates a parameter handle; returns a status code and writes the handle
/// through `out` on success.
///
/// # Safety
/// `out` must be a valid pointer. The handle must be released with
/// [`slekan_params_free`].
#[no_mangle]
pub unsafe extern "C" fn slekan_params_new(
    alpha: f64,
    beta: f64,
    youngs_modulus: f64,
    out: *mut *mut slekan_params,
) -> i32 {
    if out.is_null() {
        return SLEKAN_ERR_NULL_ARGUMENT;
    }
    match SleParams::new(alpha, beta, youngs_modulus) {
        Ok(p) => {
            unsafe { *out = Box::into_raw(Box::new(slekan_params(p))) };
            SLEKAN_OK
        }
        Err(e) => code_of(&e),
    }
}

/// Releases a parameter handle; a null pointer is a no-op.
///
/// # Safety
/// `params` must be null or a pointer previously returned by
/// [`slekan_params_new`], and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn slekan_params_free(params: *mut slekan_params) {
    if !params.is_null() {
        drop(unsafe { Box::from_raw(params) });
    }
}

/// Strain response at a stress; writes through `out`.
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn slekan_strain_from_stress(
    params: *const slekan_params,
    tau: f64,
    out: *mut f64,
) -> i32 {
    let Some(p) = (unsafe { params.as_ref() }) else {
        return SLEKAN_ERR_NULL_ARGUMENT;
    };
    write_result(out, sle::strain_from_stress(&p.0, tau))
}

/// Inverts the law: stress producing a strain, to absolute tolerance `tol`.
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn slekan_stress_from_strain(
    params: *const slekan_params,
    eps: f64,
    tol: f64,
    out: *mut f64,
) -> i32 {
    let Some(p) = (unsafe { params.as_ref() }) else {
        return SLEKAN_ERR_NULL_ARGUMENT;
    };
    write_result(out, sle::stress_from_strain(&p.0, eps, tol))
}

/// The supremum of attainable strain magnitude, `1/(E*beta)`. Returns NaN
/// for a null handle.
///
/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn slekan_strain_limit(params: *const slekan_params) -> f64 {
    match unsafe { params.as_ref() } {
        Some(p) => p.0.strain_limit(),
        None => f64::NAN,
    }
}

/// Tangent compliance d(strain)/d(stress) at a stress; writes through `out`.
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn slekan_tangent_compliance(
    params: *const slekan_params,
    tau: f64,
    out: *mut f64,
) -> i32 {
    let Some(p) = (unsafe { params.as_ref() }) else {
        return SLEKAN_ERR_NULL_ARGUMENT;
    };
    write_result(out, sle::tangent_compliance(&p.0, tau))
}

/// Parses a spline model from its serialized text form (the format written
/// by the CLI) and writes the handle through `out`.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
/// The handle must be released with [`slekan_spline_free`].
#[no_mangle]
pub unsafe extern "C" fn slekan_spline_parse(
    text: *const c_char,
    out: *mut *mut slekan_spline,
) -> i32 {
    if text.is_null() || out.is_null() {
        return SLEKAN_ERR_NULL_ARGUMENT;
    }
    let Ok(text) = (unsafe { CStr::from_ptr(text) }).to_str() else {
        return SLEKAN_ERR_ENCODING;
    };
    match SplineModel::from_text(text) {
        Ok(m) => {
            unsafe { *out = Box::into_raw(Box::new(slekan_spline(m))) };
            SLEKAN_OK
        }
        Err(e) => code_of(&e),
    }
}

/// Signed prediction of a spline model at an input; writes through `out`.
///
/// # Safety
/// `spline` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn slekan_spline_predict(
    spline: *const slekan_spline,
    tau: f64,
    out: *mut f64,
) -> i32 {
    let Some(m) = (unsafe { spline.as_ref() }) else {
        return SLEKAN_ERR_NULL_ARGUMENT;
    };
    write_result(out, m.0.predict(tau))
}

/// Number of knots in a spline model, or 0 for a null handle.
///
/// # Safety
/// `spline` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn slekan_spline_n_knots(spline: *const slekan_spline) -> usize {
    match unsafe { spline.as_ref() } {
        Some(m) => m.0.grid().n_knots(),
        None => 0,
    }
}

/// Releases a spline handle; a null pointer is a no-op.
///
/// # Safety
/// `spline` must be null or a pointer previously returned by
/// [`slekan_spline_parse`], and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn slekan_spline_free(spline: *mut slekan_spline) {
    if !spline.is_null() {
        drop(unsafe { Box::from_raw(spline) });
    }
}

/// Static description of a status code. Unknown codes map to "unknown".
#[no_mangle]
pub extern "C" fn slekan_error_message(code: i32) -> *const c_char {
    let msg: &'static [u8] = match code {
        SLEKAN_OK => b"ok\0",
        SLEKAN_ERR_NULL_ARGUMENT => b"null argument\0",
        SLEKAN_ERR_DOMAIN => b"argument outside the operation's domain\0",
        SLEKAN_ERR_INFEASIBLE => b"strain at or beyond the strain limit\0",
        SLEKAN_ERR_MODE => b"operation not applicable to this model mode\0",
        SLEKAN_ERR_PARSE => b"malformed serialized model\0",
        SLEKAN_ERR_ENCODING => b"input string was not valid UTF-8\0",
        _ => b"unknown\0",
    };
    msg.as_ptr().cast()
}
