//! C ABI over `invscheme`.
//!
//! Every fallible function returns an [`InvStatus`] and writes results through
//! out-pointers. Trajectories are opaque heap handles owned by the caller and
//! released with [`inv_trajectory_free`]. The message of the last failure on
//! the calling thread is available from [`inv_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use invscheme::continuous::{schwarzian, Jet3};
use invscheme::integrals::{constancy_report, IntegralKind};
use invscheme::schemes::{
    k_from_c, ode2_exact_trajectory, ode2_max_residuals, ode2_solve, ode2_step, theta_exact,
    winternitz_exact_trajectory, winternitz_max_residual, winternitz_step, Ode2ExactParams, StepperConfig,
    WinternitzExactParams,
};
use invscheme::stencil::{cross_ratio_mixed, cross_ratio_same, Node, SchemeParams, Trajectory, Variables};
use invscheme::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvStatus {
    Ok = 0,
    Domain = 1,
    Pole = 2,
    Branch = 3,
    DegenerateStencil = 4,
    Index = 5,
    ZeroStep = 6,
    InsufficientNodes = 7,
    NonConvergence = 8,
    ZeroIntegral = 9,
    Construction = 10,
    InvalidParameter = 11,
    Parse = 12,
    Io = 13,
    NullPointer = 14,
    Panic = 15,
}

impl From<&Error> for InvStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => InvStatus::Domain,
            Error::Pole(_) => InvStatus::Pole,
            Error::Branch(_) => InvStatus::Branch,
            Error::DegenerateStencil(_) => InvStatus::DegenerateStencil,
            Error::Index { .. } => InvStatus::Index,
            Error::ZeroStep(..) => InvStatus::ZeroStep,
            Error::InsufficientNodes { .. } => InvStatus::InsufficientNodes,
            Error::NonConvergence { .. } => InvStatus::NonConvergence,
            Error::ZeroIntegral(_) => InvStatus::ZeroIntegral,
            Error::Construction { .. } => InvStatus::Construction,
            Error::InvalidParameter(_) => InvStatus::InvalidParameter,
            Error::Parse(_) => InvStatus::Parse,
            Error::Io(_) => InvStatus::Io,
        }
    }
}

/// Scheme constants; `theta` is used as given.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct InvSchemeParams {
    pub c: f64,
    pub eps: f64,
    pub theta: f64,
    pub k: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvIntegral {
    J1 = 0,
    J2 = 1,
    J3 = 2,
    J4 = 3,
    C = 4,
    CTilde = 5,
    WinternitzU = 6,
    WinternitzX = 7,
}

impl From<InvIntegral> for IntegralKind {
    fn from(k: InvIntegral) -> Self {
        match k {
            InvIntegral::J1 => IntegralKind::J1,
            InvIntegral::J2 => IntegralKind::J2,
            InvIntegral::J3 => IntegralKind::J3,
            InvIntegral::J4 => IntegralKind::J4,
            InvIntegral::C => IntegralKind::C,
            InvIntegral::CTilde => IntegralKind::CTilde,
            InvIntegral::WinternitzU => IntegralKind::WinternitzU,
            InvIntegral::WinternitzX => IntegralKind::WinternitzX,
        }
    }
}

/// Opaque trajectory handle.
pub struct InvTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `f`, records any failure message, and converts panics to [`InvStatus::Panic`].
fn guard<F: FnOnce() -> Result<(), InvStatus>>(f: F) -> InvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => InvStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside invscheme");
            InvStatus::Panic
        }
    }
}

fn check<T>(r: invscheme::Result<T>) -> Result<T, InvStatus> {
    r.map_err(|e| {
        set_error(&e.to_string());
        InvStatus::from(&e)
    })
}

fn nonnull<T>(p: *const T, what: &str) -> Result<(), InvStatus> {
    if p.is_null() {
        set_error(&format!("{what} is null"));
        Err(InvStatus::NullPointer)
    } else {
        Ok(())
    }
}

fn params(p: &InvSchemeParams) -> Result<SchemeParams, InvStatus> {
    check(SchemeParams::new(p.c, p.eps, p.theta, p.k))
}

/// Writes `h` to `out` as a new handle.
///
/// # Safety
/// `out` must be valid for writes.
unsafe fn emit(tr: Trajectory, out: *mut *mut InvTrajectory) {
    *out = Box::into_raw(Box::new(InvTrajectory(tr)));
}

/// Message of the last failure on this thread; valid until the next failing call.
#[no_mangle]
pub extern "C" fn inv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn inv_theta_exact(c: f64, eps: f64) -> f64 {
    theta_exact(c, eps)
}

#[no_mangle]
pub extern "C" fn inv_k_from_c(c: f64, eps: f64) -> f64 {
    k_from_c(c, eps)
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn inv_cross_ratio_same(a: f64, b: f64, c: f64, d: f64, out: *mut f64) -> InvStatus {
    guard(|| {
        nonnull(out, "out")?;
        *out = check(cross_ratio_same(a, b, c, d))?;
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn inv_cross_ratio_mixed(x0: f64, u0: f64, x1: f64, u1: f64, out: *mut f64) -> InvStatus {
    guard(|| {
        nonnull(out, "out")?;
        *out = check(cross_ratio_mixed(x0, u0, x1, u1))?;
        Ok(())
    })
}

/// Next value of a cross-ratio-`k` sequence.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn inv_winternitz_step(y_m: f64, y0: f64, y_p: f64, k: f64, out: *mut f64) -> InvStatus {
    guard(|| {
        nonnull(out, "out")?;
        *out = check(winternitz_step(y_m, y0, y_p, k))?;
        Ok(())
    })
}

/// Schwarzian from the first three derivatives.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn inv_schwarzian(y1: f64, y2: f64, y3: f64, out: *mut f64) -> InvStatus {
    guard(|| {
        nonnull(out, "out")?;
        *out = check(schwarzian(&Jet3::new(0.0, 0.0, y1, y2, y3)))?;
        Ok(())
    })
}

/// One step of the second-order scheme with default Newton settings.
///
/// # Safety
/// `p`, `x_out` and `u_out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn inv_ode2_step(
    x_prev: f64,
    u_prev: f64,
    x_cur: f64,
    u_cur: f64,
    p: *const InvSchemeParams,
    x_out: *mut f64,
    u_out: *mut f64,
) -> InvStatus {
    guard(|| {
        nonnull(p, "p")?;
        nonnull(x_out, "x_out")?;
        nonnull(u_out, "u_out")?;
        let sp = params(&*p)?;
        let n = check(ode2_step(
            Node { x: x_prev, u: u_prev },
            Node { x: x_cur, u: u_cur },
            &sp,
            &StepperConfig::default(),
        ))?;
        *x_out = n.x;
        *u_out = n.u;
        Ok(())
    })
}

/// Trajectory from `len` abscissae and ordinates labelled `n0, n0 + 1, ...`.
///
/// # Safety
/// `x` and `u` must point to `len` readable values; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn inv_trajectory_new(
    n0: i64,
    x: *const f64,
    u: *const f64,
    len: usize,
    out: *mut *mut InvTrajectory,
) -> InvStatus {
    guard(|| {
        nonnull(x, "x")?;
        nonnull(u, "u")?;
        nonnull(out, "out")?;
        let xs = std::slice::from_raw_parts(x, len);
        let us = std::slice::from_raw_parts(u, len);
        emit(check(Trajectory::from_xy(n0, xs, us))?, out);
        Ok(())
    })
}

/// Closed-form nodes `n_start..=n_end` of the second-order scheme (`c = ±2`).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn inv_trajectory_ode2_exact(
    a: f64,
    b: f64,
    c: f64,
    eps: f64,
    rho: f64,
    n_start: i64,
    n_end: i64,
    out: *mut *mut InvTrajectory,
) -> InvStatus {
    guard(|| {
        nonnull(out, "out")?;
        let e = check(Ode2ExactParams::new(a, b, c, eps, rho))?;
        emit(check(ode2_exact_trajectory(&e, n_start, n_end))?, out);
        Ok(())
    })
}

/// Closed-form Winternitz solution from six constants; the result carries `(t, y)`.
///
/// # Safety
/// `c` must point to six readable values; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn inv_trajectory_winternitz_exact(
    c: *const f64,
    n_start: i64,
    n_end: i64,
    out: *mut *mut InvTrajectory,
) -> InvStatus {
    guard(|| {
        nonnull(c, "c")?;
        nonnull(out, "out")?;
        let mut cs = [0.0; 6];
        cs.copy_from_slice(std::slice::from_raw_parts(c, 6));
        let w = check(WinternitzExactParams::new(cs))?;
        emit(check(winternitz_exact_trajectory(&w, n_start, n_end))?, out);
        Ok(())
    })
}

/// Steps the second-order scheme `steps` times from the last two nodes of `seed`.
///
/// # Safety
/// `seed` must be a live handle; `p` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn inv_ode2_solve(
    seed: *const InvTrajectory,
    steps: usize,
    p: *const InvSchemeParams,
    out: *mut *mut InvTrajectory,
) -> InvStatus {
    guard(|| {
        nonnull(seed, "seed")?;
        nonnull(p, "p")?;
        nonnull(out, "out")?;
        let sp = params(&*p)?;
        emit(check(ode2_solve(&(*seed).0, steps, &sp, &StepperConfig::default()))?, out);
        Ok(())
    })
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn inv_trajectory_len(h: *const InvTrajectory) -> usize {
    if h.is_null() {
        0
    } else {
        (*h).0.len()
    }
}

/// Label, abscissa and ordinate of node `i`.
///
/// # Safety
/// `h` must be a live handle; the out-pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn inv_trajectory_get(
    h: *const InvTrajectory,
    i: usize,
    n_out: *mut i64,
    x_out: *mut f64,
    u_out: *mut f64,
) -> InvStatus {
    guard(|| {
        nonnull(h, "h")?;
        nonnull(n_out, "n_out")?;
        nonnull(x_out, "x_out")?;
        nonnull(u_out, "u_out")?;
        let tr = &(*h).0;
        let p = check(tr.points().get(i).copied().ok_or(Error::Index { index: i, len: tr.len() }))?;
        *n_out = tr.index(i);
        *x_out = p.x;
        *u_out = p.u;
        Ok(())
    })
}

/// Nonzero when the handle carries `(t, y)` rather than `(x, u)`.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn inv_trajectory_is_ty(h: *const InvTrajectory) -> i32 {
    (!h.is_null() && (*h).0.vars == Variables::TY) as i32
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `h` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn inv_trajectory_free(h: *mut InvTrajectory) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Mean and largest deviation from it of one discrete integral along `h`.
///
/// # Safety
/// `h` must be a live handle; `p`, `mean` and `drift` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn inv_integral_report(
    h: *const InvTrajectory,
    kind: InvIntegral,
    p: *const InvSchemeParams,
    mean: *mut f64,
    drift: *mut f64,
) -> InvStatus {
    guard(|| {
        nonnull(h, "h")?;
        nonnull(p, "p")?;
        nonnull(mean, "mean")?;
        nonnull(drift, "drift")?;
        let r = check(constancy_report(&(*h).0, kind.into(), &params(&*p)?))?;
        *mean = r.mean;
        *drift = r.max_abs_drift;
        Ok(())
    })
}

/// Largest scheme and mesh residuals of the second-order scheme along `h`.
///
/// # Safety
/// `h` must be a live handle; the other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn inv_ode2_max_residuals(
    h: *const InvTrajectory,
    p: *const InvSchemeParams,
    scheme_out: *mut f64,
    mesh_out: *mut f64,
) -> InvStatus {
    guard(|| {
        nonnull(h, "h")?;
        nonnull(p, "p")?;
        nonnull(scheme_out, "scheme_out")?;
        nonnull(mesh_out, "mesh_out")?;
        let (s, m) = check(ode2_max_residuals(&(*h).0, &params(&*p)?))?;
        *scheme_out = s;
        *mesh_out = m;
        Ok(())
    })
}

/// Largest Winternitz residual along `h`.
///
/// # Safety
/// `h` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn inv_winternitz_max_residual(h: *const InvTrajectory, k: f64, out: *mut f64) -> InvStatus {
    guard(|| {
        nonnull(h, "h")?;
        nonnull(out, "out")?;
        *out = check(winternitz_max_residual(&(*h).0, k))?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_codes_follow_error_kinds() {
        assert_eq!(InvStatus::from(&Error::Pole("x".into())), InvStatus::Pole);
        assert_eq!(InvStatus::from(&Error::InsufficientNodes { needed: 3, got: 1 }), InvStatus::InsufficientNodes);
        assert_eq!(InvStatus::from(&Error::ZeroIntegral("y")), InvStatus::ZeroIntegral);
        assert_eq!(InvStatus::Panic as i32, 15);
    }

    #[test]
    fn panics_become_status_codes() {
        assert_eq!(guard(|| panic!("boom")), InvStatus::Panic);
        let msg = unsafe { std::ffi::CStr::from_ptr(inv_last_error_message()) };
        assert_eq!(msg.to_str().unwrap(), "panic inside invscheme");
    }
}
