//! C interface to `thermolab`.
//!
//! Every function returns a [`TlStatus`]; results are written through out
//! pointers. Profiles and operators are opaque heap handles released with
//! their `_free` function. After a failure, [`tl_last_error_message`] copies
//! a description of the most recent error on the calling thread.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use thermolab::greens::inverse_apply;
use thermolab::grid::{eval_w, hs_norm_k, w_l1_norm, DegeneracyClass, DegeneracyProfile, Mesh};
use thermolab::operator::{assemble, DiscreteOperator, StateVector};
use thermolab::samples::unit_heat_source;
use thermolab::spectral::{resolvent_norm, spectral_abscissa};
use thermolab::timestepper::{fit_decay_rate_of, simulate, Scheme};
use thermolab::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Unsupported = 3,
    Numerical = 4,
    SingularShift = 5,
    TooLarge = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Degeneracy class codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlClass {
    NonDegenerate = 0,
    Wdp = 1,
    Sdp = 2,
    Unsupported = 3,
}

/// Time integration schemes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlScheme {
    BackwardEuler = 0,
    ImplicitMidpoint = 1,
}

/// Opaque degeneracy profile.
pub struct TlProfile(DegeneracyProfile);

/// Opaque assembled operator.
pub struct TlOperator(DiscreteOperator);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> TlStatus {
    match e {
        Error::UnsupportedClass(_) => TlStatus::Unsupported,
        Error::SingularShift { .. } => TlStatus::SingularShift,
        Error::TooLarge { .. } => TlStatus::TooLarge,
        Error::InvalidArgument(_)
        | Error::InvalidProfile(_)
        | Error::InvalidMesh(_)
        | Error::InvalidConfig(_)
        | Error::NonPositiveCoefficient { .. }
        | Error::DimensionMismatch { .. } => TlStatus::InvalidArgument,
        _ => TlStatus::Numerical,
    }
}

enum Fail {
    Null(&'static str),
    Core(Error),
    Buffer(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TlStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            TlStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Buffer(msg))) => {
            set_error(msg);
            TlStatus::BufferTooSmall
        }
        Err(_) => {
            set_error("internal panic".into());
            TlStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn state_from(op: &DiscreteOperator, flat: &[f64]) -> Result<StateVector, Fail> {
    if flat.len() != op.n_dof() {
        return Err(Error::DimensionMismatch { what: "state", expected: op.n_dof(), actual: flat.len() }.into());
    }
    Ok(StateVector::from_flat(flat, op.n_u()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
#[no_mangle]
pub unsafe extern "C" fn tl_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// `a(x) = x^alpha`.
#[no_mangle]
pub unsafe extern "C" fn tl_profile_power_law(alpha: f64, profile: *mut *mut TlProfile) -> TlStatus {
    guard(|| {
        let slot = out(profile, "profile")?;
        *slot = Box::into_raw(Box::new(TlProfile(DegeneracyProfile::power_law(alpha)?)));
        Ok(())
    })
}

/// Tabulated profile from `len` samples `(x[i], a[i])`.
#[no_mangle]
pub unsafe extern "C" fn tl_profile_tabulated(x: *const f64, a: *const f64, len: usize, profile: *mut *mut TlProfile) -> TlStatus {
    guard(|| {
        let slot = out(profile, "profile")?;
        let (x, a) = (slice(x, len, "x")?, slice(a, len, "a")?);
        let samples = x.iter().copied().zip(a.iter().copied()).collect();
        *slot = Box::into_raw(Box::new(TlProfile(DegeneracyProfile::tabulated(samples)?)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tl_profile_free(profile: *mut TlProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

#[no_mangle]
pub unsafe extern "C" fn tl_profile_class(profile: *const TlProfile, class: *mut TlClass) -> TlStatus {
    guard(|| {
        let p = &get(profile, "profile")?.0;
        *out(class, "class")? = match p.class() {
            DegeneracyClass::NonDegenerate => TlClass::NonDegenerate,
            DegeneracyClass::Wdp => TlClass::Wdp,
            DegeneracyClass::Sdp => TlClass::Sdp,
            DegeneracyClass::Unsupported => TlClass::Unsupported,
        };
        Ok(())
    })
}

/// `W(x)`.
#[no_mangle]
pub unsafe extern "C" fn tl_eval_w(profile: *const TlProfile, x: f64, value: *mut f64) -> TlStatus {
    guard(|| {
        *out(value, "value")? = eval_w(&get(profile, "profile")?.0, x)?;
        Ok(())
    })
}

/// `int_0^1 W`.
#[no_mangle]
pub unsafe extern "C" fn tl_w_l1_norm(profile: *const TlProfile, value: *mut f64) -> TlStatus {
    guard(|| {
        *out(value, "value")? = w_l1_norm(&get(profile, "profile")?.0)?;
        Ok(())
    })
}

/// Hilbert-Schmidt norm of the temperature kernel.
#[no_mangle]
pub unsafe extern "C" fn tl_hs_norm_k(profile: *const TlProfile, value: *mut f64) -> TlStatus {
    guard(|| {
        *out(value, "value")? = hs_norm_k(&get(profile, "profile")?.0)?;
        Ok(())
    })
}

/// Temperature of the Green's solution for `f = g = 0`, `h = 1`, at the
/// `len` points `x`.
#[no_mangle]
pub unsafe extern "C" fn tl_greens_unit_heat_theta(
    profile: *const TlProfile,
    kappa: f64,
    x: *const f64,
    theta: *mut f64,
    len: usize,
) -> TlStatus {
    guard(|| {
        let p = &get(profile, "profile")?.0;
        let (x, theta) = (slice(x, len, "x")?, slice_mut(theta, len, "theta")?);
        let sol = inverse_apply(p, kappa, &unit_heat_source(), thermolab::greens::DEFAULT_TOL)?;
        for (t, &xi) in theta.iter_mut().zip(x) {
            if !(0.0..=1.0).contains(&xi) {
                return Err(Error::InvalidArgument(format!("x = {xi} outside [0, 1]")).into());
            }
            *t = sol.theta(xi);
        }
        Ok(())
    })
}

/// Assembles the operator on the graded mesh `x_i = (i/n)^gamma`; a
/// non-positive `gamma` selects the default grading.
#[no_mangle]
pub unsafe extern "C" fn tl_operator_new(
    profile: *const TlProfile,
    n: usize,
    gamma: f64,
    kappa: f64,
    operator: *mut *mut TlOperator,
) -> TlStatus {
    guard(|| {
        let p = &get(profile, "profile")?.0;
        let slot = out(operator, "operator")?;
        let gamma = if gamma > 0.0 { gamma } else { Mesh::default_gamma(p.alpha()) };
        let op = assemble(&Mesh::graded(n, gamma)?, p, kappa)?;
        *slot = Box::into_raw(Box::new(TlOperator(op)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tl_operator_free(operator: *mut TlOperator) {
    if !operator.is_null() {
        drop(Box::from_raw(operator));
    }
}

/// Sizes of the `u`, `v` blocks (`n_u` each), the `theta` block and the
/// whole state. States are flat arrays `(u, v, theta)` of length `n_dof`.
#[no_mangle]
pub unsafe extern "C" fn tl_operator_dims(
    operator: *const TlOperator,
    n_u: *mut usize,
    n_theta: *mut usize,
    n_dof: *mut usize,
) -> TlStatus {
    guard(|| {
        let op = &get(operator, "operator")?.0;
        *out(n_u, "n_u")? = op.n_u();
        *out(n_theta, "n_theta")? = op.n_theta();
        *out(n_dof, "n_dof")? = op.n_dof();
        Ok(())
    })
}

/// `result <- A_h state`.
#[no_mangle]
pub unsafe extern "C" fn tl_operator_apply(
    operator: *const TlOperator,
    state: *const f64,
    result: *mut f64,
    len: usize,
) -> TlStatus {
    guard(|| {
        let op = &get(operator, "operator")?.0;
        let s = state_from(op, slice(state, len, "state")?)?;
        let r = op.apply_generator(&s)?.to_flat();
        slice_mut(result, len, "result")?.copy_from_slice(&r);
        Ok(())
    })
}

/// Energy `1/2 <U, U>_G`.
#[no_mangle]
pub unsafe extern "C" fn tl_operator_energy(operator: *const TlOperator, state: *const f64, len: usize, value: *mut f64) -> TlStatus {
    guard(|| {
        let op = &get(operator, "operator")?.0;
        let s = state_from(op, slice(state, len, "state")?)?;
        *out(value, "value")? = op.energy(&s)?;
        Ok(())
    })
}

/// Largest real part of the spectrum (dense; limited size).
#[no_mangle]
pub unsafe extern "C" fn tl_spectral_abscissa(operator: *const TlOperator, value: *mut f64) -> TlStatus {
    guard(|| {
        *out(value, "value")? = spectral_abscissa(&get(operator, "operator")?.0)?;
        Ok(())
    })
}

/// `||(i lambda - A_h)^{-1}||` in the energy norm.
#[no_mangle]
pub unsafe extern "C" fn tl_resolvent_norm(operator: *const TlOperator, lambda: f64, value: *mut f64) -> TlStatus {
    guard(|| {
        *out(value, "value")? = resolvent_norm(&get(operator, "operator")?.0, lambda)?;
        Ok(())
    })
}

/// Integrates from `state` to `t_final` and writes `E(k dt)`,
/// `k = 0..=steps`, into `energies`, which must hold `steps + 1` values
/// (`steps = t_final / dt`). `written` receives the count written, or the
/// required count on [`TlStatus::BufferTooSmall`].
#[no_mangle]
pub unsafe extern "C" fn tl_simulate_energies(
    operator: *const TlOperator,
    state: *const f64,
    len: usize,
    t_final: f64,
    dt: f64,
    scheme: TlScheme,
    energies: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> TlStatus {
    guard(|| {
        let op = &get(operator, "operator")?.0;
        let written = out(written, "written")?;
        let needed = thermolab::timestepper::step_count(t_final, dt)? + 1;
        if capacity < needed {
            *written = needed;
            return Err(Fail::Buffer(format!("energies needs {needed} entries, got {capacity}")));
        }
        let s = state_from(op, slice(state, len, "state")?)?;
        let scheme = match scheme {
            TlScheme::BackwardEuler => Scheme::BackwardEuler,
            TlScheme::ImplicitMidpoint => Scheme::ImplicitMidpoint,
        };
        let traj = simulate(op, &s, t_final, dt, scheme)?;
        slice_mut(energies, needed, "energies")?.copy_from_slice(&traj.energies);
        *written = needed;
        Ok(())
    })
}

/// Decay rate fitted to `log E` over the final `tail_fraction` of `times`.
#[no_mangle]
pub unsafe extern "C" fn tl_fit_decay_rate(
    times: *const f64,
    energies: *const f64,
    len: usize,
    tail_fraction: f64,
    rate: *mut f64,
) -> TlStatus {
    guard(|| {
        let (t, e) = (slice(times, len, "times")?, slice(energies, len, "energies")?);
        *out(rate, "rate")? = fit_decay_rate_of(t, e, tail_fraction)?;
        Ok(())
    })
}

/// Interprets a NUL-terminated scheme name (`backward_euler`,
/// `implicit_midpoint`).
#[no_mangle]
pub unsafe extern "C" fn tl_scheme_from_name(name: *const c_char, scheme: *mut TlScheme) -> TlStatus {
    guard(|| {
        if name.is_null() {
            return Err(Fail::Null("name"));
        }
        let s = CStr::from_ptr(name).to_str().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        *out(scheme, "scheme")? = match s.parse::<Scheme>()? {
            Scheme::BackwardEuler => TlScheme::BackwardEuler,
            Scheme::ImplicitMidpoint => TlScheme::ImplicitMidpoint,
        };
        Ok(())
    })
}
