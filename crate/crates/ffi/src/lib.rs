//! C ABI over the monoflow library.
//!
//! Every fallible function returns an [`MfStatus`]; on failure the message is
//! available from [`mf_last_error_message`] on the same thread. Objects are
//! opaque handles released with their `_free` function. Strings returned
//! through `char **` out-parameters are owned by the caller and released with
//! [`mf_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use monoflow::integrate::{self, Direction, IntegrateError, IntegrateOptions, Trajectory};
use monoflow::monotonicity::{self, MonotonicityError, SamplingBox, SamplingOptions};
use monoflow::oscillation;
use monoflow::witness::{self, WitnessError, WitnessProblem, WitnessResult};
use monoflow::{FieldError, OrderRelation, SystemDef};
use num_rational::BigRational;
use num_traits::ToPrimitive;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    DomainError = 4,
    BlowUp = 5,
    StepFailure = 6,
    ToleranceAmbiguity = 7,
    IterationCap = 8,
    Unsupported = 9,
    SamplingFailure = 10,
    Overflow = 11,
    Internal = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfRelation {
    Equal = 0,
    StrictInterior = 1,
    Strict = 2,
    Incomparable = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfDirection {
    Forward = 0,
    Backward = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfMethod {
    Rk4 = 0,
    Dp54 = 1,
}

/// A parsed system with its cone.
pub struct MfSystem(SystemDef);

/// A sampled trajectory.
pub struct MfTrajectory(Trajectory);

/// An exact witness construction result.
pub struct MfWitness(WitnessResult<BigRational>);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

struct Fail(MfStatus, String);

impl From<FieldError> for Fail {
    fn from(e: FieldError) -> Self {
        let status = match e {
            FieldError::Parse { .. } | FieldError::UnknownVariable { .. } => MfStatus::ParseError,
            FieldError::Domain { .. } => MfStatus::DomainError,
            _ => MfStatus::InvalidArgument,
        };
        Fail(status, e.to_string())
    }
}

impl From<IntegrateError> for Fail {
    fn from(e: IntegrateError) -> Self {
        match e {
            IntegrateError::BlowUp { .. } => Fail(MfStatus::BlowUp, e.to_string()),
            IntegrateError::StepFailure { .. } => Fail(MfStatus::StepFailure, e.to_string()),
            IntegrateError::Domain(f) => f.into(),
            IntegrateError::InvalidArgument(m) => Fail(MfStatus::InvalidArgument, m),
        }
    }
}

impl From<WitnessError> for Fail {
    fn from(e: WitnessError) -> Self {
        let status = match e {
            WitnessError::InvalidProblem(_) => MfStatus::InvalidArgument,
            WitnessError::ToleranceAmbiguity(_) => MfStatus::ToleranceAmbiguity,
            WitnessError::IterationCap(_) => MfStatus::IterationCap,
            WitnessError::InvariantViolated(_) => MfStatus::Internal,
        };
        Fail(status, e.to_string())
    }
}

impl From<MonotonicityError> for Fail {
    fn from(e: MonotonicityError) -> Self {
        let status = match e {
            MonotonicityError::UnsupportedCone(_) => MfStatus::Unsupported,
            MonotonicityError::SamplingFailure { .. } => MfStatus::SamplingFailure,
            MonotonicityError::EigenFailure => MfStatus::DomainError,
            MonotonicityError::InvalidArgument(_) => MfStatus::InvalidArgument,
            MonotonicityError::Field(f) => return f.into(),
            MonotonicityError::Integrate(i) => return i.into(),
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(MfStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MfStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MfStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(MfStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn slice_out<'a>(p: *mut f64, n: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, n))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

fn check_dim(sys: &MfSystem, n: usize) -> Result<(), Fail> {
    if n != sys.0.dimension() {
        return Err(Fail(MfStatus::InvalidArgument, format!("system dimension is {}, got {n}", sys.0.dimension())));
    }
    Ok(())
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

/// Message of the last failed call on this thread. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn mf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn mf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a system from its JSON configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mf_system_from_json(json: *const c_char, out: *mut *mut MfSystem) -> MfStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let sys = SystemDef::from_json(text)?;
        put(out, Box::into_raw(Box::new(MfSystem(sys))), "out")
    })
}

/// # Safety
/// `sys` must come from `mf_system_from_json` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mf_system_free(sys: *mut MfSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Dimension of the system, or 0 for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mf_system_dimension(sys: *const MfSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.0.dimension())
}

/// Evaluates `F(x)` into `out`; both arrays have length `n`.
///
/// # Safety
/// `x` and `out` must point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn mf_system_eval(sys: *const MfSystem, x: *const f64, n: usize, out: *mut f64) -> MfStatus {
    guard(|| {
        let sys = sys.as_ref().ok_or_else(|| null("sys"))?;
        check_dim(sys, n)?;
        let x = slice_arg(x, n, "x")?;
        let out = slice_out(out, n, "out")?;
        sys.0.eval_into(x, out)?;
        Ok(())
    })
}

/// Jacobian at `x`, written row-major into `out` (length `n * n`).
///
/// # Safety
/// `x` must point to `n` doubles and `out` to `n * n`.
#[no_mangle]
pub unsafe extern "C" fn mf_system_jacobian(sys: *const MfSystem, x: *const f64, n: usize, out: *mut f64) -> MfStatus {
    guard(|| {
        let sys = sys.as_ref().ok_or_else(|| null("sys"))?;
        check_dim(sys, n)?;
        let x = slice_arg(x, n, "x")?;
        let out = slice_out(out, n * n, "out")?;
        let j = sys.0.jacobian(x)?;
        for r in 0..n {
            for c in 0..n {
                out[r * n + c] = j[(r, c)];
            }
        }
        Ok(())
    })
}

/// Order relation of `x` and `y` in the system's cone.
///
/// # Safety
/// `x` and `y` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mf_order_relation(
    sys: *const MfSystem,
    x: *const f64,
    y: *const f64,
    n: usize,
    tol: f64,
    out: *mut MfRelation,
) -> MfStatus {
    guard(|| {
        let sys = sys.as_ref().ok_or_else(|| null("sys"))?;
        let rel = sys
            .0
            .cone()
            .order_relation(slice_arg(x, n, "x")?, slice_arg(y, n, "y")?, tol)
            .map_err(|e| Fail(MfStatus::InvalidArgument, e.to_string()))?;
        let r = match rel {
            OrderRelation::Equal => MfRelation::Equal,
            OrderRelation::StrictInterior => MfRelation::StrictInterior,
            OrderRelation::Strict => MfRelation::Strict,
            OrderRelation::Incomparable => MfRelation::Incomparable,
        };
        put(out, r, "out")
    })
}

/// Integrates from `x0` over `[0, t_end]`. For RK4 `step` is the fixed step;
/// for DP54 a positive `step` caps the step size and `rtol`/`atol` set the error control.
///
/// # Safety
/// `x0` must point to `n` doubles; `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn mf_integrate(
    sys: *const MfSystem,
    x0: *const f64,
    n: usize,
    t_end: f64,
    direction: MfDirection,
    method: MfMethod,
    step: f64,
    rtol: f64,
    atol: f64,
    out: *mut *mut MfTrajectory,
) -> MfStatus {
    guard(|| {
        let sys = sys.as_ref().ok_or_else(|| null("sys"))?;
        let x0 = slice_arg(x0, n, "x0")?;
        let opts = match method {
            MfMethod::Rk4 => IntegrateOptions::rk4(step),
            MfMethod::Dp54 if step > 0.0 => IntegrateOptions::dp54(rtol, atol).with_max_step(step),
            MfMethod::Dp54 => IntegrateOptions::dp54(rtol, atol),
        };
        let dir = match direction {
            MfDirection::Forward => Direction::Forward,
            MfDirection::Backward => Direction::Backward,
        };
        let traj = integrate::integrate(&sys.0, x0, t_end, dir, &opts)?;
        put(out, Box::into_raw(Box::new(MfTrajectory(traj))), "out")
    })
}

/// # Safety
/// `traj` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mf_trajectory_free(traj: *mut MfTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mf_trajectory_len(traj: *const MfTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.len())
}

/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mf_trajectory_dimension(traj: *const MfTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.dimension())
}

/// Copies all sample times into `out`, which must hold `cap >= len` doubles.
///
/// # Safety
/// `out` must point to `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn mf_trajectory_times(traj: *const MfTrajectory, out: *mut f64, cap: usize) -> MfStatus {
    guard(|| {
        let t = traj.as_ref().ok_or_else(|| null("traj"))?;
        if cap < t.0.len() {
            return Err(Fail(MfStatus::InvalidArgument, format!("buffer holds {cap}, need {}", t.0.len())));
        }
        slice_out(out, t.0.len(), "out")?.copy_from_slice(t.0.times());
        Ok(())
    })
}

/// Copies sample `k` into `out` (length `n`, the trajectory dimension).
///
/// # Safety
/// `out` must point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn mf_trajectory_state(traj: *const MfTrajectory, k: usize, out: *mut f64, n: usize) -> MfStatus {
    guard(|| {
        let t = traj.as_ref().ok_or_else(|| null("traj"))?;
        let state = t
            .0
            .states()
            .get(k)
            .ok_or_else(|| Fail(MfStatus::InvalidArgument, format!("sample {k} out of range")))?;
        if n != state.len() {
            return Err(Fail(MfStatus::InvalidArgument, format!("dimension is {}, got {n}", state.len())));
        }
        slice_out(out, n, "out")?.copy_from_slice(state);
        Ok(())
    })
}

/// Trajectory as CSV text (`t,x1,...,xN`).
///
/// # Safety
/// `out` must be writable; free the string with `mf_string_free`.
#[no_mangle]
pub unsafe extern "C" fn mf_trajectory_to_csv(traj: *const MfTrajectory, out: *mut *mut c_char) -> MfStatus {
    guard(|| {
        let t = traj.as_ref().ok_or_else(|| null("traj"))?;
        put(out, c_string(t.0.to_csv()), "out")
    })
}

/// Non-oscillation verdict of a trajectory in the system's cone, as JSON.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mf_oscillation_verdict_json(
    traj: *const MfTrajectory,
    sys: *const MfSystem,
    tol: f64,
    out: *mut *mut c_char,
) -> MfStatus {
    guard(|| {
        let t = traj.as_ref().ok_or_else(|| null("traj"))?;
        let s = sys.as_ref().ok_or_else(|| null("sys"))?;
        if t.0.dimension() != s.0.dimension() {
            return Err(Fail(MfStatus::InvalidArgument, "trajectory and system dimensions differ".into()));
        }
        let v = oscillation::non_oscillation_verdict(&t.0, s.0.cone(), tol);
        put(out, c_string(v.to_json().to_string()), "out")
    })
}

/// Certificate JSON: exact for linear systems with orthant cones, sampled otherwise
/// (ordered pairs drawn from the box `[lo, hi]^N`).
///
/// # Safety
/// `sys` must be live; `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn mf_certify_json(
    sys: *const MfSystem,
    horizon: f64,
    grid: usize,
    pairs: usize,
    seed: u64,
    lo: f64,
    hi: f64,
    out: *mut *mut c_char,
) -> MfStatus {
    guard(|| {
        let s = sys.as_ref().ok_or_else(|| null("sys"))?;
        let n = s.0.dimension();
        let cert = match s.0.linear_matrix().filter(|_| s.0.cone().orthant_signs().is_some()) {
            Some(a) => monotonicity::certify_linear(a, s.0.cone(), horizon, grid)?,
            None => {
                let mut opts = SamplingOptions::new(n, pairs, horizon, seed).with_box(SamplingBox::uniform(n, lo, hi));
                opts.grid = grid;
                monotonicity::estimate_tstar_empirical(&s.0, &opts)?
            }
        };
        let text = serde_json::to_string(&cert.report()).map_err(|e| Fail(MfStatus::Internal, e.to_string()))?;
        put(out, c_string(text), "out")
    })
}

/// Runs the exact witness construction on rational strings (`p/q` or decimals).
///
/// # Safety
/// Strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mf_witness_construct(
    a: *const c_char,
    b: *const c_char,
    e: *const c_char,
    out: *mut *mut MfWitness,
) -> MfStatus {
    guard(|| {
        let prob = WitnessProblem::parse(str_arg(a, "a")?, str_arg(b, "b")?, str_arg(e, "e")?)?;
        let res = witness::construct_exact(&prob)?;
        put(out, Box::into_raw(Box::new(MfWitness(res))), "out")
    })
}

/// # Safety
/// `w` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mf_witness_free(w: *mut MfWitness) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// `(l*, n*)` as 64-bit integers; `Overflow` if either does not fit.
///
/// # Safety
/// `w` must be live; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn mf_witness_indices(w: *const MfWitness, l_star: *mut u64, n_star: *mut u64) -> MfStatus {
    guard(|| {
        let w = w.as_ref().ok_or_else(|| null("w"))?;
        let too_big = || Fail(MfStatus::Overflow, "index does not fit in 64 bits; use the JSON form".into());
        put(l_star, w.0.l_star.to_u64().ok_or_else(too_big)?, "l_star")?;
        put(n_star, w.0.n_star.to_u64().ok_or_else(too_big)?, "n_star")
    })
}

/// Full result as JSON; exact scalars are `"p/q"` strings.
///
/// # Safety
/// `w` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mf_witness_to_json(w: *const MfWitness, out: *mut *mut c_char) -> MfStatus {
    guard(|| {
        let w = w.as_ref().ok_or_else(|| null("w"))?;
        put(out, c_string(w.0.to_json(&witness::Exact).to_string()), "out")
    })
}
