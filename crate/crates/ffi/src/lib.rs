//! C ABI over `nse-core`.
//!
//! Objects are opaque handles created by `*_new` functions and released with
//! the matching `*_free`. Fallible calls return an [`NseStatus`] code; the
//! message of the last failure on the calling thread is available from
//! [`nse_last_error_message`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use nse_core::bench::{build_problem, exact_velocity, ScenarioKind};
use nse_core::fem::{build_space, l2_error_velocity, FEField, MixedSpace};
use nse_core::mesh::refined_square_mesh;
use nse_core::nonlinear::{
    estimate_order, run_solver, ConvergenceHistory, InitialGuess, Method, Problem, ResidualNorm,
    SolverConfig, Status,
};
use nse_core::NseError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NseStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Singular = 3,
    InsufficientData = 4,
    Internal = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NseMethod {
    Picard = 0,
    Newton = 1,
    NewtonLineSearch = 2,
    PicardNewton = 3,
    AaPicardNewton = 4,
    AndersonPicard = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NseScenario {
    Analytical = 0,
    Cavity2d = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NseTermination {
    Converged = 0,
    /// No convergence within the iteration budget.
    Failed = 1,
    /// Residual exceeded the blowup threshold.
    Blowup = 2,
    SingularLinearization = 3,
}

/// Solver settings. Fill with [`nse_solver_options_default`] first.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NseSolverOptions {
    pub method: NseMethod,
    pub tolerance: f64,
    pub max_iterations: u32,
    pub blowup_threshold: f64,
    /// Gate on the H1 seminorm residual instead of L2.
    pub gate_h1: bool,
    /// Constant interior initial velocity.
    pub initial_x: f64,
    pub initial_y: f64,
    /// Depth and damping, used by `AndersonPicard` only.
    pub aa_depth: u32,
    pub aa_damping: f64,
}

/// Refined square mesh with its velocity/pressure space.
pub struct NseSpace {
    space: Arc<MixedSpace>,
}

pub struct NseProblem {
    kind: ScenarioKind,
    problem: Problem,
}

pub struct NseSolution {
    kind: ScenarioKind,
    history: ConvergenceHistory,
    velocity: FEField,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(s));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &NseError) -> NseStatus {
    match e {
        NseError::InvalidArgument(_)
        | NseError::UnsupportedQuadrature(_)
        | NseError::SpaceMismatch
        | NseError::FieldKind { .. }
        | NseError::Dimension(_)
        | NseError::Config(_) => NseStatus::InvalidArgument,
        NseError::SingularSystem(_) => NseStatus::Singular,
        NseError::InsufficientData { .. } => NseStatus::InsufficientData,
        _ => NseStatus::Internal,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (NseStatus, String)>) -> NseStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NseStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside nse-ffi");
            NseStatus::Panic
        }
    }
}

fn core_err(e: NseError) -> (NseStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (NseStatus, String) {
    (NseStatus::NullPointer, format!("{what} is null"))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn nse_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nse_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds the barycenter-refined `n x n` unit-square mesh and its space.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn nse_space_new(n: u32, out: *mut *mut NseSpace) -> NseStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mesh = refined_square_mesh(n as usize).map_err(core_err)?;
        let handle = Box::new(NseSpace {
            space: build_space(Arc::new(mesh)),
        });
        // SAFETY: checked non-null above; caller guarantees it is writable
        unsafe { *out = Box::into_raw(handle) };
        Ok(())
    })
}

/// # Safety
/// `space` must be NULL or a handle from [`nse_space_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nse_space_free(space: *mut NseSpace) {
    if !space.is_null() {
        // SAFETY: caller passes a live handle created by Box::into_raw
        drop(unsafe { Box::from_raw(space) });
    }
}

/// Number of velocity dofs (both components), or 0 for NULL.
///
/// # Safety
/// `space` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nse_space_num_velocity_dofs(space: *const NseSpace) -> usize {
    // SAFETY: caller guarantees a live handle or NULL
    unsafe { space.as_ref() }.map_or(0, |s| s.space.n_velocity())
}

/// # Safety
/// `space` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nse_space_num_pressure_dofs(space: *const NseSpace) -> usize {
    // SAFETY: caller guarantees a live handle or NULL
    unsafe { space.as_ref() }.map_or(0, |s| s.space.n_pressure())
}

/// Builds a benchmark problem on `space` with viscosity `1 / re`.
///
/// # Safety
/// `space` must be a live handle and `out` writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn nse_problem_new(
    space: *const NseSpace,
    scenario: NseScenario,
    re: f64,
    out: *mut *mut NseProblem,
) -> NseStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle or NULL
        let space = unsafe { space.as_ref() }.ok_or_else(|| null("space"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(re > 0.0) || !re.is_finite() {
            return Err((NseStatus::InvalidArgument, format!("Reynolds number {re} must be positive")));
        }
        let kind = match scenario {
            NseScenario::Analytical => ScenarioKind::Analytical,
            NseScenario::Cavity2d => ScenarioKind::Cavity2d,
        };
        let problem = build_problem(kind, &space.space, re).map_err(core_err)?;
        // SAFETY: checked non-null above
        unsafe { *out = Box::into_raw(Box::new(NseProblem { kind, problem })) };
        Ok(())
    })
}

/// # Safety
/// `problem` must be NULL or a handle from [`nse_problem_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nse_problem_free(problem: *mut NseProblem) {
    if !problem.is_null() {
        // SAFETY: caller passes a live handle created by Box::into_raw
        drop(unsafe { Box::from_raw(problem) });
    }
}

/// Defaults: Picard-Newton, tolerance 1e-8 (L2), 200 iterations, blowup 1e4,
/// zero initial guess, AA depth 1 without damping.
///
/// # Safety
/// `out` must point to writable storage for one options struct.
#[no_mangle]
pub unsafe extern "C" fn nse_solver_options_default(out: *mut NseSolverOptions) -> NseStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let d = SolverConfig::default();
        let opts = NseSolverOptions {
            method: NseMethod::PicardNewton,
            tolerance: d.tolerance,
            max_iterations: d.max_iterations as u32,
            blowup_threshold: d.blowup_threshold,
            gate_h1: false,
            initial_x: 0.0,
            initial_y: 0.0,
            aa_depth: 1,
            aa_damping: 1.0,
        };
        // SAFETY: checked non-null above
        unsafe { out.write(opts) };
        Ok(())
    })
}

fn to_config(o: &NseSolverOptions) -> SolverConfig {
    let method = match o.method {
        NseMethod::Picard => Method::Picard,
        NseMethod::Newton => Method::Newton,
        NseMethod::NewtonLineSearch => Method::NewtonLineSearch,
        NseMethod::PicardNewton => Method::PicardNewton,
        NseMethod::AaPicardNewton => Method::AAPicardNewton,
        NseMethod::AndersonPicard => Method::AndersonPicard {
            depth: o.aa_depth as usize,
            damping: o.aa_damping,
        },
    };
    let initial_guess = if o.initial_x == 0.0 && o.initial_y == 0.0 {
        InitialGuess::Zero
    } else {
        InitialGuess::Constant([o.initial_x, o.initial_y])
    };
    SolverConfig {
        method,
        tolerance: o.tolerance,
        residual_norm: if o.gate_h1 { ResidualNorm::H1 } else { ResidualNorm::L2 },
        max_iterations: o.max_iterations as usize,
        blowup_threshold: o.blowup_threshold,
        initial_guess,
    }
}

/// Runs the nonlinear solver. Non-convergence is not an error: inspect
/// [`nse_solution_termination`].
///
/// # Safety
/// `problem` and `options` must be valid pointers; `out` writable storage for
/// one handle.
#[no_mangle]
pub unsafe extern "C" fn nse_solve(
    problem: *const NseProblem,
    options: *const NseSolverOptions,
    out: *mut *mut NseSolution,
) -> NseStatus {
    guard(|| {
        // SAFETY: caller guarantees valid pointers or NULL
        let problem = unsafe { problem.as_ref() }.ok_or_else(|| null("problem"))?;
        // SAFETY: as above
        let options = unsafe { options.as_ref() }.ok_or_else(|| null("options"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let outcome = run_solver(&to_config(options), &problem.problem).map_err(core_err)?;
        let sol = NseSolution {
            kind: problem.kind,
            history: outcome.history,
            velocity: outcome.velocity,
        };
        // SAFETY: checked non-null above
        unsafe { *out = Box::into_raw(Box::new(sol)) };
        Ok(())
    })
}

/// # Safety
/// `solution` must be NULL or a handle from [`nse_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nse_solution_free(solution: *mut NseSolution) {
    if !solution.is_null() {
        // SAFETY: caller passes a live handle created by Box::into_raw
        drop(unsafe { Box::from_raw(solution) });
    }
}

/// # Safety
/// `solution` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nse_solution_termination(
    solution: *const NseSolution,
    out: *mut NseTermination,
) -> NseStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle or NULL
        let s = unsafe { solution.as_ref() }.ok_or_else(|| null("solution"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let t = match s.history.status {
            Status::Converged => NseTermination::Converged,
            Status::F => NseTermination::Failed,
            Status::B => NseTermination::Blowup,
            Status::SingularLinearization => NseTermination::SingularLinearization,
        };
        // SAFETY: checked non-null above
        unsafe { out.write(t) };
        Ok(())
    })
}

/// Number of recorded iterations, or 0 for NULL.
///
/// # Safety
/// `solution` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nse_solution_iterations(solution: *const NseSolution) -> usize {
    // SAFETY: caller guarantees a live handle or NULL
    unsafe { solution.as_ref() }.map_or(0, |s| s.history.iterations())
}

/// Copies the L2 and H1 residual histories. Either output may be NULL;
/// non-NULL outputs must hold `len >= nse_solution_iterations` values.
///
/// # Safety
/// `solution` must be a live handle; outputs NULL or valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nse_solution_residuals(
    solution: *const NseSolution,
    res_l2: *mut f64,
    res_h1: *mut f64,
    len: usize,
) -> NseStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle or NULL
        let s = unsafe { solution.as_ref() }.ok_or_else(|| null("solution"))?;
        let n = s.history.iterations();
        if len < n {
            return Err((NseStatus::InvalidArgument, format!("buffer holds {len}, need {n}")));
        }
        for (i, r) in s.history.records.iter().enumerate() {
            // SAFETY: i < n <= len and the caller sized the buffers
            unsafe {
                if !res_l2.is_null() {
                    *res_l2.add(i) = r.res_l2;
                }
                if !res_h1.is_null() {
                    *res_h1.add(i) = r.res_h1;
                }
            }
        }
        Ok(())
    })
}

/// Copies the final velocity coefficients (x components of all nodes, then
/// y components).
///
/// # Safety
/// `solution` must be a live handle; `out` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nse_solution_velocity(
    solution: *const NseSolution,
    out: *mut f64,
    len: usize,
) -> NseStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle or NULL
        let s = unsafe { solution.as_ref() }.ok_or_else(|| null("solution"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = s.velocity.coeffs();
        if len < c.len() {
            return Err((NseStatus::InvalidArgument, format!("buffer holds {len}, need {}", c.len())));
        }
        // SAFETY: out is valid for len >= c.len() doubles
        unsafe { ptr::copy_nonoverlapping(c.as_ptr(), out, c.len()) };
        Ok(())
    })
}

/// Velocity L2 error against the exact solution (analytical scenario only).
///
/// # Safety
/// `solution` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nse_solution_l2_error(solution: *const NseSolution, out: *mut f64) -> NseStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle or NULL
        let s = unsafe { solution.as_ref() }.ok_or_else(|| null("solution"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if s.kind != ScenarioKind::Analytical {
            return Err((
                NseStatus::InvalidArgument,
                "exact solution is only known for the analytical scenario".into(),
            ));
        }
        // SAFETY: checked non-null above
        unsafe { out.write(l2_error_velocity(&s.velocity, exact_velocity)) };
        Ok(())
    })
}

/// Least-squares convergence order of a residual sequence over its last
/// `tail` entries above 1e-12.
///
/// # Safety
/// `residuals` must be valid for `len` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nse_estimate_order(
    residuals: *const f64,
    len: usize,
    tail: usize,
    out: *mut f64,
) -> NseStatus {
    guard(|| {
        if residuals.is_null() && len > 0 {
            return Err(null("residuals"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let r = if len == 0 {
            &[][..]
        } else {
            // SAFETY: non-null and valid for len doubles per the contract
            unsafe { std::slice::from_raw_parts(residuals, len) }
        };
        let order = estimate_order(r, tail).map_err(core_err)?;
        // SAFETY: checked non-null above
        unsafe { out.write(order) };
        Ok(())
    })
}
