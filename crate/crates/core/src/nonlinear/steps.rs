//! Single steps of the nonlinear iterations.

use crate::error::Result;
use crate::fem::FEField;

use super::problem::{LinearSolve, Problem};

/// Smallest damping factor tried by the line search.
pub const MIN_STEP_SIZE: f64 = 1.0 / 32.0;

/// Picard map `g_P`.
pub fn picard_step(problem: &Problem, u_k: &FEField) -> Result<LinearSolve> {
    problem.solve_picard(u_k)
}

/// Newton map `g_N` linearized about `u_hat`.
pub fn newton_step(problem: &Problem, u_hat: &FEField) -> Result<LinearSolve> {
    problem.solve_newton(u_hat)
}

#[derive(Debug, Clone)]
pub struct PicardNewtonStep {
    /// Intermediate Picard output.
    pub picard: LinearSolve,
    pub newton: LinearSolve,
}

/// `g_N(g_P(u_k))`.
pub fn picard_newton_step(problem: &Problem, u_k: &FEField) -> Result<PicardNewtonStep> {
    let picard = picard_step(problem, u_k)?;
    let newton = newton_step(problem, &picard.velocity)?;
    Ok(PicardNewtonStep { picard, newton })
}

#[derive(Debug, Clone)]
pub struct LineSearchStep {
    pub velocity: FEField,
    pub pressure: FEField,
    pub step_size: f64,
    /// No decrease was found down to the minimum step.
    pub flagged: bool,
    pub residual_before: f64,
    pub residual_after: f64,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Newton step from `(u_k, p_k)` with the increment halved from 1 down to
/// 1/32 until the nonlinear residual vector norm decreases.
pub fn newton_line_search_step(
    problem: &Problem,
    u_k: &FEField,
    p_k: &FEField,
) -> Result<LineSearchStep> {
    let full = newton_step(problem, u_k)?;
    let before = norm2(&problem.nonlinear_residual(u_k, p_k)?);
    let du = full.velocity.axpy(-1.0, u_k);
    let dp = full.pressure.axpy(-1.0, p_k);
    let mut s = 1.0;
    loop {
        let (u, p) = if s == 1.0 {
            (full.velocity.clone(), full.pressure.clone())
        } else {
            (u_k.axpy(s, &du), p_k.axpy(s, &dp))
        };
        let after = norm2(&problem.nonlinear_residual(&u, &p)?);
        let accepted = after < before;
        if accepted || s <= MIN_STEP_SIZE {
            return Ok(LineSearchStep {
                velocity: u,
                pressure: p,
                step_size: s,
                flagged: !accepted,
                residual_before: before,
                residual_after: after,
            });
        }
        s *= 0.5;
    }
}
