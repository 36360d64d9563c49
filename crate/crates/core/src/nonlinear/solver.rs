//! The outer iteration loop and its diagnostics.

use crate::error::{NseError, Result};
use crate::fem::{FEField, FieldKind};

use super::anderson::{anderson_general, depth1_alpha};
use super::problem::Problem;
use super::steps::{newton_line_search_step, newton_step, picard_newton_step, picard_step};
use super::{
    ConvergenceHistory, IterationRecord, IterationState, Method, SolverConfig, Status,
};

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub history: ConvergenceHistory,
    /// Last iterate (the solution when converged).
    pub velocity: FEField,
    pub pressure: FEField,
}

struct StepResult {
    velocity: FEField,
    pressure: FEField,
    record: IterationRecord,
}

pub fn run_solver(config: &SolverConfig, problem: &Problem) -> Result<SolveOutcome> {
    config.validate()?;
    let space = problem.space();
    let velocity = problem.initial_velocity(&config.initial_guess)?;
    let mut state = IterationState {
        k: 0,
        velocity,
        pressure: FEField::zeros(space, FieldKind::Pressure),
        aa_iterates: Vec::new(),
        aa_residuals: Vec::new(),
    };
    let mut records = Vec::new();
    let mut message = None;
    let mut status = Status::F;

    while state.k < config.max_iterations {
        state.k += 1;
        let step = match advance(config, problem, &mut state) {
            Ok(s) => s,
            Err(NseError::SingularSystem(msg)) => {
                log::warn!("iteration {}: singular linearization: {msg}", state.k);
                status = Status::SingularLinearization;
                message = Some(msg);
                break;
            }
            Err(e) => return Err(e),
        };
        let r = step.record.residual(config.residual_norm);
        log::debug!(
            "{} k={} res_l2={:e} res_h1={:e}",
            config.method,
            state.k,
            step.record.res_l2,
            step.record.res_h1
        );
        records.push(step.record);
        state.velocity = step.velocity;
        state.pressure = step.pressure;
        if !r.is_finite() || r > config.blowup_threshold {
            status = Status::B;
            break;
        }
        if r <= config.tolerance {
            status = Status::Converged;
            break;
        }
    }

    Ok(SolveOutcome {
        history: ConvergenceHistory {
            records,
            status,
            residual_norm: config.residual_norm,
            message,
        },
        velocity: state.velocity,
        pressure: state.pressure,
    })
}

fn advance(config: &SolverConfig, problem: &Problem, state: &mut IterationState) -> Result<StepResult> {
    let u_k = &state.velocity;
    let h1 = |a: &[f64], b: &[f64]| problem.h1_inner(a, b);
    let mut extra = IterationRecord::new(state.k, 0.0, 0.0);
    let (velocity, pressure) = match config.method {
        Method::Picard => {
            let s = picard_step(problem, u_k)?;
            extra.picard_h1 = Some(problem.h1_norm(s.velocity.coeffs()));
            (s.velocity, s.pressure)
        }
        Method::Newton => {
            let s = newton_step(problem, u_k)?;
            (s.velocity, s.pressure)
        }
        Method::NewtonLineSearch => {
            let s = newton_line_search_step(problem, u_k, &state.pressure)?;
            extra.step_size = Some(s.step_size);
            extra.step_flagged = s.flagged;
            (s.velocity, s.pressure)
        }
        Method::PicardNewton => {
            let s = picard_newton_step(problem, u_k)?;
            extra.picard_h1 = Some(problem.h1_norm(s.picard.velocity.coeffs()));
            (s.newton.velocity, s.newton.pressure)
        }
        Method::AAPicardNewton => {
            let p1 = picard_step(problem, u_k)?;
            let p2 = picard_step(problem, &p1.velocity)?;
            extra.picard_h1 = Some(
                problem
                    .h1_norm(p1.velocity.coeffs())
                    .max(problem.h1_norm(p2.velocity.coeffs())),
            );
            let w1 = p1.velocity.axpy(-1.0, u_k);
            let w2 = p2.velocity.axpy(-1.0, &p1.velocity);
            let u_hat = match depth1_alpha(w2.coeffs(), w1.coeffs(), &h1) {
                Ok(alpha) => {
                    let combo = w2.scaled(1.0 - alpha).axpy(alpha, &w1);
                    let denom = problem.h1_norm(w2.coeffs());
                    extra.theta = Some(if denom > 0.0 {
                        problem.h1_norm(combo.coeffs()) / denom
                    } else {
                        0.0
                    });
                    extra.alpha = Some(alpha);
                    let general = anderson_general(
                        &[u_k.coeffs().to_vec(), p1.velocity.coeffs().to_vec()],
                        &[w1.coeffs().to_vec(), w2.coeffs().to_vec()],
                        1.0,
                        &h1,
                    )?;
                    if general.dropped == 0 {
                        extra.alpha_general = Some(general.weights[0]);
                    }
                    p2.velocity.scaled(1.0 - alpha).axpy(alpha, &p1.velocity)
                }
                Err(NseError::DegenerateHistory { .. }) => p2.velocity.clone(),
                Err(e) => return Err(e),
            };
            let s = newton_step(problem, &u_hat)?;
            (s.velocity, s.pressure)
        }
        Method::AndersonPicard { depth, damping } => {
            let s = picard_step(problem, u_k)?;
            extra.picard_h1 = Some(problem.h1_norm(s.velocity.coeffs()));
            let w = s.velocity.axpy(-1.0, u_k);
            state.aa_iterates.push(u_k.coeffs().to_vec());
            state.aa_residuals.push(w.into_coeffs());
            while state.aa_iterates.len() > depth + 1 {
                state.aa_iterates.remove(0);
                state.aa_residuals.remove(0);
            }
            let update = anderson_general(&state.aa_iterates, &state.aa_residuals, damping, &h1)?;
            if state.aa_iterates.len() > 1 {
                extra.theta = Some(update.gain);
                if update.weights.len() == 2 {
                    extra.alpha = Some(update.weights[0]);
                }
            }
            let next = FEField::from_coeffs(problem.space(), FieldKind::Velocity, update.next)?;
            // pressure of the last Picard solve
            (next, s.pressure)
        }
    };
    let diff = velocity.axpy(-1.0, u_k);
    extra.res_l2 = problem.l2_norm(diff.coeffs());
    extra.res_h1 = problem.h1_norm(diff.coeffs());
    Ok(StepResult {
        velocity,
        pressure,
        record: extra,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// `nu^-1 ||f||_-1`.
    pub bound: f64,
    /// `||grad u||` of every Picard half-step, in iteration order.
    pub half_steps: Vec<f64>,
    pub max_half_step: f64,
    pub within_bound: bool,
    /// The bound only holds for homogeneous Dirichlet data; otherwise it is
    /// reported for reference.
    pub asserted: bool,
}

/// Compares the Picard half-step seminorms of a run against `nu^-1 ||f||_-1`.
pub fn iterate_stability_report(
    history: &ConvergenceHistory,
    problem: &Problem,
) -> Result<StabilityReport> {
    let bound = problem.picard_stability_bound()?;
    let half_steps: Vec<f64> = history.records.iter().filter_map(|r| r.picard_h1).collect();
    let max_half_step = half_steps.iter().copied().fold(0.0, f64::max);
    let within_bound = half_steps.iter().all(|&h| h <= bound * (1.0 + 1e-8));
    Ok(StabilityReport {
        bound,
        half_steps,
        max_half_step,
        within_bound,
        asserted: problem.bc().is_homogeneous(),
    })
}
