//! Nonlinear iterations for the discrete steady Navier-Stokes equations.

pub mod anderson;
pub mod order;
pub mod problem;
pub mod solver;
pub mod steps;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{NseError, Result};
use crate::fem::FEField;

pub use anderson::{aa_combine_depth1, anderson_general, depth1_alpha, AndersonUpdate};
pub use order::estimate_order;
pub use problem::{LinearSolve, Problem};
pub use solver::{iterate_stability_report, run_solver, SolveOutcome, StabilityReport};
pub use steps::{
    newton_line_search_step, newton_step, picard_newton_step, picard_step, LineSearchStep,
    PicardNewtonStep, MIN_STEP_SIZE,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    Picard,
    Newton,
    NewtonLineSearch,
    PicardNewton,
    /// Picard-Newton whose Picard half is two Picard solves combined by
    /// depth-1 Anderson acceleration.
    AAPicardNewton,
    /// Anderson acceleration of depth `depth` and damping `damping` over Picard.
    AndersonPicard { depth: usize, damping: f64 },
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::Picard => "picard".into(),
            Method::Newton => "newton".into(),
            Method::NewtonLineSearch => "newton-ls".into(),
            Method::PicardNewton => "picard-newton".into(),
            Method::AAPicardNewton => "aa-picard-newton".into(),
            Method::AndersonPicard { depth, damping } => {
                if *damping == 1.0 {
                    format!("aa-picard-m{depth}")
                } else {
                    format!("aa-picard-m{depth}-b{damping}")
                }
            }
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Parses the CLI names; `aa-picard` takes depth 1 and no damping, the
/// bench config can override both.
impl FromStr for Method {
    type Err = NseError;

    fn from_str(s: &str) -> Result<Self> {
        let m = match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "picard" => Method::Picard,
            "newton" => Method::Newton,
            "newton-ls" | "newton-line-search" | "newtonlinesearch" => Method::NewtonLineSearch,
            "picard-newton" | "picardnewton" | "pn" => Method::PicardNewton,
            "aa-picard-newton" | "aapicardnewton" | "aapn" => Method::AAPicardNewton,
            "aa-picard" | "aa" | "anderson" => Method::AndersonPicard {
                depth: 1,
                damping: 1.0,
            },
            other => return Err(NseError::Config(format!("unknown method '{other}'"))),
        };
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ResidualNorm {
    #[default]
    L2,
    H1,
}

#[derive(Debug, Clone, Default)]
pub enum InitialGuess {
    #[default]
    Zero,
    /// Constant interior value; boundary dofs take the Dirichlet data.
    Constant([f64; 2]),
    Field(FEField),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub method: Method,
    pub tolerance: f64,
    pub residual_norm: ResidualNorm,
    pub max_iterations: usize,
    pub blowup_threshold: f64,
    pub initial_guess: InitialGuess,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::PicardNewton,
            tolerance: 1e-8,
            residual_norm: ResidualNorm::L2,
            max_iterations: 200,
            blowup_threshold: 1e4,
            initial_guess: InitialGuess::Zero,
        }
    }
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn with_initial_guess(mut self, guess: InitialGuess) -> Self {
        self.initial_guess = guess;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(NseError::InvalidArgument("tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(NseError::InvalidArgument("max_iterations must be at least 1".into()));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(NseError::InvalidArgument("blowup threshold must be positive".into()));
        }
        if let Method::AndersonPicard { damping, .. } = self.method {
            if !(damping > 0.0 && damping <= 1.0) {
                return Err(NseError::InvalidArgument(format!(
                    "AA damping {damping} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Converged,
    /// No convergence within the iteration budget.
    F,
    /// Residual exceeded the blowup threshold.
    B,
    SingularLinearization,
}

impl Status {
    pub fn code(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::F => "F",
            Status::B => "B",
            Status::SingularLinearization => "singular",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub res_l2: f64,
    pub res_h1: f64,
    pub theta: Option<f64>,
    pub alpha: Option<f64>,
    pub step_size: Option<f64>,
    /// Line search ended at the minimum step without a decrease.
    #[serde(default)]
    pub step_flagged: bool,
    /// `||grad u||` of the Picard half-step, for the stability report.
    pub picard_h1: Option<f64>,
    /// The same depth-1 weight from the general least-squares solver.
    pub alpha_general: Option<f64>,
}

impl IterationRecord {
    pub fn new(k: usize, res_l2: f64, res_h1: f64) -> Self {
        Self {
            k,
            res_l2,
            res_h1,
            theta: None,
            alpha: None,
            step_size: None,
            step_flagged: false,
            picard_h1: None,
            alpha_general: None,
        }
    }

    pub fn residual(&self, norm: ResidualNorm) -> f64 {
        match norm {
            ResidualNorm::L2 => self.res_l2,
            ResidualNorm::H1 => self.res_h1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceHistory {
    pub records: Vec<IterationRecord>,
    pub status: Status,
    pub residual_norm: ResidualNorm,
    /// Error text when the status is `SingularLinearization`.
    pub message: Option<String>,
}

impl ConvergenceHistory {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.records.last().map(|r| r.residual(self.residual_norm))
    }

    /// Gate-norm residuals in iteration order.
    pub fn residuals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.residual(self.residual_norm)).collect()
    }

    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

/// Solver state between outer iterations.
#[derive(Debug, Clone)]
pub struct IterationState {
    pub k: usize,
    pub velocity: FEField,
    pub pressure: FEField,
    /// AA iterates `x_j`, oldest first.
    pub aa_iterates: Vec<Vec<f64>>,
    /// AA residuals `w_{j+1} = g(x_j) - x_j`, aligned with `aa_iterates`.
    pub aa_residuals: Vec<Vec<f64>>,
}
