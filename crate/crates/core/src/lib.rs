//! Finite element solver for the steady incompressible Navier-Stokes
//! equations on the unit square.
//!
//! Velocity and pressure use the Scott-Vogelius pair (continuous P2,
//! discontinuous P1) on barycenter-refined triangulations, so discrete
//! velocities are pointwise divergence free. The nonlinear problem is solved
//! with Picard, Newton (optionally with a backtracking line search), the
//! two-step Picard-Newton composition, and Picard-Newton with an
//! Anderson-accelerated Picard step.

// Negated comparisons are used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembly;
pub mod bench;
pub mod error;
pub mod fem;
pub mod fmt;
pub mod linsolve;
pub mod mesh;
pub mod nonlinear;

pub use error::{NseError, Result};
