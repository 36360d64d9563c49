//! Operators of the weak form, load vectors and Dirichlet elimination.

pub mod bc;
pub mod operators;
pub mod sparse;

pub use bc::{apply_dirichlet, BCData, BoundaryData, VelocityFn};
pub use operators::{
    assemble_convection, assemble_divergence, assemble_newton_reaction, assemble_scalar_mass,
    assemble_scalar_stiffness, assemble_source, assemble_viscous, eval_trilinear,
};
pub use sparse::{SparseMatrix, TripletBuilder};
