//! Quadrature, the Scott-Vogelius space, fields and norms.

pub mod norms;
pub mod quadrature;
pub mod space;
pub mod vtk;

pub use norms::{
    discrete_hminus1_norm, div_l2_norm, h1_error_velocity, h1_seminorm, l2_error_pressure,
    l2_error_velocity, l2_norm, LoadData,
};
pub use quadrature::{triangle_quadrature, QuadratureRule};
pub use space::{
    interpolate_pressure, interpolate_velocity, FEField, FieldKind, MixedSpace,
};

use std::sync::Arc;

use crate::mesh::Mesh;

/// Builds the velocity/pressure dof maps for a mesh.
pub fn build_space(mesh: Arc<Mesh>) -> Arc<MixedSpace> {
    MixedSpace::new(mesh)
}
