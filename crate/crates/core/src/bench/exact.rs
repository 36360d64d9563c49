//! Closed-form solution of the analytical test problem.

use std::sync::Arc;

use crate::assembly::VelocityFn;
use crate::error::{NseError, Result};

pub fn exact_velocity(x: f64, y: f64) -> [f64; 2] {
    [x.cos() * y.sin(), -x.sin() * y.cos()]
}

/// `[component][direction]`.
pub fn exact_velocity_gradient(x: f64, y: f64) -> [[f64; 2]; 2] {
    [
        [-x.sin() * y.sin(), x.cos() * y.cos()],
        [-x.cos() * y.cos(), x.sin() * y.sin()],
    ]
}

pub fn exact_pressure(x: f64, y: f64) -> f64 {
    -0.25 * ((2.0 * x).cos() + (2.0 * y).cos()) + x + y
}

/// `f = -nu lap u + (u . grad) u + grad p` for the exact fields. Here
/// `lap u = -2u`, `(u . grad) u = -(sin x cos x, sin y cos y)` and
/// `grad p = (sin x cos x + 1, sin y cos y + 1)`.
pub fn forcing_from_exact(nu: f64) -> Result<VelocityFn> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(NseError::InvalidArgument(format!("viscosity must be positive, got {nu}")));
    }
    Ok(Arc::new(move |x, y| {
        let u = exact_velocity(x, y);
        [2.0 * nu * u[0] + 1.0, 2.0 * nu * u[1] + 1.0]
    }))
}
