//! Norms of finite element fields and the discrete H^-1 norm.

use crate::assembly::operators::{
    assemble_scalar_mass, assemble_scalar_source, assemble_scalar_stiffness, assemble_source,
};
use crate::error::{NseError, Result};
use crate::linsolve::solve_spd;

use super::quadrature::triangle_quadrature;
use super::space::{FEField, FieldKind, MixedSpace};

/// Exact for squares of P2 fields.
const L2_DEGREE: usize = 4;
/// For errors against smooth closed-form functions.
const ERROR_DEGREE: usize = 8;

pub fn l2_norm(field: &FEField) -> f64 {
    let space = field.space();
    let rule = triangle_quadrature(L2_DEGREE).expect("shipped degree");
    let mut sum = 0.0;
    for t in 0..space.num_elements() {
        let jw0 = 2.0 * space.geometry(t).area;
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let v = match field.kind() {
                FieldKind::Velocity => {
                    let u = field.velocity_at(t, p);
                    u[0] * u[0] + u[1] * u[1]
                }
                FieldKind::Pressure => field.pressure_at(t, p).powi(2),
            };
            sum += jw0 * w * v;
        }
    }
    sum.sqrt()
}

/// `||grad u||`; for pressure fields the elementwise (broken) gradient.
pub fn h1_seminorm(field: &FEField) -> f64 {
    let space = field.space();
    let rule = triangle_quadrature(2).expect("shipped degree");
    let mut sum = 0.0;
    for t in 0..space.num_elements() {
        let g = space.geometry(t);
        let jw0 = 2.0 * g.area;
        match field.kind() {
            FieldKind::Velocity => {
                for (p, w) in rule.points.iter().zip(&rule.weights) {
                    let gu = field.velocity_gradient_at(t, p);
                    let s: f64 = gu.iter().flatten().map(|x| x * x).sum();
                    sum += jw0 * w * s;
                }
            }
            FieldKind::Pressure => {
                let c = &field.coeffs()[3 * t..3 * t + 3];
                let mut grad = [0.0; 2];
                for i in 0..3 {
                    grad[0] += c[i] * g.grad_lambda[i][0];
                    grad[1] += c[i] * g.grad_lambda[i][1];
                }
                sum += g.area * (grad[0] * grad[0] + grad[1] * grad[1]);
            }
        }
    }
    sum.sqrt()
}

pub fn div_l2_norm(field: &FEField) -> Result<f64> {
    if field.kind() != FieldKind::Velocity {
        return Err(NseError::FieldKind {
            expected: "velocity",
            got: field.kind().name(),
        });
    }
    let space = field.space();
    let rule = triangle_quadrature(2).expect("shipped degree");
    let mut sum = 0.0;
    for t in 0..space.num_elements() {
        let jw0 = 2.0 * space.geometry(t).area;
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let gu = field.velocity_gradient_at(t, p);
            let d = gu[0][0] + gu[1][1];
            sum += jw0 * w * d * d;
        }
    }
    Ok(sum.sqrt())
}

/// `||u_h - u||` against a closed-form velocity.
pub fn l2_error_velocity(field: &FEField, exact: impl Fn(f64, f64) -> [f64; 2]) -> f64 {
    let space = field.space();
    let rule = triangle_quadrature(ERROR_DEGREE).expect("shipped degree");
    let mut sum = 0.0;
    for t in 0..space.num_elements() {
        let g = space.geometry(t);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let x = g.point(p);
            let u = field.velocity_at(t, p);
            let e = exact(x[0], x[1]);
            sum += 2.0 * g.area * w * ((u[0] - e[0]).powi(2) + (u[1] - e[1]).powi(2));
        }
    }
    sum.sqrt()
}

/// `||grad (u_h - u)||` given the closed-form gradient `[component][direction]`.
pub fn h1_error_velocity(field: &FEField, exact_grad: impl Fn(f64, f64) -> [[f64; 2]; 2]) -> f64 {
    let space = field.space();
    let rule = triangle_quadrature(ERROR_DEGREE).expect("shipped degree");
    let mut sum = 0.0;
    for t in 0..space.num_elements() {
        let g = space.geometry(t);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let x = g.point(p);
            let gu = field.velocity_gradient_at(t, p);
            let ge = exact_grad(x[0], x[1]);
            let mut s = 0.0;
            for c in 0..2 {
                for d in 0..2 {
                    s += (gu[c][d] - ge[c][d]).powi(2);
                }
            }
            sum += 2.0 * g.area * w * s;
        }
    }
    sum.sqrt()
}

/// `||p_h - p||` after removing the mean of `p` over the domain.
pub fn l2_error_pressure(field: &FEField, exact: impl Fn(f64, f64) -> f64) -> f64 {
    let space = field.space();
    let rule = triangle_quadrature(ERROR_DEGREE).expect("shipped degree");
    let mut mean = 0.0;
    for t in 0..space.num_elements() {
        let g = space.geometry(t);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let x = g.point(p);
            mean += 2.0 * g.area * w * exact(x[0], x[1]);
        }
    }
    let mut sum = 0.0;
    for t in 0..space.num_elements() {
        let g = space.geometry(t);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let x = g.point(p);
            let d = field.pressure_at(t, p) - (exact(x[0], x[1]) - mean);
            sum += 2.0 * g.area * w * d * d;
        }
    }
    sum.sqrt()
}

/// Functional whose discrete dual norm is requested.
pub enum LoadData<'a> {
    Scalar(&'a dyn Fn(f64, f64) -> f64),
    Vector(&'a dyn Fn(f64, f64) -> [f64; 2]),
    /// `(f_h, v)` for a velocity field `f_h`.
    Field(&'a FEField),
    /// Pre-assembled velocity load vector, blocked by component.
    VelocityLoad(&'a [f64]),
}

/// `||grad phi_h||` where `phi_h` in the P2 space with zero boundary values
/// solves `(grad phi_h, grad v) = (f, v)`; vector data are handled per
/// component.
pub fn discrete_hminus1_norm(space: &MixedSpace, f: LoadData<'_>) -> Result<f64> {
    let ns = space.n_scalar();
    let loads: Vec<Vec<f64>> = match f {
        LoadData::Scalar(g) => vec![assemble_scalar_source(space, g)],
        LoadData::Vector(g) => {
            let v = assemble_source(space, g);
            vec![v[..ns].to_vec(), v[ns..].to_vec()]
        }
        LoadData::Field(field) => {
            field.expect(space, FieldKind::Velocity)?;
            let m = assemble_scalar_mass(space);
            let c = field.coeffs();
            vec![m.mul_vec(&c[..ns]), m.mul_vec(&c[ns..])]
        }
        LoadData::VelocityLoad(v) => {
            if v.len() != 2 * ns {
                return Err(NseError::Dimension("velocity load length".into()));
            }
            vec![v[..ns].to_vec(), v[ns..].to_vec()]
        }
    };
    let interior: Vec<usize> = (0..ns).filter(|&s| !space.is_boundary_node(s)).collect();
    let mut map = vec![usize::MAX; ns];
    for (i, &s) in interior.iter().enumerate() {
        map[s] = i;
    }
    let k = assemble_scalar_stiffness(space).extract(&interior, &map, interior.len());
    let mut total = 0.0;
    for load in loads {
        let rhs: Vec<f64> = interior.iter().map(|&s| load[s]).collect();
        let phi = solve_spd(&k, &rhs)?;
        total += rhs.iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>();
    }
    Ok(total.max(0.0).sqrt())
}
