//! Element assembly of the bilinear and trilinear forms.
//!
//! Velocity rows/columns follow the blocked layout of [`MixedSpace`]. The
//! convection forms use the skew-symmetric trilinear form
//! `b*(v, w, z) = ((v . grad) w, z) + 1/2 ((div v) w, z)`.

use crate::error::{NseError, Result};
use crate::fem::quadrature::{triangle_quadrature, QuadratureRule};
use crate::fem::space::{p2_gradients, p2_values, FEField, FieldKind, MixedSpace};

use super::sparse::{SparseMatrix, TripletBuilder};

/// Rule degree for the trilinear terms; P2 * P1 * P2 integrands are exact.
pub const TRILINEAR_DEGREE: usize = 5;
/// Rule degree for smooth (non-polynomial) load data.
pub const SOURCE_DEGREE: usize = 6;

/// Shape values at the points of a rule, computed once per assembly.
struct Tabulated {
    rule: QuadratureRule,
    values: Vec<[f64; 6]>,
}

impl Tabulated {
    fn new(degree: usize) -> Self {
        let rule = triangle_quadrature(degree).expect("shipped quadrature degree");
        let values = rule.points.iter().map(p2_values).collect();
        Self { rule, values }
    }
}

/// Scalar P2 stiffness `(grad phi_j, grad phi_i)`; its blocks give the H1
/// seminorm inner product.
pub fn assemble_scalar_stiffness(space: &MixedSpace) -> SparseMatrix {
    let ns = space.n_scalar();
    let tab = Tabulated::new(2);
    let mut tb = TripletBuilder::with_capacity(ns, ns, 36 * space.num_elements());
    for t in 0..space.num_elements() {
        let g = space.geometry(t);
        let nodes = space.element_nodes(t);
        let mut local = [[0.0; 6]; 6];
        for (p, w) in tab.rule.points.iter().zip(&tab.rule.weights) {
            let dphi = p2_gradients(p, &g.grad_lambda);
            let jw = 2.0 * g.area * w;
            for i in 0..6 {
                for j in 0..6 {
                    local[i][j] += jw * (dphi[i][0] * dphi[j][0] + dphi[i][1] * dphi[j][1]);
                }
            }
        }
        for i in 0..6 {
            for j in 0..6 {
                tb.push(nodes[i], nodes[j], local[i][j]);
            }
        }
    }
    tb.build()
}

/// Scalar P2 mass matrix.
pub fn assemble_scalar_mass(space: &MixedSpace) -> SparseMatrix {
    let ns = space.n_scalar();
    let tab = Tabulated::new(4);
    let mut tb = TripletBuilder::with_capacity(ns, ns, 36 * space.num_elements());
    for t in 0..space.num_elements() {
        let g = space.geometry(t);
        let nodes = space.element_nodes(t);
        let mut local = [[0.0; 6]; 6];
        for (phi, w) in tab.values.iter().zip(&tab.rule.weights) {
            let jw = 2.0 * g.area * w;
            for i in 0..6 {
                for j in 0..6 {
                    local[i][j] += jw * phi[i] * phi[j];
                }
            }
        }
        for i in 0..6 {
            for j in 0..6 {
                tb.push(nodes[i], nodes[j], local[i][j]);
            }
        }
    }
    tb.build()
}

/// Places a scalar operator on both velocity components.
pub fn block_diagonal(scalar: &SparseMatrix, ns: usize) -> SparseMatrix {
    let mut tb = TripletBuilder::with_capacity(2 * ns, 2 * ns, 2 * scalar.nnz());
    for c in 0..2 {
        for r in 0..ns {
            for (col, v) in scalar.row(r) {
                tb.push(c * ns + r, c * ns + col, v);
            }
        }
    }
    tb.build()
}

/// Velocity block of `nu (grad u, grad v)`.
pub fn assemble_viscous(space: &MixedSpace, nu: f64) -> Result<SparseMatrix> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(NseError::InvalidArgument(format!(
            "viscosity must be positive, got {nu}"
        )));
    }
    let k = assemble_scalar_stiffness(space);
    Ok(block_diagonal(&k.scaled(nu), space.n_scalar()))
}

/// `B[q, v] = (div v, q)`, of size `n_p x n_u`.
pub fn assemble_divergence(space: &MixedSpace) -> SparseMatrix {
    let ns = space.n_scalar();
    let tab = Tabulated::new(2);
    let mut tb = TripletBuilder::with_capacity(
        space.n_pressure(),
        space.n_velocity(),
        36 * space.num_elements(),
    );
    for t in 0..space.num_elements() {
        let g = space.geometry(t);
        let nodes = space.element_nodes(t);
        let mut local = [[[0.0; 6]; 2]; 3];
        for (p, w) in tab.rule.points.iter().zip(&tab.rule.weights) {
            let dphi = p2_gradients(p, &g.grad_lambda);
            let jw = 2.0 * g.area * w;
            for i in 0..3 {
                let q = p[i];
                for c in 0..2 {
                    for j in 0..6 {
                        local[i][c][j] += jw * q * dphi[j][c];
                    }
                }
            }
        }
        for i in 0..3 {
            for c in 0..2 {
                for j in 0..6 {
                    tb.push(3 * t + i, c * ns + nodes[j], local[i][c][j]);
                }
            }
        }
    }
    tb.build()
}

fn check_velocity(space: &MixedSpace, a: &FEField) -> Result<()> {
    a.expect(space, FieldKind::Velocity)
}

/// `N(a)` with `z^T N(a) w = b*(a, w, z)`.
pub fn assemble_convection(space: &MixedSpace, a: &FEField) -> Result<SparseMatrix> {
    check_velocity(space, a)?;
    let ns = space.n_scalar();
    let tab = Tabulated::new(TRILINEAR_DEGREE);
    let mut tb = TripletBuilder::with_capacity(
        space.n_velocity(),
        space.n_velocity(),
        72 * space.num_elements(),
    );
    for t in 0..space.num_elements() {
        let g = space.geometry(t);
        let nodes = space.element_nodes(t);
        let la = a.local_velocity(t);
        let mut local = [[0.0; 6]; 6];
        for ((p, phi), w) in tab.rule.points.iter().zip(&tab.values).zip(&tab.rule.weights) {
            let dphi = p2_gradients(p, &g.grad_lambda);
            let mut av = [0.0; 2];
            let mut div = 0.0;
            for k in 0..6 {
                av[0] += la[0][k] * phi[k];
                av[1] += la[1][k] * phi[k];
                div += la[0][k] * dphi[k][0] + la[1][k] * dphi[k][1];
            }
            let jw = 2.0 * g.area * w;
            for j in 0..6 {
                let adv = av[0] * dphi[j][0] + av[1] * dphi[j][1] + 0.5 * div * phi[j];
                for i in 0..6 {
                    local[i][j] += jw * adv * phi[i];
                }
            }
        }
        for c in 0..2 {
            for i in 0..6 {
                for j in 0..6 {
                    tb.push(c * ns + nodes[i], c * ns + nodes[j], local[i][j]);
                }
            }
        }
    }
    Ok(tb.build())
}

/// `R(a)` with `z^T R(a) w = b*(w, a, z)`.
pub fn assemble_newton_reaction(space: &MixedSpace, a: &FEField) -> Result<SparseMatrix> {
    check_velocity(space, a)?;
    let ns = space.n_scalar();
    let tab = Tabulated::new(TRILINEAR_DEGREE);
    let mut tb = TripletBuilder::with_capacity(
        space.n_velocity(),
        space.n_velocity(),
        144 * space.num_elements(),
    );
    for t in 0..space.num_elements() {
        let g = space.geometry(t);
        let nodes = space.element_nodes(t);
        let la = a.local_velocity(t);
        // local[c][d][i][j]: test component c at node i, trial component d at node j
        let mut local = [[[[0.0; 6]; 6]; 2]; 2];
        for ((p, phi), w) in tab.rule.points.iter().zip(&tab.values).zip(&tab.rule.weights) {
            let dphi = p2_gradients(p, &g.grad_lambda);
            let mut av = [0.0; 2];
            let mut grad_a = [[0.0; 2]; 2];
            for k in 0..6 {
                for c in 0..2 {
                    av[c] += la[c][k] * phi[k];
                    grad_a[c][0] += la[c][k] * dphi[k][0];
                    grad_a[c][1] += la[c][k] * dphi[k][1];
                }
            }
            let jw = 2.0 * g.area * w;
            for c in 0..2 {
                for d in 0..2 {
                    for j in 0..6 {
                        let trial = phi[j] * grad_a[c][d] + 0.5 * dphi[j][d] * av[c];
                        for i in 0..6 {
                            local[c][d][i][j] += jw * trial * phi[i];
                        }
                    }
                }
            }
        }
        for c in 0..2 {
            for d in 0..2 {
                for i in 0..6 {
                    for j in 0..6 {
                        tb.push(c * ns + nodes[i], d * ns + nodes[j], local[c][d][i][j]);
                    }
                }
            }
        }
    }
    Ok(tb.build())
}

/// Direct quadrature of `b*(v, w, z)`.
pub fn eval_trilinear(space: &MixedSpace, v: &FEField, w: &FEField, z: &FEField) -> Result<f64> {
    for f in [v, w, z] {
        check_velocity(space, f)?;
    }
    let rule = triangle_quadrature(TRILINEAR_DEGREE)?;
    let mut total = 0.0;
    for t in 0..space.num_elements() {
        let area = space.geometry(t).area;
        for (p, wq) in rule.points.iter().zip(&rule.weights) {
            let vv = v.velocity_at(t, p);
            let gv = v.velocity_gradient_at(t, p);
            let wv = w.velocity_at(t, p);
            let gw = w.velocity_gradient_at(t, p);
            let zv = z.velocity_at(t, p);
            let div_v = gv[0][0] + gv[1][1];
            let mut integrand = 0.0;
            for c in 0..2 {
                let conv = vv[0] * gw[c][0] + vv[1] * gw[c][1];
                integrand += (conv + 0.5 * div_v * wv[c]) * zv[c];
            }
            total += 2.0 * area * wq * integrand;
        }
    }
    Ok(total)
}

/// Load vector `(f, v)` over the velocity space.
pub fn assemble_source(space: &MixedSpace, f: &dyn Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
    let ns = space.n_scalar();
    let tab = Tabulated::new(SOURCE_DEGREE);
    let mut out = vec![0.0; 2 * ns];
    for t in 0..space.num_elements() {
        let g = space.geometry(t);
        let nodes = space.element_nodes(t);
        for ((p, phi), w) in tab.rule.points.iter().zip(&tab.values).zip(&tab.rule.weights) {
            let x = g.point(p);
            let fv = f(x[0], x[1]);
            let jw = 2.0 * g.area * w;
            for k in 0..6 {
                out[nodes[k]] += jw * fv[0] * phi[k];
                out[ns + nodes[k]] += jw * fv[1] * phi[k];
            }
        }
    }
    out
}

/// Load vector `(f, phi)` over the scalar P2 space.
pub fn assemble_scalar_source(space: &MixedSpace, f: &dyn Fn(f64, f64) -> f64) -> Vec<f64> {
    let tab = Tabulated::new(SOURCE_DEGREE);
    let mut out = vec![0.0; space.n_scalar()];
    for t in 0..space.num_elements() {
        let g = space.geometry(t);
        let nodes = space.element_nodes(t);
        for ((p, phi), w) in tab.rule.points.iter().zip(&tab.values).zip(&tab.rule.weights) {
            let x = g.point(p);
            let jw = 2.0 * g.area * w * f(x[0], x[1]);
            for k in 0..6 {
                out[nodes[k]] += jw * phi[k];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::space::interpolate_velocity;
    use crate::mesh::refined_square_mesh;
    use std::sync::Arc;

    fn space(n: usize) -> Arc<MixedSpace> {
        MixedSpace::new(Arc::new(refined_square_mesh(n).unwrap()))
    }

    #[test]
    fn viscous_is_symmetric_and_linear_in_nu() {
        let s = space(3);
        let a1 = assemble_viscous(&s, 0.3).unwrap();
        let a2 = assemble_viscous(&s, 0.6).unwrap();
        assert!(a1.asymmetry() <= 1e-13 * a1.max_abs());
        for (x, y) in a1.values().iter().zip(a2.values()) {
            assert!((2.0 * x - y).abs() <= 1e-15 * y.abs().max(1.0));
        }
        assert!(assemble_viscous(&s, 0.0).is_err());
        assert!(assemble_viscous(&s, -1.0).is_err());
    }

    #[test]
    fn viscous_energy_of_linear_field() {
        let s = space(4);
        let nu = 0.7;
        let a = assemble_viscous(&s, nu).unwrap();
        let u = interpolate_velocity(&s, |x, _| [x, 0.0]);
        let e = a.bilinear(u.coeffs(), u.coeffs());
        assert!((e - nu).abs() < 1e-12);
    }

    #[test]
    fn divergence_of_constant_and_solenoidal_fields() {
        let s = space(3);
        let b = assemble_divergence(&s);
        assert_eq!((b.nrows(), b.ncols()), (s.n_pressure(), s.n_velocity()));
        for f in [
            interpolate_velocity(&s, |_, _| [1.0, 0.0]),
            interpolate_velocity(&s, |x, y| [x, -y]),
        ] {
            let r = b.mul_vec(f.coeffs());
            assert!(r.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn divergence_rows_sum_to_element_area() {
        let s = space(2);
        let b = assemble_divergence(&s);
        let u = interpolate_velocity(&s, |x, _| [x, 0.0]);
        let r = b.mul_vec(u.coeffs());
        for t in 0..s.num_elements() {
            let area = s.geometry(t).area;
            for i in 0..3 {
                // integral of a P1 vertex basis over a triangle is area / 3
                assert!((r[3 * t + i] - area / 3.0).abs() < 1e-13);
            }
            let sum: f64 = r[3 * t..3 * t + 3].iter().sum();
            assert!((sum - area).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_advector_gives_zero_matrices() {
        let s = space(2);
        let z = FEField::zeros(&s, FieldKind::Velocity);
        assert_eq!(assemble_convection(&s, &z).unwrap().max_abs(), 0.0);
        assert_eq!(assemble_newton_reaction(&s, &z).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn convection_of_linear_field() {
        // b*((1,0), (x,0), (x,0)) = int x dx dy = 1/2
        let s = space(4);
        let a = interpolate_velocity(&s, |_, _| [1.0, 0.0]);
        let w = interpolate_velocity(&s, |x, _| [x, 0.0]);
        let n = assemble_convection(&s, &a).unwrap();
        let val = n.bilinear(w.coeffs(), w.coeffs());
        // skew-symmetry forces w^T N w = 0 on functions vanishing on the
        // boundary only; here w does not vanish, so the boundary term remains
        assert!((val - 0.5).abs() < 1e-12, "{val}");
        let direct = eval_trilinear(&s, &a, &w, &w).unwrap();
        assert!((direct - 0.5).abs() < 1e-12);
    }

    #[test]
    fn space_mismatch_is_rejected() {
        let s1 = space(1);
        let s2 = space(1);
        let a = FEField::zeros(&s2, FieldKind::Velocity);
        assert_eq!(
            assemble_convection(&s1, &a).unwrap_err(),
            NseError::SpaceMismatch
        );
    }

    #[test]
    fn source_partition_of_unity() {
        let s = space(3);
        let zero = assemble_source(&s, &|_, _| [0.0, 0.0]);
        assert!(zero.iter().all(|&v| v == 0.0));
        let f = assemble_source(&s, &|_, _| [1.0, 0.0]);
        let ns = s.n_scalar();
        let sx: f64 = f[..ns].iter().sum();
        let sy: f64 = f[ns..].iter().sum();
        assert!((sx - 1.0).abs() < 1e-10);
        assert!(sy.abs() < 1e-15);
    }
}
