//! Quadrature on the reference triangle `(0,0), (1,0), (0,1)`.
//!
//! Degrees 1, 2 and 5 use the classical centroid, three-point and seven-point
//! (Radon) rules. The remaining degrees use a collapsed Gauss-Legendre product
//! rule, whose weights are all positive.

use crate::error::{NseError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Barycentric coordinates `(l0, l1, l2)`; the reference point is `(l1, l2)`.
    pub points: Vec<[f64; 3]>,
    /// Weights summing to the reference area 1/2.
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrates `f(xi, eta)` over the reference triangle.
    pub fn integrate_reference(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p[1], p[2]))
            .sum()
    }
}

/// A rule exact for all polynomials of total degree `degree`, `1 <= degree <= 8`.
pub fn triangle_quadrature(degree: usize) -> Result<QuadratureRule> {
    match degree {
        1 => Ok(QuadratureRule {
            points: vec![[1.0 / 3.0; 3]],
            weights: vec![0.5],
            exactness_degree: 1,
        }),
        2 => {
            let (a, b) = (1.0 / 6.0, 2.0 / 3.0);
            Ok(QuadratureRule {
                points: vec![[b, a, a], [a, b, a], [a, a, b]],
                weights: vec![1.0 / 6.0; 3],
                exactness_degree: 2,
            })
        }
        5 => Ok(radon7()),
        3 | 4 | 6 | 7 | 8 => Ok(collapsed_gauss(degree)),
        d => Err(NseError::UnsupportedQuadrature(d)),
    }
}

fn radon7() -> QuadratureRule {
    let s15 = 15f64.sqrt();
    let a = (6.0 - s15) / 21.0;
    let b = (6.0 + s15) / 21.0;
    let wa = (155.0 - s15) / 2400.0;
    let wb = (155.0 + s15) / 2400.0;
    let mut points = vec![[1.0 / 3.0; 3]];
    let mut weights = vec![9.0 / 80.0];
    for (c, w) in [(a, wa), (b, wb)] {
        let d = 1.0 - 2.0 * c;
        points.extend([[d, c, c], [c, d, c], [c, c, d]]);
        weights.extend([w; 3]);
    }
    QuadratureRule {
        points,
        weights,
        exactness_degree: 5,
    }
}

/// Duffy map `xi = u`, `eta = (1 - u) v` with Jacobian `1 - u`, Gauss-Legendre
/// in both directions.
fn collapsed_gauss(degree: usize) -> QuadratureRule {
    let qu = (degree + 3) / 2;
    let qv = (degree + 2) / 2;
    let (xu, wu) = gauss_legendre_unit(qu);
    let (xv, wv) = gauss_legendre_unit(qv);
    let mut points = Vec::with_capacity(qu * qv);
    let mut weights = Vec::with_capacity(qu * qv);
    for (u, wu) in xu.iter().zip(&wu) {
        for (v, wv) in xv.iter().zip(&wv) {
            let xi = *u;
            let eta = (1.0 - u) * v;
            points.push([1.0 - xi - eta, xi, eta]);
            weights.push(wu * wv * (1.0 - u));
        }
    }
    QuadratureRule {
        points,
        weights,
        exactness_degree: degree,
    }
}

/// Gauss-Legendre nodes and weights mapped to `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-type initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Closed form of the monomial integral over the reference triangle.
    fn monomial_exact(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn every_rule_is_exact_to_its_degree() {
        for degree in 1..=8 {
            let rule = triangle_quadrature(degree).unwrap();
            assert!(rule.exactness_degree >= degree);
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    let q = rule.integrate_reference(|x, y| x.powi(a as i32) * y.powi(b as i32));
                    let exact = monomial_exact(a, b);
                    assert!(
                        (q - exact).abs() <= 1e-14,
                        "degree {degree}: x^{a} y^{b} got {q} expected {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn centroid_rule() {
        let r = triangle_quadrature(1).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.weights[0], 0.5);
        assert_eq!(r.points[0], [1.0 / 3.0; 3]);
    }

    #[test]
    fn degree5_x2y3() {
        let r = triangle_quadrature(5).unwrap();
        let q = r.integrate_reference(|x, y| x * x * y * y * y);
        // 2! 3! / 7!
        assert!((q - 12.0 / 5040.0).abs() < 1e-16);
    }

    #[test]
    fn unsupported_degrees() {
        assert_eq!(
            triangle_quadrature(0).unwrap_err(),
            NseError::UnsupportedQuadrature(0)
        );
        assert!(triangle_quadrature(9).is_err());
    }
}
