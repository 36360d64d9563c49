use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use nse_core::assembly::{eval_trilinear, BCData};
use nse_core::fem::{build_space, h1_seminorm, l2_norm, triangle_quadrature, FEField, FieldKind, MixedSpace};
use nse_core::mesh::{refined_square_mesh, validate_mesh};
use nse_core::nonlinear::{anderson_general, depth1_alpha};

fn small_space() -> &'static (Arc<MixedSpace>, BCData) {
    static S: OnceLock<(Arc<MixedSpace>, BCData)> = OnceLock::new();
    S.get_or_init(|| {
        let s = build_space(Arc::new(refined_square_mesh(3).unwrap()));
        let bc = BCData::homogeneous(&s);
        (s, bc)
    })
}

fn field(coeffs: Vec<f64>, interior_only: bool) -> FEField {
    let (s, bc) = small_space();
    let mut c = coeffs;
    if interior_only {
        for &d in bc.constrained_dofs() {
            c[d] = 0.0;
        }
    }
    FEField::from_coeffs(s, FieldKind::Velocity, c).unwrap()
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    let n = small_space().0.n_velocity();
    prop::collection::vec(-1.0f64..1.0, n)
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn refined_meshes_are_valid(n in 1usize..=64) {
        let m = refined_square_mesh(n).unwrap();
        prop_assert!(validate_mesh(&m).all_passed());
        prop_assert!(m.is_barycenter_refined());
        prop_assert_eq!(m.num_triangles(), 6 * n * n);
        prop_assert!((m.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_integrates_monomials(deg in prop::sample::select(vec![1usize, 2, 3, 4, 5, 6, 7, 8]), a in 0u32..=8, b in 0u32..=8) {
        prop_assume!((a + b) as usize <= deg);
        let rule = triangle_quadrature(deg).unwrap();
        let got = rule.integrate_reference(|x, y| x.powi(a as i32) * y.powi(b as i32));
        let want = factorial(a) * factorial(b) / factorial(a + b + 2);
        prop_assert!((got - want).abs() <= 1e-14, "deg {} x^{} y^{}: {} vs {}", deg, a, b, got, want);
    }

    #[test]
    fn trilinear_is_skew_in_last_two(a in coeffs(), w in coeffs(), z in coeffs()) {
        let (s, _) = small_space();
        let a = field(a, false);
        let w = field(w, true);
        let z = field(z, true);
        let bww = eval_trilinear(s, &a, &w, &w).unwrap();
        let bwz = eval_trilinear(s, &a, &w, &z).unwrap();
        let bzw = eval_trilinear(s, &a, &z, &w).unwrap();
        prop_assert!(bww.abs() <= 1e-12, "b(a,w,w) = {}", bww);
        prop_assert!((bwz + bzw).abs() <= 1e-12 * (1.0 + bwz.abs()));
    }

    #[test]
    fn norms_are_absolutely_homogeneous(u in coeffs(), c in -10.0f64..10.0) {
        let u = field(u, false);
        let cu = u.scaled(c);
        let (l, h) = (l2_norm(&u), h1_seminorm(&u));
        prop_assert!((l2_norm(&cu) - c.abs() * l).abs() <= 1e-12 * (1.0 + c.abs() * l));
        prop_assert!((h1_seminorm(&cu) - c.abs() * h).abs() <= 1e-12 * (1.0 + c.abs() * h));
    }

    #[test]
    fn anderson_weights_are_affine_and_contract(
        hist in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 12), 2..=5),
        iters in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 12), 5),
        damping in 0.1f64..=1.0,
    ) {
        let m = hist.len();
        let x = &iters[..m];
        let up = anderson_general(x, &hist, damping, &dot).unwrap();
        let sum: f64 = up.weights.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-10);
        prop_assert!(up.gain <= 1.0 + 1e-10, "gain {}", up.gain);
        prop_assert_eq!(up.weights.len() + up.dropped, m);
    }

    #[test]
    fn depth_one_closed_form_matches_general(
        w1 in prop::collection::vec(-1.0f64..1.0, 10),
        w2 in prop::collection::vec(-1.0f64..1.0, 10),
    ) {
        let alpha = depth1_alpha(&w2, &w1, &dot).unwrap();
        let x = vec![vec![0.0; 10], vec![1.0; 10]];
        let up = anderson_general(&x, &[w1, w2], 1.0, &dot).unwrap();
        prop_assert_eq!(up.weights.len(), 2);
        prop_assert!((up.weights[0] - alpha).abs() <= 1e-10 * (1.0 + alpha.abs()));
    }
}
