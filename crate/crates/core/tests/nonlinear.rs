use std::sync::Arc;

use nse_core::assembly::BoundaryData;
use nse_core::bench::{build_problem, exact_velocity, ScenarioKind};
use nse_core::fem::{build_space, div_l2_norm, h1_seminorm, interpolate_velocity, FEField, FieldKind, MixedSpace};
use nse_core::mesh::refined_square_mesh;
use nse_core::nonlinear::*;

const ALL_METHODS: [Method; 7] = [
    Method::Picard,
    Method::Newton,
    Method::NewtonLineSearch,
    Method::PicardNewton,
    Method::AAPicardNewton,
    Method::AndersonPicard { depth: 0, damping: 1.0 },
    Method::AndersonPicard { depth: 3, damping: 0.8 },
];

fn space(n: usize) -> Arc<MixedSpace> {
    build_space(Arc::new(refined_square_mesh(n).unwrap()))
}

fn zero_problem(s: &Arc<MixedSpace>, nu: f64) -> Problem {
    Problem::with_load(s, nu, vec![0.0; s.n_velocity()], &BoundaryData::homogeneous()).unwrap()
}

fn max_diff(a: &FEField, b: &FEField) -> f64 {
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn trivial_problem_converges_immediately() {
    let s = space(2);
    let p = zero_problem(&s, 0.01);
    for m in ALL_METHODS {
        let out = run_solver(&SolverConfig::new(m), &p).unwrap();
        assert_eq!(out.history.status, Status::Converged, "{m}");
        assert_eq!(out.history.iterations(), 1);
        assert_eq!(out.history.records[0].res_l2, 0.0);
        assert!(out.velocity.coeffs().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn zero_data_steps_give_zero() {
    let s = space(2);
    let p = zero_problem(&s, 1.0);
    let z = FEField::zeros(&s, FieldKind::Velocity);
    assert!(picard_step(&p, &z).unwrap().velocity.coeffs().iter().all(|&v| v == 0.0));
    assert!(newton_step(&p, &z).unwrap().velocity.coeffs().iter().all(|&v| v == 0.0));
    // f = 0 with homogeneous data: Picard output vanishes for any convecting field
    let a = interpolate_velocity(&s, |x, y| [3.0 * y, -x * x]);
    let out = picard_step(&p, &a).unwrap();
    assert!(h1_seminorm(&out.velocity) < 1e-12);
}

#[test]
fn fixed_points_and_composition() {
    let s = space(4);
    let p = build_problem(ScenarioKind::Analytical, &s, 100.0).unwrap();
    let mut cfg = SolverConfig::new(Method::PicardNewton);
    cfg.tolerance = 1e-12;
    let root = run_solver(&cfg, &p).unwrap();
    assert!(root.history.converged());
    let u = &root.velocity;
    let h1 = |a: &FEField| h1_seminorm(&a.axpy(-1.0, u));
    assert!(h1(&picard_step(&p, u).unwrap().velocity) < 1e-9);
    assert!(h1(&newton_step(&p, u).unwrap().velocity) < 1e-9);
    let ls = newton_line_search_step(&p, u, &root.pressure).unwrap();
    assert!(h1(&ls.velocity) < 1e-9);

    // feeding the root back: one step does not move
    for m in ALL_METHODS {
        let mut c = SolverConfig::new(m).with_initial_guess(InitialGuess::Field(u.clone()));
        c.max_iterations = 1;
        let out = run_solver(&c, &p).unwrap();
        assert!(out.history.records[0].res_l2 <= 10.0 * 1e-8, "{m}");
    }

    // g_PN = g_N o g_P bitwise
    let start = interpolate_velocity(&s, |x, y| [x * (1.0 - y), y * y]);
    let mut start = start;
    p.bc().impose(&mut start);
    let pn = picard_newton_step(&p, &start).unwrap();
    let composed = newton_step(&p, &picard_step(&p, &start).unwrap().velocity).unwrap();
    assert_eq!(pn.newton.velocity.coeffs(), composed.velocity.coeffs());
    assert_eq!(pn.newton.pressure.coeffs(), composed.pressure.coeffs());
}

#[test]
fn iterates_keep_boundary_data_and_divergence() {
    let s = space(3);
    let p = build_problem(ScenarioKind::Cavity2d, &s, 200.0).unwrap();
    for m in ALL_METHODS {
        let mut c = SolverConfig::new(m).with_initial_guess(InitialGuess::Constant([0.5, 0.0]));
        for iters in 1..=3 {
            c.max_iterations = iters;
            let out = run_solver(&c, &p).unwrap();
            assert!(p.bc().boundary_deviation(&out.velocity) <= 1e-13, "{m}");
            if !matches!(m, Method::AndersonPicard { .. }) {
                let d = div_l2_norm(&out.velocity).unwrap();
                assert!(d <= 1e-10 * h1_seminorm(&out.velocity), "{m} {d}");
            }
        }
    }
}

#[test]
fn anderson_depth_zero_is_picard() {
    let s = space(3);
    let p = build_problem(ScenarioKind::Analytical, &s, 50.0).unwrap();
    let run = |m| {
        let mut c = SolverConfig::new(m);
        c.max_iterations = 4;
        run_solver(&c, &p).unwrap()
    };
    let a = run(Method::AndersonPicard { depth: 0, damping: 1.0 });
    let b = run(Method::Picard);
    assert!(max_diff(&a.velocity, &b.velocity) < 1e-13);
    for (ra, rb) in a.history.records.iter().zip(&b.history.records) {
        assert!((ra.res_h1 - rb.res_h1).abs() <= 1e-12 * (1.0 + rb.res_h1));
    }
}

#[test]
fn anderson_picard_gains_and_weights() {
    let s = space(4);
    let p = build_problem(ScenarioKind::Cavity2d, &s, 400.0).unwrap();
    for depth in [1, 2, 4] {
        let c = SolverConfig::new(Method::AndersonPicard { depth, damping: 1.0 });
        let out = run_solver(&c, &p).unwrap();
        assert!(out.history.converged(), "depth {depth}");
        for r in &out.history.records {
            if let Some(t) = r.theta {
                assert!((0.0..=1.0 + 1e-10).contains(&t));
            }
        }
    }
}

#[test]
fn aapn_alpha_matches_general_solver_live() {
    let s = space(4);
    let p = build_problem(ScenarioKind::Cavity2d, &s, 500.0).unwrap();
    let out = run_solver(&SolverConfig::new(Method::AAPicardNewton), &p).unwrap();
    assert!(out.history.converged());
    let mut checked = 0;
    for r in &out.history.records {
        if let (Some(a), Some(g)) = (r.alpha, r.alpha_general) {
            assert!((a - g).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {g}");
            checked += 1;
        }
        if let Some(t) = r.theta {
            assert!(t <= 1.0 + 1e-10);
        }
    }
    assert!(checked > 0);
}

#[test]
fn failure_status_at_iteration_budget() {
    let s = space(4);
    let p = build_problem(ScenarioKind::Cavity2d, &s, 5000.0).unwrap();
    let out = run_solver(&SolverConfig::new(Method::Picard), &p).unwrap();
    assert_eq!(out.history.status, Status::F);
    assert_eq!(out.history.iterations(), 200);
    let ks: Vec<usize> = out.history.records.iter().map(|r| r.k).collect();
    assert_eq!(ks, (1..=200).collect::<Vec<_>>());
    assert!(out.history.residuals().iter().all(|&r| r <= 1e4));
}

#[test]
fn blowup_status_at_first_crossing() {
    let s = space(3);
    let p = build_problem(ScenarioKind::Analytical, &s, 1000.0).unwrap();
    let guess = InitialGuess::Constant([20.0, 0.0]);
    let mut c = SolverConfig::new(Method::Newton).with_initial_guess(guess);
    c.max_iterations = 12;
    let free = run_solver(&c, &p).unwrap();
    let r = free.history.residuals();
    // first record that exceeds everything before it
    let j = (1..r.len()).find(|&j| r[j] > r[..j].iter().copied().fold(0.0, f64::max) * 1.01);
    let j = j.expect("a growing residual");
    let threshold = 0.5 * (r[j] + r[..j].iter().copied().fold(0.0, f64::max));
    c.blowup_threshold = threshold;
    let out = run_solver(&c, &p).unwrap();
    assert_eq!(out.history.status, Status::B);
    assert_eq!(out.history.iterations(), j + 1);
    assert!(out.history.final_residual().unwrap() > threshold);
    assert!(out.history.residuals()[..j].iter().all(|&x| x <= threshold));
}

#[test]
fn converged_history_meets_tolerance() {
    let s = space(4);
    let p = build_problem(ScenarioKind::Analytical, &s, 100.0).unwrap();
    for m in [Method::Picard, Method::Newton, Method::PicardNewton] {
        let mut c = SolverConfig::new(m);
        c.residual_norm = ResidualNorm::H1;
        let out = run_solver(&c, &p).unwrap();
        assert!(out.history.converged());
        assert!(out.history.final_residual().unwrap() <= c.tolerance);
        assert!(out.history.records.last().unwrap().res_h1 <= c.tolerance);
    }
}

#[test]
fn line_search_halves_on_overshoot() {
    let s = space(4);
    let p = build_problem(ScenarioKind::Analytical, &s, 1000.0).unwrap();
    let u0 = p.initial_velocity(&InitialGuess::Constant([20.0, 0.0])).unwrap();
    let p0 = FEField::zeros(&s, FieldKind::Pressure);
    let step = newton_line_search_step(&p, &u0, &p0).unwrap();
    assert!(step.step_size < 1.0 && step.step_size >= MIN_STEP_SIZE);
    assert!(!step.flagged);
    assert!(step.residual_after < step.residual_before);

    let mut c = SolverConfig::new(Method::NewtonLineSearch).with_initial_guess(InitialGuess::Constant([20.0, 0.0]));
    c.max_iterations = 15;
    let out = run_solver(&c, &p).unwrap();
    for r in &out.history.records {
        let s = r.step_size.unwrap();
        assert!(s >= MIN_STEP_SIZE && (s.log2().fract()).abs() < 1e-12);
    }
}

#[test]
fn line_search_takes_full_step_near_root() {
    let s = space(4);
    let p = build_problem(ScenarioKind::Analytical, &s, 100.0).unwrap();
    let mut c = SolverConfig::new(Method::PicardNewton);
    c.max_iterations = 2;
    let near = run_solver(&c, &p).unwrap();
    let step = newton_line_search_step(&p, &near.velocity, &near.pressure).unwrap();
    assert_eq!(step.step_size, 1.0);
}

#[test]
fn picard_half_steps_respect_stability_bound() {
    let s = space(4);
    let f: nse_core::assembly::VelocityFn = Arc::new(|x, y| [(3.0 * y).sin() + x, x * y - 0.5]);
    let p = Problem::new(&s, 1.0, &f, &BoundaryData::homogeneous()).unwrap();
    for guess in [
        InitialGuess::Zero,
        InitialGuess::Constant([5.0, -2.0]),
        InitialGuess::Field(interpolate_velocity(&s, |x, y| [10.0 * y, -x])),
    ] {
        for m in [Method::Picard, Method::PicardNewton, Method::AAPicardNewton] {
            let out = run_solver(&SolverConfig::new(m).with_initial_guess(guess.clone()), &p).unwrap();
            let report = iterate_stability_report(&out.history, &p).unwrap();
            assert!(report.asserted);
            assert!(!report.half_steps.is_empty());
            assert!(report.within_bound, "{m}: {} > {}", report.max_half_step, report.bound);
        }
    }
}

#[test]
fn zero_forcing_stability_report() {
    let s = space(2);
    let p = zero_problem(&s, 1.0);
    let out = run_solver(&SolverConfig::new(Method::PicardNewton), &p).unwrap();
    let report = iterate_stability_report(&out.history, &p).unwrap();
    assert_eq!(report.bound, 0.0);
    assert!(report.half_steps.iter().all(|&h| h == 0.0));
    assert!(report.within_bound);
}

#[test]
fn cavity_report_is_not_asserted() {
    let s = space(3);
    let p = build_problem(ScenarioKind::Cavity2d, &s, 100.0).unwrap();
    let out = run_solver(&SolverConfig::new(Method::PicardNewton), &p).unwrap();
    let report = iterate_stability_report(&out.history, &p).unwrap();
    assert!(!report.asserted);
    assert!(report.half_steps.iter().all(|h| h.is_finite()));
}

#[test]
fn config_validation() {
    let s = space(1);
    let p = zero_problem(&s, 1.0);
    let mut c = SolverConfig::new(Method::Picard);
    c.tolerance = 0.0;
    assert!(run_solver(&c, &p).is_err());
    let mut c = SolverConfig::new(Method::Picard);
    c.max_iterations = 0;
    assert!(run_solver(&c, &p).is_err());
    let c = SolverConfig::new(Method::AndersonPicard { depth: 1, damping: 1.5 });
    assert!(run_solver(&c, &p).is_err());
}

#[test]
fn methods_agree_on_the_root() {
    let s = space(4);
    let p = build_problem(ScenarioKind::Analytical, &s, 200.0).unwrap();
    let roots: Vec<FEField> = [Method::Picard, Method::Newton, Method::PicardNewton]
        .into_iter()
        .map(|m| {
            let out = run_solver(&SolverConfig::new(m), &p).unwrap();
            assert!(out.history.converged());
            out.velocity
        })
        .collect();
    for i in 0..3 {
        for j in i + 1..3 {
            assert!(h1_seminorm(&roots[i].axpy(-1.0, &roots[j])) < 1e-7);
        }
    }
    let err = nse_core::fem::l2_error_velocity(&roots[0], exact_velocity);
    assert!(err < 1e-3);
}

#[test]
fn mismatched_field_is_rejected() {
    let p = zero_problem(&space(2), 1.0);
    let other = FEField::zeros(&space(2), FieldKind::Velocity);
    assert!(picard_step(&p, &other).is_err());
}
