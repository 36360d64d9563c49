//! Acceptance suite. Runs each criterion, prints one PASS/FAIL line per
//! criterion and exits nonzero if any fails.
//!
//! The n=32 runs dominate the cost; independent runs execute on separate
//! threads.

use std::process::ExitCode;
use std::sync::Arc;
use std::thread;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nse_core::assembly::{assemble_convection, eval_trilinear, BCData, BoundaryData, VelocityFn};
use nse_core::bench::{build_problem, exact_velocity, forcing_from_exact, ScenarioKind};
use nse_core::fem::{
    build_space, div_l2_norm, h1_seminorm, interpolate_velocity, l2_error_velocity,
    triangle_quadrature, FEField, FieldKind, MixedSpace,
};
use nse_core::mesh::refined_square_mesh;
use nse_core::nonlinear::*;

const N_FINE: usize = 32;
const RE: f64 = 1000.0;
const ORDER_TAIL: usize = 4;

type Check = Result<String, String>;

fn space(n: usize) -> Arc<MixedSpace> {
    build_space(Arc::new(refined_square_mesh(n).unwrap()))
}

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Run {
    label: String,
    out: SolveOutcome,
}

impl Run {
    fn status(&self) -> Status {
        self.out.history.status
    }
    fn iters(&self) -> usize {
        self.out.history.iterations()
    }
    fn h1_history(&self) -> Vec<f64> {
        self.out.history.records.iter().map(|r| r.res_h1).collect()
    }
}

fn solve(label: &str, p: &Problem, method: Method, guess: InitialGuess) -> Run {
    solve_with(label, p, SolverConfig::new(method).with_initial_guess(guess))
}

fn solve_with(label: &str, p: &Problem, config: SolverConfig) -> Run {
    let t = Instant::now();
    let out = run_solver(&config, p)
        .unwrap_or_else(|e| panic!("{label}: {e}"));
    eprintln!(
        "  [{label}] {} after {} iterations, {:.1}s",
        out.history.status,
        out.history.iterations(),
        t.elapsed().as_secs_f64()
    );
    Run { label: label.into(), out }
}

/// All n=32 runs used by criteria 1, 2, 4, 6, 7 and 8.
struct FineRuns {
    analytical: Vec<Run>,
    newton_far: Run,
    /// Same as `newton_far` with the blowup check disabled.
    newton_far_free: Run,
    pn_far: Run,
    cavity_pn: Run,
    cavity_aapn: Run,
}

impl FineRuns {
    fn get(&self, label: &str) -> &Run {
        self.analytical.iter().find(|r| r.label == label).unwrap()
    }
    fn all(&self) -> impl Iterator<Item = &Run> {
        self.analytical
            .iter()
            .chain([&self.newton_far, &self.pn_far, &self.cavity_pn, &self.cavity_aapn])
    }
}

fn fine_runs() -> FineRuns {
    let s = space(N_FINE);
    let analytical = build_problem(ScenarioKind::Analytical, &s, RE).unwrap();
    let cavity = build_problem(ScenarioKind::Cavity2d, &s, RE).unwrap();
    let far = InitialGuess::Constant([20.0, 0.0]);
    let methods = [
        ("picard", Method::Picard),
        ("newton", Method::Newton),
        ("newton-ls", Method::NewtonLineSearch),
        ("picard-newton", Method::PicardNewton),
        ("aa-picard-newton", Method::AAPicardNewton),
    ];
    thread::scope(|sc| {
        let a = &analytical;
        let c = &cavity;
        let handles: Vec<_> = methods
            .iter()
            .map(|&(name, m)| sc.spawn(move || solve(name, a, m, InitialGuess::Zero)))
            .collect();
        let nf = sc.spawn(|| solve("newton u0=(20,0)", a, Method::Newton, far.clone()));
        let nff = sc.spawn(|| {
            let mut c = SolverConfig::new(Method::Newton).with_initial_guess(far.clone());
            c.blowup_threshold = f64::INFINITY;
            c.max_iterations = 30;
            solve_with("newton u0=(20,0) no blowup check", a, c)
        });
        let pf = sc.spawn(|| solve("picard-newton u0=(20,0)", a, Method::PicardNewton, far.clone()));
        let cp = sc.spawn(|| solve("cavity picard-newton", c, Method::PicardNewton, InitialGuess::Zero));
        let ca = sc.spawn(|| solve("cavity aa-picard-newton", c, Method::AAPicardNewton, InitialGuess::Zero));
        FineRuns {
            analytical: handles.into_iter().map(|h| h.join().unwrap()).collect(),
            newton_far: nf.join().unwrap(),
            newton_far_free: nff.join().unwrap(),
            pn_far: pf.join().unwrap(),
            cavity_pn: cp.join().unwrap(),
            cavity_aapn: ca.join().unwrap(),
        }
    })
}

fn criterion_1(runs: &FineRuns) -> Check {
    let picard = runs.get("picard");
    let newton = runs.get("newton");
    let pn = runs.get("picard-newton");
    let mut notes = Vec::new();
    let mut ok = true;

    let p_order = estimate_order(&picard.out.history.residuals(), ORDER_TAIL);
    let a_ok = picard.status() == Status::Converged
        && matches!(p_order, Ok(q) if (q - 1.0).abs() <= 0.25);
    ok &= a_ok;
    notes.push(format!("(a) picard {} in {}, order {:?}", picard.status(), picard.iters(), p_order));

    let pn_order = estimate_order(&pn.h1_history(), ORDER_TAIL);
    let b_ok = pn.status() == Status::Converged
        && matches!(pn_order, Ok(q) if q >= 1.7)
        && pn.iters() < newton.iters();
    ok &= b_ok;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(" ");
    notes.push(format!(
        "(b) picard-newton {} in {}, H1 order {:?} from [{}]; newton {} in {}",
        pn.status(),
        pn.iters(),
        pn_order,
        fmt(&pn.h1_history()),
        newton.status(),
        newton.iters()
    ));

    let c_ok = matches!(runs.newton_far.status(), Status::F | Status::B)
        && runs.pn_far.status() == Status::Converged;
    ok &= c_ok;
    notes.push(format!(
        "(c) u0=(20,0): newton {} after {}, picard-newton {} in {}",
        runs.newton_far.status(),
        runs.newton_far.iters(),
        runs.pn_far.status(),
        runs.pn_far.iters()
    ));
    ensure(ok, notes.join("; "))
}

fn criterion_2(runs: &FineRuns) -> Check {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for r in runs.analytical.iter().chain([&runs.newton_far, &runs.pn_far]) {
        if r.status() == Status::Converged {
            worst = worst.max(l2_error_velocity(&r.out.velocity, exact_velocity));
            count += 1;
        }
    }
    ensure(
        count > 0 && worst <= 1e-4,
        format!("{count} converged runs, max velocity L2 error {worst:.3e} (limit 1e-4)"),
    )
}

fn criterion_3() -> Check {
    let s = space(8);
    let bc = BCData::homogeneous(&s);
    let n = s.n_velocity();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let trials = 120;
    for _ in 0..trials {
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let a = FEField::from_coeffs(&s, FieldKind::Velocity, a).unwrap();
        let mut w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for &d in bc.constrained_dofs() {
            w[d] = 0.0;
        }
        let m = assemble_convection(&s, &a).unwrap();
        let ww = dot(&w, &w);
        let rel = m.bilinear(&w, &w).abs() / (m.frobenius_norm() * ww);
        worst = worst.max(rel);
    }
    ensure(
        worst <= 1e-12,
        format!("{trials} random (a, w) on n=8, max |w'N(a)w| / (|N|_F |w|^2) = {worst:.3e}"),
    )
}

/// Steps a method by hand so every linear-solve output can be inspected.
fn linear_outputs(p: &Problem, steps: usize) -> Vec<FEField> {
    let mut out = Vec::new();
    let mut u = p.initial_velocity(&InitialGuess::Constant([0.5, -0.25])).unwrap();
    for _ in 0..steps {
        let pn = picard_newton_step(p, &u).unwrap();
        out.push(pn.picard.velocity.clone());
        out.push(pn.newton.velocity.clone());
        u = pn.newton.velocity;
    }
    let u0 = p.initial_velocity(&InitialGuess::Zero).unwrap();
    out.push(newton_step(p, &u0).unwrap().velocity);
    out
}

fn criterion_4(runs: &FineRuns) -> Check {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut check = |u: &FEField| {
        let h = h1_seminorm(u);
        let d = div_l2_norm(u).unwrap();
        worst = worst.max(if h > 0.0 { d / h } else { d });
        count += 1;
    };
    let s = space(8);
    for kind in [ScenarioKind::Analytical, ScenarioKind::Cavity2d] {
        let p = build_problem(kind, &s, RE).unwrap();
        for u in linear_outputs(&p, 3) {
            check(&u);
        }
    }
    for r in runs.all().filter(|r| r.status() != Status::SingularLinearization) {
        check(&r.out.velocity);
    }
    ensure(
        worst <= 1e-10,
        format!("{count} linear-solve outputs, max div_L2 / |u|_H1 = {worst:.3e}"),
    )
}

fn criterion_5() -> Check {
    let s = space(8);
    let f: VelocityFn = Arc::new(|x, y| [(3.0 * y).sin() + x, x * y - 0.5]);
    let p = Problem::new(&s, 1.0, &f, &BoundaryData::homogeneous()).unwrap();
    let guesses = [
        InitialGuess::Zero,
        InitialGuess::Constant([5.0, -2.0]),
        InitialGuess::Field(interpolate_velocity(&s, |x, y| [10.0 * y, -x])),
        InitialGuess::Field(interpolate_velocity(&s, |x, y| [(7.0 * x).cos(), 40.0 * x * y])),
    ];
    let mut ok = true;
    let mut max_ratio: f64 = 0.0;
    let mut steps = 0;
    let mut bound = 0.0;
    for g in &guesses {
        for m in [Method::Picard, Method::PicardNewton, Method::AAPicardNewton] {
            let out = run_solver(&SolverConfig::new(m).with_initial_guess(g.clone()), &p).unwrap();
            let rep = iterate_stability_report(&out.history, &p).unwrap();
            // the report already applies the 1 + 1e-8 slack
            ok &= rep.asserted && rep.within_bound && !rep.half_steps.is_empty();
            bound = rep.bound;
            steps += rep.half_steps.len();
            max_ratio = max_ratio.max(rep.max_half_step / rep.bound);
        }
    }
    ensure(
        ok,
        format!(
            "nu=1, {} guesses, {steps} Picard outputs, max |u|_H1 / bound = {max_ratio:.4} (bound {bound:.4e})",
            guesses.len()
        ),
    )
}

fn criterion_6(runs: &FineRuns) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut theta_max: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.gen_range(5..40);
        let mut v = || (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
        let (x1, x2, w1, w2) = (v(), v(), v(), v());
        let alpha = depth1_alpha(&w2, &w1, &dot).unwrap();
        let up = anderson_general(&[x1, x2], &[w1.clone(), w2.clone()], 1.0, &dot).unwrap();
        worst = worst.max((up.weights[0] - alpha).abs());
        let combo: Vec<f64> = w2.iter().zip(&w1).map(|(b, a)| (1.0 - alpha) * b + alpha * a).collect();
        theta_max = theta_max.max((dot(&combo, &combo) / dot(&w2, &w2)).sqrt());
        theta_max = theta_max.max(up.gain);
    }
    let mut live = 0;
    let s = space(8);
    let small = build_problem(ScenarioKind::Cavity2d, &s, RE).unwrap();
    let extra = run_solver(&SolverConfig::new(Method::AAPicardNewton), &small).unwrap();
    let histories = runs
        .all()
        .filter(|r| r.label.contains("aa-picard-newton"))
        .map(|r| &r.out.history)
        .chain([&extra.history]);
    for h in histories {
        for r in &h.records {
            if let (Some(a), Some(g)) = (r.alpha, r.alpha_general) {
                worst = worst.max((a - g).abs());
                live += 1;
            }
            if let Some(t) = r.theta {
                theta_max = theta_max.max(t);
            }
        }
    }
    ensure(
        worst <= 1e-12 && theta_max <= 1.0 + 1e-10 && live > 0,
        format!("20 random + {live} live steps, max |alpha - alpha_ls| = {worst:.3e}, max theta = {theta_max:.6}"),
    )
}

fn criterion_7(runs: &FineRuns) -> Check {
    let (pn, aa) = (&runs.cavity_pn, &runs.cavity_aapn);
    ensure(
        pn.status() == Status::Converged
            && aa.status() == Status::Converged
            && aa.iters() <= pn.iters() + 2,
        format!(
            "cavity Re=1000 n=32: picard-newton {} in {}, aa-picard-newton {} in {}",
            pn.status(),
            pn.iters(),
            aa.status(),
            aa.iters()
        ),
    )
}

fn criterion_8(runs: &FineRuns) -> Check {
    let mut notes = Vec::new();
    let mut ok = true;

    let s4 = space(4);
    let p = build_problem(ScenarioKind::Cavity2d, &s4, 5000.0).unwrap();
    let out = run_solver(&SolverConfig::new(Method::Picard), &p).unwrap();
    let h = &out.history;
    let ks: Vec<usize> = h.records.iter().map(|r| r.k).collect();
    let f_ok = h.status == Status::F
        && h.iterations() == 200
        && ks == (1..=200).collect::<Vec<_>>()
        && h.residuals().iter().all(|&r| r <= 1e4);
    ok &= f_ok;
    notes.push(format!("F: status {} after {} records", h.status, h.iterations()));

    // Newton from the far guess blows up under the default threshold; the
    // unthresholded run of the same problem locates the first crossing.
    let h = &runs.newton_far.out.history;
    let free = runs.newton_far_free.out.history.residuals();
    let r = h.residuals();
    let first = free.iter().position(|&x| x.is_nan() || x > 1e4);
    let b_ok = h.status == Status::B
        && first == Some(h.iterations() - 1)
        && r[..] == free[..r.len()];
    ok &= b_ok;
    notes.push(format!(
        "B: status {} at record {}, first crossing of 1e4 at record {:?}, residual {:.3e}",
        h.status,
        h.iterations(),
        first.map(|j| j + 1),
        r.last().copied().unwrap_or(f64::NAN)
    ));
    ensure(ok, notes.join("; "))
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn stokes_error(n: usize) -> f64 {
    let s = space(n);
    let nu = 1.0;
    let f = forcing_from_exact(nu).unwrap();
    let g = BoundaryData::uniform(Arc::new(exact_velocity));
    let p = Problem::new(&s, nu, &f, &g).unwrap();
    // Picard about zero drops convection entirely
    let sol = p.solve_picard(&FEField::zeros(&s, FieldKind::Velocity)).unwrap();
    l2_error_velocity(&sol.velocity, exact_velocity)
}

fn criterion_9() -> Check {
    let mut quad_err: f64 = 0.0;
    for deg in 1..=8usize {
        let rule = triangle_quadrature(deg).unwrap();
        for a in 0..=deg as u32 {
            for b in 0..=(deg as u32 - a) {
                let got = rule.integrate_reference(|x, y| x.powi(a as i32) * y.powi(b as i32));
                let want = factorial(a) * factorial(b) / factorial(a + b + 2);
                quad_err = quad_err.max((got - want).abs());
            }
        }
    }

    let s = space(4);
    let n = s.n_velocity();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut tri_err: f64 = 0.0;
    for _ in 0..10 {
        let mut v = || {
            let c = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            FEField::from_coeffs(&s, FieldKind::Velocity, c).unwrap()
        };
        let (a, w, z) = (v(), v(), v());
        let m = assemble_convection(&s, &a).unwrap();
        let direct = eval_trilinear(&s, &a, &w, &z).unwrap();
        let via = m.bilinear(z.coeffs(), w.coeffs());
        tri_err = tri_err.max((via - direct).abs() / direct.abs().max(1.0));
    }

    let (e8, e16) = (stokes_error(8), stokes_error(16));
    let order = (e8 / e16).log2();
    ensure(
        quad_err <= 1e-14 && tri_err <= 1e-12 && (2.7..=3.3).contains(&order),
        format!(
            "quadrature max error {quad_err:.2e}; trilinear vs scalar {tri_err:.2e}; Stokes L2 {e8:.3e} -> {e16:.3e}, order {order:.3}"
        ),
    )
}

fn main() -> ExitCode {
    let _ = env_logger::builder().is_test(true).try_init();
    // honor `--list` and name filters the way the default harness would
    let args: Vec<String> = std::env::args().skip(1).collect();
    let filtered_out = args
        .iter()
        .filter(|a| !a.starts_with('-'))
        .any(|f| !"acceptance".contains(f.as_str()));
    if args.iter().any(|a| a == "--list") || filtered_out {
        return ExitCode::SUCCESS;
    }
    let t = Instant::now();
    eprintln!("running the n={N_FINE} solves");
    let runs = fine_runs();
    let results: Vec<(usize, &str, Check)> = vec![
        (1, "analytical reproduction", criterion_1(&runs)),
        (2, "discretization accuracy", criterion_2(&runs)),
        (3, "skew-symmetry", criterion_3()),
        (4, "divergence-free solutions", criterion_4(&runs)),
        (5, "Picard half-step stability", criterion_5()),
        (6, "Anderson equivalence", criterion_6(&runs)),
        (7, "cavity sanity", criterion_7(&runs)),
        (8, "termination taxonomy", criterion_8(&runs)),
        (9, "oracle suites", criterion_9()),
    ];
    let mut failed = 0;
    for (i, name, r) in &results {
        match r {
            Ok(msg) => println!("criterion {i} PASS {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {i} FAIL {name}: {msg}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.0}s",
        results.len() - failed,
        t.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
