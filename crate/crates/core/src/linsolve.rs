//! Direct solution of the velocity-pressure saddle-point systems.
//!
//! The constant pressure mode is removed with one Lagrange multiplier that
//! enforces a zero pressure mean, giving the nonsingular system
//!
//! ```text
//! [ A   B^T  0 ] [ u  ]   [ g ]
//! [ B   0    m ] [ p~ ] = [ h ]
//! [ 0   m^T  0 ] [ l  ]   [ 0 ]
//! ```
//!
//! where `m_k` is the integral of pressure basis function `k`. The zero block
//! makes a direct LU of this matrix fill in badly, so it is solved by an
//! augmented Lagrangian iteration around one sparse LU of the penalized
//! velocity block. Systems whose divergence block lacks the constant pressure
//! kernel, and systems on which the iteration stalls, fall back to a direct LU
//! of the augmented matrix.
//! The momentum equation is written with `-(p, div v)`, so `p~ = -p`.

use std::sync::Once;

use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par};

use crate::assembly::sparse::SparseMatrix;
use crate::error::{NseError, Result};

/// Relative residual a successful solve must reach.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;
/// Above this relative residual (after refinement) the system is declared
/// singular.
pub const SINGULAR_RESIDUAL_TOL: f64 = 1e-8;
/// Outer augmented Lagrangian iterations before giving up.
const MAX_OUTER: usize = 100;
const REFINEMENT_STEPS: usize = 3;
/// Iterations without halving the best residual before giving up.
const STALL_LIMIT: usize = 4;
/// Ratio of the penalty term to the velocity block, by mean diagonals.
const PENALTY: f64 = 1e6;
/// Penalty multipliers tried in turn when the iteration stalls.
const PENALTY_SCALES: [f64; 3] = [1.0, 1e2, 1e4];
/// Residual the iteration aims for before stopping early.
const TARGET_RESIDUAL: f64 = 1e-13;

static SEQUENTIAL: Once = Once::new();

/// Sequential factorization keeps repeated solves bitwise identical.
fn ensure_sequential() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
}

#[derive(Debug, Clone)]
pub struct SaddleSystem {
    a: SparseMatrix,
    b: SparseMatrix,
    rhs_u: Vec<f64>,
    rhs_p: Vec<f64>,
    pressure_weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleSolution {
    /// Velocity at the unknown (interior) dofs.
    pub velocity: Vec<f64>,
    /// Physical pressure coefficients, zero mean.
    pub pressure: Vec<f64>,
    pub multiplier: f64,
    /// Relative residual of the augmented system.
    pub residual: f64,
}

impl SaddleSystem {
    pub fn new(
        a: SparseMatrix,
        b: SparseMatrix,
        rhs_u: Vec<f64>,
        rhs_p: Vec<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.ncols() != n || rhs_u.len() != n || rhs_p.len() != b.nrows() {
            return Err(NseError::Dimension(format!(
                "saddle blocks: A {}x{}, B {}x{}, rhs {}+{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                rhs_u.len(),
                rhs_p.len()
            )));
        }
        Ok(Self {
            a,
            b,
            rhs_u,
            rhs_p,
            pressure_weights: None,
        })
    }

    /// Integrals of the pressure basis functions, defining the zero-mean
    /// constraint. Without them every pressure dof is weighted equally.
    pub fn with_pressure_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.b.nrows() {
            return Err(NseError::Dimension("pressure weight length".into()));
        }
        self.pressure_weights = Some(weights);
        Ok(self)
    }

    pub fn n_velocity(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_pressure(&self) -> usize {
        self.b.nrows()
    }

    pub fn velocity_block(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn divergence_block(&self) -> &SparseMatrix {
        &self.b
    }

    pub fn rhs_velocity(&self) -> &[f64] {
        &self.rhs_u
    }

    pub fn rhs_pressure(&self) -> &[f64] {
        &self.rhs_p
    }

    pub fn pressure_weights(&self) -> Vec<f64> {
        self.pressure_weights
            .clone()
            .unwrap_or_else(|| vec![1.0; self.n_pressure()])
    }

    fn dim(&self) -> usize {
        self.n_velocity() + self.n_pressure() + 1
    }

    fn augmented_rhs(&self) -> Vec<f64> {
        let mut rhs = Vec::with_capacity(self.dim());
        rhs.extend_from_slice(&self.rhs_u);
        rhs.extend_from_slice(&self.rhs_p);
        rhs.push(0.0);
        rhs
    }

    /// Product of the augmented matrix with `(u, p~, l)`.
    fn apply(&self, x: &[f64], m: &[f64]) -> Vec<f64> {
        let (nu, np) = (self.n_velocity(), self.n_pressure());
        let (u, rest) = x.split_at(nu);
        let (pt, l) = rest.split_at(np);
        let l = l[0];
        let mut y = vec![0.0; self.dim()];
        self.a.mul_vec_into(u, &mut y[..nu]);
        self.b.mul_transpose_add(pt, &mut y[..nu]);
        self.b.mul_vec_into(u, &mut y[nu..nu + np]);
        for k in 0..np {
            y[nu + k] += m[k] * l;
        }
        y[nu + np] = m.iter().zip(pt).map(|(a, b)| a * b).sum();
        y
    }

    /// The full augmented matrix in CSC form.
    fn augmented_csc(&self, m: &[f64]) -> Result<SparseColMat<usize, f64>> {
        let (nu, np) = (self.n_velocity(), self.n_pressure());
        let mut trip = Vec::with_capacity(self.a.nnz() + 2 * self.b.nnz() + 2 * np);
        for r in 0..nu {
            for (c, v) in self.a.row(r) {
                trip.push(Triplet::new(r, c, v));
            }
        }
        for k in 0..np {
            for (c, v) in self.b.row(k) {
                trip.push(Triplet::new(nu + k, c, v));
                trip.push(Triplet::new(c, nu + k, v));
            }
            trip.push(Triplet::new(nu + k, nu + np, m[k]));
            trip.push(Triplet::new(nu + np, nu + k, m[k]));
        }
        let n = self.dim();
        SparseColMat::try_new_from_triplets(n, n, &trip)
            .map_err(|e| NseError::SingularSystem(format!("matrix construction: {e:?}")))
    }

    /// `A + gamma B^T W^-1 B` in CSC form, `W = diag(w)`.
    fn penalized_csc(&self, gamma: f64, w: &[f64]) -> Result<SparseColMat<usize, f64>> {
        let nu = self.n_velocity();
        let mut trip = Vec::with_capacity(self.a.nnz() + 9 * self.b.nnz());
        for r in 0..nu {
            for (c, v) in self.a.row(r) {
                trip.push(Triplet::new(r, c, v));
            }
        }
        for k in 0..self.n_pressure() {
            let s = gamma / w[k];
            let row: Vec<(usize, f64)> = self.b.row(k).collect();
            for &(i, bi) in &row {
                for &(j, bj) in &row {
                    trip.push(Triplet::new(i, j, s * bi * bj));
                }
            }
        }
        SparseColMat::try_new_from_triplets(nu, nu, &trip)
            .map_err(|e| NseError::SingularSystem(format!("matrix construction: {e:?}")))
    }

    /// Penalty parameter balancing the mean diagonals of `A` and
    /// `B^T W^-1 B`.
    fn penalty(&self, w: &[f64]) -> f64 {
        let nu = self.n_velocity();
        let da: f64 = (0..nu).map(|i| self.a.get(i, i).abs()).sum();
        let mut dd = 0.0;
        for k in 0..self.n_pressure() {
            dd += self.b.row(k).map(|(_, v)| v * v).sum::<f64>() / w[k];
        }
        if da > 0.0 && dd > 0.0 {
            PENALTY * da / dd
        } else {
            PENALTY
        }
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `||K x - rhs|| / ||rhs||` for the augmented system, `0` when both vanish.
pub fn algebraic_residual(system: &SaddleSystem, solution: &SaddleSolution) -> f64 {
    let m = system.pressure_weights();
    let mut x = solution.velocity.clone();
    x.extend(solution.pressure.iter().map(|p| -p));
    x.push(solution.multiplier);
    relative_residual(system, &m, &x)
}

fn relative_residual(system: &SaddleSystem, m: &[f64], x: &[f64]) -> f64 {
    let rhs = system.augmented_rhs();
    let kx = system.apply(x, m);
    let r: Vec<f64> = kx.iter().zip(&rhs).map(|(a, b)| a - b).collect();
    let nr = norm2(&r);
    let nb = norm2(&rhs);
    if nb == 0.0 {
        nr
    } else {
        nr / nb
    }
}

/// Solves the saddle-point system with a zero-mean pressure.
///
/// Augmented Lagrangian iteration in defect-correction form: `A + gamma B^T
/// W^-1 B` is factored once (`W` the diagonal of pressure weights) and the
/// velocity/pressure pair is corrected until the relative residual of the
/// full system stops improving; anything above [`SINGULAR_RESIDUAL_TOL`] is
/// reported as singular.
pub fn solve_saddle(system: &SaddleSystem) -> Result<SaddleSolution> {
    ensure_sequential();
    let (nu, np) = (system.n_velocity(), system.n_pressure());
    let m = system.pressure_weights();
    let rhs = system.augmented_rhs();
    if rhs.iter().all(|&v| v == 0.0) {
        return Ok(SaddleSolution {
            velocity: vec![0.0; nu],
            pressure: vec![0.0; np],
            multiplier: 0.0,
            residual: 0.0,
        });
    }
    let w: Vec<f64> = if m.iter().all(|&v| v > 0.0) {
        m.clone()
    } else {
        vec![1.0; np]
    };
    // the mean constraint only decouples when W^-1 m spans the pressure
    // kernel of B^T, as for finite element divergence operators
    let wm: Vec<f64> = m.iter().zip(&w).map(|(a, b)| a / b).collect();
    let mut btwm = vec![0.0; nu];
    system.b.mul_transpose_add(&wm, &mut btwm);
    let bnorm = system.b.frobenius_norm() * norm2(&wm);
    if norm2(&btwm) > 1e-12 * bnorm {
        return solve_direct(system, &m, &rhs);
    }
    let base = system.penalty(&w);
    let mut residual = f64::NAN;
    for scale in PENALTY_SCALES {
        let (u, pt, l, r) = augmented_lagrangian(system, &m, &w, &wm, base * scale)?;
        residual = r;
        if r.is_finite() && r <= SINGULAR_RESIDUAL_TOL && u.iter().all(|v| v.is_finite()) {
            if r > SOLVE_RESIDUAL_TOL {
                log::warn!("saddle solve stopped at relative residual {r:e}");
            }
            return Ok(SaddleSolution {
                velocity: u,
                pressure: pt.iter().map(|p| -p).collect(),
                multiplier: l,
                residual: r,
            });
        }
        log::debug!("augmented Lagrangian stalled at {r:e} with penalty scale {scale:e}");
    }
    // slow but exact: decides whether the system is really singular
    log::warn!("augmented Lagrangian stalled at {residual:e}; falling back to a direct LU");
    solve_direct(system, &m, &rhs)
}

/// Returns `(u, p~, l, relative residual)`.
fn augmented_lagrangian(
    system: &SaddleSystem,
    m: &[f64],
    w: &[f64],
    wm: &[f64],
    gamma: f64,
) -> Result<(Vec<f64>, Vec<f64>, f64, f64)> {
    let (nu, np) = (system.n_velocity(), system.n_pressure());
    let k = system.penalized_csc(gamma, w)?;
    let lu = k
        .sp_lu()
        .map_err(|e| NseError::SingularSystem(format!("LU factorization: {e:?}")))?;
    let m_wm: f64 = m.iter().zip(wm).map(|(a, b)| a * b).sum();
    let mm: f64 = m.iter().map(|v| v * v).sum();

    let mut u = vec![0.0; nu];
    let mut pt = vec![0.0; np];
    let mut l = 0.0;
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_OUTER {
        // residuals with the multiplier chosen to absorb the mean of h - Bu
        let bu = system.b.mul_vec(&u);
        let hb: Vec<f64> = system.rhs_p.iter().zip(&bu).map(|(h, b)| h - b).collect();
        l = m.iter().zip(&hb).map(|(a, b)| a * b).sum::<f64>() / mm;
        let r_p: Vec<f64> = hb.iter().zip(m).map(|(r, mk)| r - mk * l).collect();
        let mut x = u.clone();
        x.extend_from_slice(&pt);
        x.push(l);
        residual = relative_residual(system, m, &x);
        if !residual.is_finite() || residual <= TARGET_RESIDUAL {
            break;
        }
        if residual < 0.5 * best {
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= STALL_LIMIT {
                break;
            }
        }
        best = best.min(residual);

        let mut r_u = system.rhs_u.clone();
        let au = system.a.mul_vec(&u);
        let mut btp = vec![0.0; nu];
        system.b.mul_transpose_add(&pt, &mut btp);
        let scaled: Vec<f64> = r_p.iter().zip(w).map(|(r, wk)| gamma * r / wk).collect();
        system.b.mul_transpose_add(&scaled, &mut r_u);
        for i in 0..nu {
            r_u[i] -= au[i] + btp[i];
        }
        let mut du = Mat::<f64>::from_fn(nu, 1, |i, _| r_u[i]);
        lu.solve_in_place(du.as_mut());
        for i in 0..nu {
            u[i] += du[(i, 0)];
        }
        let du: Vec<f64> = (0..nu).map(|i| du[(i, 0)]).collect();
        let bdu = system.b.mul_vec(&du);
        for k in 0..np {
            pt[k] += gamma * (bdu[k] - r_p[k]) / w[k];
        }
        let shift = m.iter().zip(&pt).map(|(a, b)| a * b).sum::<f64>() / m_wm;
        for (p, d) in pt.iter_mut().zip(wm) {
            *p -= shift * d;
        }
    }
    Ok((u, pt, l, residual))
}

/// Sparse LU of the full augmented matrix with iterative refinement.
fn solve_direct(system: &SaddleSystem, m: &[f64], rhs: &[f64]) -> Result<SaddleSolution> {
    let (nu, np) = (system.n_velocity(), system.n_pressure());
    let k = system.augmented_csc(m)?;
    let lu = k
        .sp_lu()
        .map_err(|e| NseError::SingularSystem(format!("LU factorization: {e:?}")))?;
    let n = system.dim();
    let mut x = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
    lu.solve_in_place(x.as_mut());
    let mut sol: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(NseError::SingularSystem("non-finite solution".into()));
    }
    let mut residual = relative_residual(system, m, &sol);
    let mut steps = 0;
    while residual > TARGET_RESIDUAL && steps < REFINEMENT_STEPS {
        let kx = system.apply(&sol, m);
        let mut corr = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i] - kx[i]);
        lu.solve_in_place(corr.as_mut());
        for (i, s) in sol.iter_mut().enumerate() {
            *s += corr[(i, 0)];
        }
        residual = relative_residual(system, m, &sol);
        steps += 1;
    }
    if !residual.is_finite() || residual > SINGULAR_RESIDUAL_TOL {
        return Err(NseError::SingularSystem(format!(
            "relative residual {residual:e} after {steps} refinement steps"
        )));
    }
    Ok(SaddleSolution {
        velocity: sol[..nu].to_vec(),
        pressure: sol[nu..nu + np].iter().map(|p| -p).collect(),
        multiplier: sol[nu + np],
        residual,
    })
}

/// Solves a symmetric positive definite system by sparse Cholesky.
pub fn solve_spd(matrix: &SparseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    ensure_sequential();
    let n = matrix.nrows();
    if matrix.ncols() != n || rhs.len() != n {
        return Err(NseError::Dimension("SPD solve shape".into()));
    }
    if rhs.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; n]);
    }
    let mut trip = Vec::with_capacity(matrix.nnz());
    for r in 0..n {
        for (c, v) in matrix.row(r) {
            trip.push(Triplet::new(r, c, v));
        }
    }
    let k = SparseColMat::try_new_from_triplets(n, n, &trip)
        .map_err(|e| NseError::SingularSystem(format!("matrix construction: {e:?}")))?;
    let llt = k
        .sp_cholesky(faer::Side::Lower)
        .map_err(|e| NseError::SingularSystem(format!("Cholesky: {e:?}")))?;
    let mut x = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
    llt.solve_in_place(x.as_mut());
    let out: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(NseError::SingularSystem("non-finite solution".into()));
    }
    Ok(out)
}
