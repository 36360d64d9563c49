//! Anderson acceleration: the constrained least-squares weights in a
//! user-supplied inner product and the depth-1 closed form.

use crate::error::{NseError, Result};

/// Relative size below which a history difference counts as zero.
const DEGENERATE_TOL: f64 = 1e-14;
/// Relative Cholesky pivot below which the oldest history column is dropped.
const RANK_TOL: f64 = 1e-12;

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `alpha = (x2, x2 - x1) / ||x2 - x1||^2`: the weight on `x1` minimizing
/// `||(1 - alpha) x2 + alpha x1||`.
pub fn depth1_alpha(
    x2: &[f64],
    x1: &[f64],
    inner: &dyn Fn(&[f64], &[f64]) -> f64,
) -> Result<f64> {
    let d = sub(x2, x1);
    let dd = inner(&d, &d);
    let scale = inner(x2, x2).max(inner(x1, x1)).sqrt();
    if !(dd.sqrt() > DEGENERATE_TOL * scale) {
        return Err(NseError::DegenerateHistory { norm: dd.max(0.0).sqrt() });
    }
    let alpha = inner(x2, &d) / dd;
    if !alpha.is_finite() {
        return Err(NseError::DegenerateHistory { norm: dd.sqrt() });
    }
    Ok(alpha)
}

/// Depth-1 combination `(1 - alpha) x2 + alpha x1` with the closed-form
/// `alpha` computed from the same two vectors.
pub fn aa_combine_depth1(
    x2: &[f64],
    x1: &[f64],
    inner: &dyn Fn(&[f64], &[f64]) -> f64,
) -> Result<(Vec<f64>, f64)> {
    let alpha = depth1_alpha(x2, x1, inner)?;
    let out = x2
        .iter()
        .zip(x1)
        .map(|(a, b)| (1.0 - alpha) * a + alpha * b)
        .collect();
    Ok((out, alpha))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AndersonUpdate {
    pub next: Vec<f64>,
    /// Weights over the history actually used, oldest first; they sum to 1.
    pub weights: Vec<f64>,
    /// `||sum alpha_j w_j|| / ||w_newest||`.
    pub gain: f64,
    /// Number of history entries dropped by the rank guard.
    pub dropped: usize,
}

/// One Anderson step from the iterates `x_j` and residuals `w_j = g(x_j) -
/// x_j`, both oldest first and of equal length `m_k + 1`:
/// `x_next = sum alpha_j x_j + damping * sum alpha_j w_j` with weights summing
/// to one that minimize `||sum alpha_j w_j||`.
pub fn anderson_general(
    iterates: &[Vec<f64>],
    residuals: &[Vec<f64>],
    damping: f64,
    inner: &dyn Fn(&[f64], &[f64]) -> f64,
) -> Result<AndersonUpdate> {
    if iterates.is_empty() || iterates.len() != residuals.len() {
        return Err(NseError::InvalidArgument(
            "Anderson history needs matching, nonempty iterate and residual lists".into(),
        ));
    }
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(NseError::InvalidArgument(format!("damping {damping} outside (0, 1]")));
    }
    let n = iterates[0].len();
    if iterates.iter().chain(residuals).any(|v| v.len() != n) {
        return Err(NseError::Dimension("Anderson history vectors differ in length".into()));
    }

    let mut start = 0;
    let gammas = loop {
        let hist = &residuals[start..];
        match least_squares(hist, inner) {
            Some(g) => break g,
            None => start += 1,
        }
    };
    let used = residuals.len() - start;
    // gamma_i multiplies w_{i+1} - w_i; convert to affine weights
    let mut weights = vec![0.0; used];
    for i in 0..used {
        let gi = if i + 1 < used { gammas[i] } else { 1.0 };
        let gprev = if i > 0 { gammas[i - 1] } else { 0.0 };
        weights[i] = gi - gprev;
    }
    let mut next = vec![0.0; n];
    let mut combo = vec![0.0; n];
    for (j, &a) in weights.iter().enumerate() {
        let x = &iterates[start + j];
        let w = &residuals[start + j];
        for i in 0..n {
            combo[i] += a * w[i];
            next[i] += a * x[i];
        }
    }
    for i in 0..n {
        next[i] += damping * combo[i];
    }
    let newest = residuals.last().unwrap();
    let denom = inner(newest, newest).max(0.0).sqrt();
    let gain = if denom > 0.0 {
        inner(&combo, &combo).max(0.0).sqrt() / denom
    } else {
        0.0
    };
    Ok(AndersonUpdate {
        next,
        weights,
        gain,
        dropped: start,
    })
}

/// Minimizes `||w_n - sum gamma_i (w_{i+1} - w_i)||` by Cholesky on the normal
/// equations; `None` when a pivot is numerically zero.
fn least_squares(hist: &[Vec<f64>], inner: &dyn Fn(&[f64], &[f64]) -> f64) -> Option<Vec<f64>> {
    let k = hist.len() - 1;
    if k == 0 {
        return Some(Vec::new());
    }
    let diffs: Vec<Vec<f64>> = (0..k).map(|i| sub(&hist[i + 1], &hist[i])).collect();
    let newest = &hist[k];
    let mut g = vec![vec![0.0; k]; k];
    let mut b = vec![0.0; k];
    for i in 0..k {
        for j in 0..=i {
            let v = inner(&diffs[i], &diffs[j]);
            g[i][j] = v;
            g[j][i] = v;
        }
        b[i] = inner(&diffs[i], newest);
    }
    let scale = inner(newest, newest).max(g.iter().enumerate().map(|(i, r)| r[i]).fold(0.0, f64::max));
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    // in-place Cholesky
    let mut l = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = g[i][j];
            for p in 0..j {
                s -= l[i][p] * l[j][p];
            }
            if i == j {
                if !(s > RANK_TOL * g[i][i].max(DEGENERATE_TOL * scale)) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; k];
    for i in 0..k {
        let mut s = b[i];
        for p in 0..i {
            s -= l[i][p] * y[p];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = y[i];
        for p in i + 1..k {
            s -= l[p][i] * x[p];
        }
        x[i] = s / l[i][i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
