use crate::error::{NseError, Result};

/// Residuals at or below this are ignored by the order fit.
const FLOOR: f64 = 1e-12;

/// Least-squares slope of `log r_{k+1}` against `log r_k` over the last
/// `tail` residuals above the floor.
pub fn estimate_order(residuals: &[f64], tail: usize) -> Result<f64> {
    let usable: Vec<f64> = residuals
        .iter()
        .copied()
        .filter(|r| r.is_finite() && *r > FLOOR)
        .collect();
    let start = usable.len().saturating_sub(tail);
    let window = &usable[start..];
    let pairs = window.len().saturating_sub(1);
    if pairs < 3 {
        return Err(NseError::InsufficientData { usable: pairs });
    }
    let xs: Vec<f64> = window[..pairs].iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = window[1..].iter().map(|r| r.ln()).collect();
    let n = pairs as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(NseError::InsufficientData { usable: pairs });
    }
    let slope = sxy / sxx;
    if !slope.is_finite() {
        return Err(NseError::InsufficientData { usable: pairs });
    }
    Ok(slope)
}
