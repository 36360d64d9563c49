//! C `printf`-style float formatting (`%.Ne`), used by the text exports.

/// Formats like C's `%.{precision}e`: `-1.234500e+00`, `1.0e-120`.
pub fn c_exp(value: f64, precision: usize) -> String {
    if !value.is_finite() {
        return if value.is_nan() {
            "nan".to_string()
        } else if value > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let s = format!("{value:.precision$e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

#[cfg(test)]
mod tests {
    use super::c_exp;

    #[test]
    fn matches_printf() {
        assert_eq!(c_exp(1.0, 9), "1.000000000e+00");
        assert_eq!(c_exp(-0.00123, 3), "-1.230e-03");
        assert_eq!(c_exp(0.0, 2), "0.00e+00");
        assert_eq!(c_exp(6.02e123, 1), "6.0e+123");
        assert_eq!(c_exp(f64::NAN, 3), "nan");
    }
}
