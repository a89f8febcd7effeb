//! Number formatting shared by the CSV writers.

/// Decimal rendering with 9 significant digits; scientific notation outside
/// `1e-5 ..= 1e15`. Zero (of either sign) renders as `0`.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&exp) {
        return format!("{x:.8e}");
    }
    let decimals = (8 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding may carry into a new leading digit (9.9999999996 -> 10.00000000)
    match s.parse::<f64>() {
        Ok(v) if v.abs() >= 10f64.powi(exp + 1) && decimals > 0 => format!("{x:.prec$}", prec = decimals - 1),
        _ => s,
    }
}

#[cfg(test)]
mod tests {
    use super::sig9;

    #[test]
    fn renders_nine_significant_digits() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(-0.0), "0");
        assert_eq!(sig9(1.0), "1.00000000");
        assert_eq!(sig9(0.123456789123), "0.123456789");
        assert_eq!(sig9(-1234.56789123), "-1234.56789");
        assert_eq!(sig9(9.9999999996), "10.0000000");
        assert_eq!(sig9(1.5e-9), "1.50000000e-9");
        assert_eq!(sig9(f64::NAN), "NaN");
    }

    #[test]
    fn reparse_is_stable() {
        for x in [0.1, 1.0 / 3.0, 2.0f64.sqrt() * 1e6, -7.25e-4, 6.02e23] {
            let s = sig9(x);
            assert_eq!(sig9(s.parse().unwrap()), s);
        }
    }
}
