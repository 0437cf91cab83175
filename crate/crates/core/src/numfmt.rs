/// Formats `v` with six significant digits in plain decimal notation,
/// falling back to scientific notation for very large or very small
/// magnitudes. Used for every number written to CSV.
pub fn sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    // Let the scientific formatter do the rounding, then read back the
    // exponent so that values like 9.9999996 become "10.0000".
    let sci = format!("{v:.5e}");
    let exp: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    if !(-4..6).contains(&exp) {
        return sci;
    }
    let decimals = (5 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::sig6;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(-0.0), "0");
        assert_eq!(sig6(1.0), "1.00000");
        assert_eq!(sig6(2.385860741), "2.38586");
        assert_eq!(sig6(-38.98774), "-38.9877");
        assert_eq!(sig6(0.001234567), "0.00123457");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(9.9999996), "10.0000");
        assert_eq!(sig6(1.5e-7), "1.50000e-7");
        assert_eq!(sig6(3.0e9), "3.00000e9");
    }
}
