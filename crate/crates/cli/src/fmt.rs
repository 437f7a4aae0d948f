//! Deterministic numeric formatting for command output.

/// Formats `v` with `digits` significant digits in plain decimal,
/// switching to scientific notation only for extreme magnitudes.
pub fn format_significant(v: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if v == 0.0 {
        return format!("{:.*}", digits - 1, 0.0);
    }
    if !v.is_finite() {
        return v.to_string();
    }
    // exact decimal exponent via the formatter itself
    let sci = format!("{:e}", v.abs());
    let exp: i32 = sci
        .split('e')
        .nth(1)
        .expect("scientific form has an exponent")
        .parse()
        .expect("exponent parses");
    if exp < -4 || exp >= digits as i32 {
        format!("{:.*e}", digits - 1, v)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    }
}

#[cfg(test)]
mod tests {
    use super::format_significant;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_significant(3.0, 12), "3.00000000000");
        assert_eq!(format_significant(0.125, 12), "0.125000000000");
        assert_eq!(
            format_significant(1234.56789, 12),
            "1234.56789000"
        );
        assert_eq!(format_significant(0.0, 12), "0.00000000000");
    }

    #[test]
    fn extreme_magnitudes_go_scientific() {
        assert_eq!(format_significant(1.5e-7, 3), "1.50e-7");
        assert_eq!(format_significant(1e15, 3), "1.00e15");
    }

    #[test]
    fn round_trips_close_enough() {
        let v = 0.123456789012345;
        let s = format_significant(v, 12);
        let back: f64 = s.parse().unwrap();
        assert!((back - v).abs() < 1e-12);
    }
}
