//! Text formatting of reals for CSV and sample dumps.

/// Formats `x` with `sig` significant digits, trimming trailing zeros,
/// choosing fixed or scientific notation the way `%g` does.
///
/// Infinities become the literal tokens `inf` / `-inf`; those are the
/// spellings the CSV writers and the config parser agree on.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    assert!(sig >= 1);
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    // Round to `sig` digits first; the exponent of the rounded value decides
    // the presentation (9.9999e2 must print as 1000, not 999.99...).
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp_str) = sci.split_once('e').expect("scientific form");
    let exp: i32 = exp_str.parse().expect("exponent");
    if exp >= -4 && (exp as i64) < sig as i64 {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let m = trim_zeros(mantissa.to_string());
        format!("{m}e{exp}")
    }
}

/// Nine significant digits, the precision used throughout the CSV outputs.
pub fn fmt_sig9(x: f64) -> String {
    fmt_sig(x, 9)
}

fn trim_zeros(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integers_print_bare() {
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(-0.0), "0");
        assert_eq!(fmt_sig9(20.0), "20");
        assert_eq!(fmt_sig9(-5.0), "-5");
        assert_eq!(fmt_sig9(1000.0), "1000");
    }

    #[test]
    fn infinities_use_literal_tokens() {
        assert_eq!(fmt_sig9(f64::INFINITY), "inf");
        assert_eq!(fmt_sig9(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn nine_significant_digits_are_kept() {
        assert_eq!(fmt_sig9(0.158655254), "0.158655254");
        assert_eq!(fmt_sig9(29901.6788), "29901.6788");
        assert_eq!(fmt_sig9(1.23456789012e-7), "1.23456789e-7");
        assert_eq!(fmt_sig9(123456789.0), "123456789");
        assert_eq!(fmt_sig9(1234567891.0), "1.23456789e9");
    }

    #[test]
    fn rounding_across_power_of_ten() {
        assert_eq!(fmt_sig(999.999999, 6), "1000");
        assert_eq!(fmt_sig(0.0999999999, 3), "0.1");
    }

    #[test]
    fn round_trip_parses_close() {
        for &x in &[3.14159265358979, -2.51e-3, 6.02e23, 1.0 / 3.0] {
            let s = fmt_sig9(x);
            let back: f64 = s.parse().unwrap();
            assert!((back - x).abs() <= x.abs() * 1e-8, "{x} -> {s} -> {back}");
        }
    }
}
