//! Number formatting shared by the CSV and JSON writers.

/// Significant digits kept in reports and exported tables.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits. Non-finite values
/// pass through unchanged.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Shortest decimal text that reads back as `round_sig(x)`.
pub fn fmt_number(x: f64) -> String {
    let r = round_sig(x);
    if r.is_finite() {
        let plain = format!("{r}");
        let sci = format!("{r:e}");
        if plain.len() <= sci.len() {
            plain
        } else {
            sci
        }
    } else if r.is_nan() {
        "NaN".into()
    } else if r > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_twelve_digits() {
        assert_eq!(round_sig(1.234_567_890_123_456), 1.234_567_890_12);
        assert_eq!(round_sig(-9.876_543_210_987_6e-20), -9.876_543_210_99e-20);
        assert_eq!(round_sig(0.0), 0.0);
        assert!(round_sig(f64::NAN).is_nan());
    }

    #[test]
    fn text_round_trips() {
        for x in [1e-30, 3.5, 123456.789, -2.5e12, 6.642156e-26] {
            let s = fmt_number(x);
            assert_eq!(s.parse::<f64>().unwrap(), round_sig(x), "{s}");
        }
        assert_eq!(fmt_number(f64::INFINITY), "inf");
    }
}
