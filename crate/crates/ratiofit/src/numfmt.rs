//! Round-trip-exact decimal formatting for file outputs.
//!
//! All floating-point text written by this crate (traces, metrics, score
//! files) goes through [`fmt_f64`], which renders 17 significant digits in
//! scientific notation. 17 digits are sufficient to reproduce any IEEE-754
//! double exactly on parse, so outputs can be compared bitwise across
//! implementations after a decimal round trip.

/// Format with 17 significant digits (1 before the point, 16 after).
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_exactly() {
        let values = [
            0.0,
            -0.0,
            1.0,
            std::f64::consts::PI,
            1e-300,
            -2.2250738585072014e-308,
            f64::MAX,
            0.1 + 0.2,
        ];
        for &v in &values {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v} -> {s}");
        }
    }

    #[test]
    fn specials() {
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
    }
}
