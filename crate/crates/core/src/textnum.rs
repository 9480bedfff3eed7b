//! Decimal text encoding of `f64` used by the canonical sequence format and
//! the model bundle. 17 significant digits round-trip every finite double
//! bit-exactly through `str::parse`.

use crate::error::{Error, Result};

/// Format a finite `f64` with 17 significant digits.
#[cfg(test)]
pub(crate) fn fmt_f64(v: f64) -> String {
    debug_assert!(v.is_finite());
    format!("{v:.16e}")
}

pub(crate) fn write_f64(out: &mut String, v: f64, what: &'static str) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::NonFiniteSerialize(what));
    }
    use std::fmt::Write;
    write!(out, "{v:.16e}").expect("write to String");
    Ok(())
}

pub(crate) fn parse_f64(token: &str) -> std::result::Result<f64, String> {
    token
        .parse::<f64>()
        .map_err(|_| format!("'{token}' is not a decimal number"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let cases = [
            0.0,
            -0.0,
            1.0,
            2.0 / 3.0,
            -1.2345678901234567e-300,
            f64::MAX,
            f64::MIN_POSITIVE,
            std::f64::consts::PI,
        ];
        for v in cases {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v.to_bits(), back.to_bits(), "{v} -> {s}");
        }
    }

    #[test]
    fn at_least_nine_significant_digits() {
        let s = fmt_f64(0.5);
        let digits = s.chars().filter(|c| c.is_ascii_digit()).count();
        assert!(digits >= 9, "{s}");
    }
}
