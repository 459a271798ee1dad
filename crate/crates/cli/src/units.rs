//! Parsing and formatting of values with unit suffixes.
//!
//! Rates are stored as decimal fractions and always written with a unit:
//! `5%` or `500bp`. Maturities are in years, optionally suffixed `y`.

use crate::error::CliError;

fn number(key: &str, text: &str) -> Result<f64, CliError> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| CliError::usage(key, format!("'{text}' is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::usage(key, format!("'{text}' is not finite")))
    }
}

/// `"5%"` → 0.05, `"136bp"` → 0.0136. A bare number is rejected.
///
/// The unit is applied as a shift of the decimal exponent before parsing,
/// so the result is the correctly rounded value of the written decimal.
pub fn parse_rate(key: &str, text: &str) -> Result<f64, CliError> {
    let t = text.trim();
    let (digits, shift) = if let Some(v) = t.strip_suffix('%') {
        (v, 2)
    } else if let Some(v) = t.strip_suffix("bp") {
        (v, 4)
    } else {
        return Err(CliError::usage(
            key,
            format!("rate '{text}' needs a unit suffix: % or bp"),
        ));
    };
    number(key, digits)?;
    let (mantissa, exponent) = match digits.trim().split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| CliError::usage(key, format!("bad exponent in '{text}'")))?),
        None => (digits.trim(), 0),
    };
    number(key, &format!("{mantissa}e{}", exponent - shift))
}

/// `"20"` or `"20y"` → 20.0.
pub fn parse_years(key: &str, text: &str) -> Result<f64, CliError> {
    let t = text.trim();
    number(key, t.strip_suffix('y').unwrap_or(t))
}

/// Non-negative integer; accepts exact scientific forms such as `2e6`.
pub fn parse_count(key: &str, text: &str) -> Result<u64, CliError> {
    let t = text.trim();
    if let Ok(v) = t.parse::<u64>() {
        return Ok(v);
    }
    let v = number(key, t)?;
    if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(53) {
        Ok(v as u64)
    } else {
        Err(CliError::usage(key, format!("'{text}' is not a non-negative integer")))
    }
}

/// Moves the decimal point of a plain decimal string `places` to the right.
fn shift_point(plain: &str, places: usize) -> String {
    let (sign, body) = match plain.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", plain),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let mut frac = frac.to_string();
    while frac.len() < places {
        frac.push('0');
    }
    let (moved, rest) = frac.split_at(places);
    let int = format!("{int}{moved}");
    let int = int.trim_start_matches('0');
    let int = if int.is_empty() { "0" } else { int };
    if rest.is_empty() {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{rest}")
    }
}

/// Shortest string that parses back to exactly `value`, in percent.
pub fn format_percent(value: f64) -> String {
    format!("{}%", shift_point(&value.to_string(), 2))
}

/// Shortest string that parses back to exactly `value`, in basis points.
pub fn format_bp(value: f64) -> String {
    format!("{}bp", shift_point(&value.to_string(), 4))
}

pub fn format_years(value: f64) -> String {
    format!("{value}y")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rates_need_units() {
        assert_eq!(parse_rate("g", "5%").unwrap(), 0.05);
        assert_eq!(parse_rate("alpha", "136bp").unwrap(), 0.0136);
        assert_eq!(parse_rate("alpha", "0bp").unwrap(), 0.0);
        assert_eq!(parse_rate("r", " 2.5% ").unwrap(), 0.025);
        let err = parse_rate("sigma", "20").unwrap_err();
        assert!(err.to_string().starts_with("sigma:"), "{err}");
        assert!(parse_rate("sigma", "x%").is_err());
        assert!(parse_rate("sigma", "inf%").is_err());
    }

    #[test]
    fn years_and_counts() {
        assert_eq!(parse_years("T", "20").unwrap(), 20.0);
        assert_eq!(parse_years("T", "6.5y").unwrap(), 6.5);
        assert_eq!(parse_count("paths", "2e6").unwrap(), 2_000_000);
        assert_eq!(parse_count("M", "400").unwrap(), 400);
        assert!(parse_count("M", "40.5").is_err());
        assert!(parse_count("M", "-4").is_err());
    }

    #[test]
    fn formats_are_short() {
        assert_eq!(format_percent(0.05), "5%");
        assert_eq!(format_percent(0.07), "7%");
        assert_eq!(format_percent(0.125), "12.5%");
        assert_eq!(format_bp(0.0136), "136bp");
        assert_eq!(format_years(20.0), "20y");
        assert_eq!(format_percent(-0.01), "-1%");
        assert_eq!(format_bp(1e-7), "0.001bp");
        assert_eq!(format_percent(1.0), "100%");
        assert_eq!(parse_rate("r", "-1%").unwrap(), -0.01);
        assert_eq!(parse_rate("r", "1.5e1bp").unwrap(), 0.0015);
    }

    proptest! {
        #[test]
        fn percent_round_trips(v in 0.0f64..2.0) {
            let s = format_percent(v);
            prop_assert_eq!(parse_rate("x", &s).unwrap(), v);
        }

        #[test]
        fn bp_round_trips(v in 0.0f64..0.5) {
            let s = format_bp(v);
            prop_assert_eq!(parse_rate("x", &s).unwrap(), v);
        }

        #[test]
        fn years_round_trip(v in 0.01f64..100.0) {
            let s = format_years(v);
            prop_assert_eq!(parse_years("T", &s).unwrap(), v);
        }
    }
}
