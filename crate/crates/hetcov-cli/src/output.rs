//! Output-file conventions shared by the commands: where files go by default
//! and how CSV numbers are formatted.

use std::env;
use std::path::PathBuf;

/// Environment variable naming the default output directory. `--out` wins
/// over it; without either, files land in the working directory.
pub const OUT_DIR_ENV: &str = "HETCOV_OUT_DIR";

/// Default output directory: `$HETCOV_OUT_DIR` if set, else `.`.
pub fn default_out_dir() -> PathBuf {
    env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Formats a value for CSV: 6 significant digits, '.' decimal separator, no
/// exponent notation, no digit grouping. JSON outputs are never routed
/// through this — they keep full precision.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0.00000".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = 5 - magnitude;
    if decimals <= 0 {
        // All six significant digits sit left of the decimal point; round in
        // units of the trailing places and print as an integer.
        let unit = 10f64.powi(-decimals);
        format!("{:.0}", (x / unit).round() * unit)
    } else {
        format!("{x:.0$}", decimals as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // [TRIVIAL: formatting contract — 6 significant digits across magnitudes]
    #[test]
    fn fmt_sig_keeps_six_significant_digits() {
        assert_eq!(fmt_sig(1.2345649), "1.23456");
        assert_eq!(fmt_sig(0.012345678), "0.0123457");
        assert_eq!(fmt_sig(123456.49), "123456");
        assert_eq!(fmt_sig(12345678.0), "12345700");
        assert_eq!(fmt_sig(-9.87654321), "-9.87654");
        assert_eq!(fmt_sig(0.0), "0.00000");
        assert_eq!(fmt_sig(100.0), "100.000");
    }

    // [TRIVIAL: no exponent or grouping characters ever appear]
    #[test]
    fn fmt_sig_is_plain_decimal() {
        for &x in &[1e-7, 3.25e9, 42.0, 0.5, 999999.9] {
            let s = fmt_sig(x);
            assert!(!s.contains('e') && !s.contains('E') && !s.contains(','), "{s}");
        }
    }
}
