//! Exact half-up decimal rounding over integer count ratios.
//!
//! Reported tables round factors half-up to two decimal places as
//! percentages and change rates to four decimal places. Doing this in
//! integer arithmetic keeps the display layer bit-reproducible instead of
//! depending on binary float rounding.

/// `num/den` as a percentage rounded half-up to 2 decimals, in
/// centi-percent units (2.31% -> 231). Returns None when `den` is zero.
pub fn pct2(num: u64, den: u64) -> Option<i64> {
    if den == 0 {
        return None;
    }
    let n = (num as i128) * 10_000;
    let d = den as i128;
    Some(((2 * n + d) / (2 * d)) as i64)
}

/// Ratio of two centi-percent values rounded half-up to 4 decimals, in
/// 1e-4 units (1.3117 -> 13117). None when the denominator is zero.
pub fn ratio4(num_c: i64, den_c: i64) -> Option<i64> {
    if den_c == 0 {
        return None;
    }
    let n = (num_c as i128) * 10_000;
    let d = den_c as i128;
    Some(((2 * n + d) / (2 * d)) as i64)
}

/// Renders centi-percent units as the printed two-decimal string.
pub fn fmt_pct2(c: i64) -> String {
    format!("{}.{:02}", c / 100, (c % 100).abs())
}

/// Renders 1e-4 units as the printed four-decimal string.
pub fn fmt_ratio4(r: i64) -> String {
    format!("{}.{:04}", r / 10_000, (r % 10_000).abs())
}
