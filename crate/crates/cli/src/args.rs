//! Value parsers for command-line flags.

use std::f64::consts::PI;

/// A positive count, written as an integer or in exponent form (`100000`, `1e5`, `2.5e3`).
pub fn parse_count(s: &str) -> Result<u64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("not a count: {s:?}"))?;
    if !(v >= 1.0 && v.fract() == 0.0 && v <= 9.007_199_254_740_992e15) {
        return Err(format!("count must be a whole number >= 1, got {s:?}"));
    }
    Ok(v as u64)
}

/// An angle in radians; a trailing `pi` multiplies by π (`0.3pi`, `pi/3`, `1.2`).
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase();
    let bad = || format!("not an angle: {s:?} (use radians, e.g. 0.94, or 0.3pi, pi/3)");
    let v = if let Some(rest) = t.strip_prefix("pi/") {
        let d: f64 = rest.parse().map_err(|_| bad())?;
        PI / d
    } else if let Some(head) = t.strip_suffix("pi") {
        let head = head.trim_end_matches('*');
        if head.is_empty() {
            PI
        } else {
            head.parse::<f64>().map_err(|_| bad())? * PI
        }
    } else {
        t.parse().map_err(|_| bad())?
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

/// A finite floating-point value.
pub fn parse_float(s: &str) -> Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("not a finite number: {s:?}"))
}
