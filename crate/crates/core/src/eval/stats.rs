//! Binomial confidence bounds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Two-sided 95% normal quantile, Phi^-1(0.975).
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid counts: {successes} successes out of {n}")]
pub struct InvalidCounts {
    pub successes: u64,
    pub n: u64,
}

/// Wilson score interval for `successes` out of `n`.
///
/// See <https://www.itl.nist.gov/div898/handbook/prc/section2/prc241.htm>.
/// When every trial succeeds the lower bound is `n / (n + z^2)` and the
/// upper bound is exactly 1.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> Result<Interval, InvalidCounts> {
    if n == 0 || successes > n {
        return Err(InvalidCounts { successes, n });
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = p + z2 / (2.0 * nf);
    let spread = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let mut lower = ((centre - spread) / denom).max(0.0);
    let mut upper = ((centre + spread) / denom).min(1.0);
    // pin the degenerate ends exactly
    if successes == n {
        lower = nf / (nf + z2);
        upper = 1.0;
    }
    if successes == 0 {
        lower = 0.0;
        upper = z2 / (nf + z2);
    }
    Ok(Interval { lower, upper })
}

/// Clopper-Pearson exact lower bound when all `n` trials succeed:
/// `(alpha / 2)^(1/n)`.
pub fn clopper_pearson_lower_all_success(n: u64, alpha: f64) -> f64 {
    (alpha / 2.0).powf(1.0 / n as f64)
}
