//! Seeded random streams and the bounded samplers built on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Draws rejected before [`sample_truncated_gaussian`] gives up and clamps.
pub const MAX_REJECTIONS: usize = 1000;

/// Standard deviation of the measurement noise added to continuous draws.
pub const NOISE_SIGMA: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid truncated gaussian: mu={mu}, sigma={sigma}, bounds=[{lower}, {upper}]")]
pub struct InvalidBounds {
    pub mu: f64,
    pub sigma: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Independent stream for `(seed, case_id, purpose)`. Streams do not depend
/// on the order in which cases are visited.
pub fn substream(seed: u64, case_id: &str, purpose: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update([0]);
    h.update(case_id.as_bytes());
    h.update([0]);
    h.update(purpose.as_bytes());
    let digest: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(digest)
}

/// One draw from `N(mu, sigma^2)` restricted to `[lower, upper]`.
///
/// Rejection sampling; after [`MAX_REJECTIONS`] misses the result is `mu`
/// clamped into the interval.
pub fn sample_truncated_gaussian<R: Rng + ?Sized>(
    mu: f64,
    sigma: f64,
    lower: f64,
    upper: f64,
    rng: &mut R,
) -> Result<f64, InvalidBounds> {
    let invalid = || InvalidBounds { mu, sigma, lower, upper };
    if !(lower < upper && sigma > 0.0 && mu.is_finite() && sigma.is_finite()) {
        return Err(invalid());
    }
    let normal = Normal::new(mu, sigma).map_err(|_| invalid())?;
    for _ in 0..MAX_REJECTIONS {
        let x = normal.sample(rng);
        if (lower..=upper).contains(&x) {
            return Ok(x);
        }
    }
    Ok(mu.clamp(lower, upper))
}

/// Additive measurement noise `N(0, 0.25^2)`.
pub fn measurement_noise<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Normal::new(0.0, NOISE_SIGMA).expect("constant sigma").sample(rng)
}
