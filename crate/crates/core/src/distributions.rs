//! Seedable random variates for the five families used by the channel model:
//! normal, Rician, Laplacian, exponential and uniform.
//!
//! Every stochastic draw in the crate goes through an [`RngStream`]. A stream
//! is identified by a root seed plus a derivation path, so a cluster or a
//! single MPC can own its own independent stream: adding components to one
//! cluster never shifts the draws of another.

use std::f64::consts::TAU;

use rand::distr::Open01;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn derive_key(parent: u64, index: u64) -> u64 {
    mix64(parent ^ mix64(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// A reproducible random stream addressed by `(seed, path)`.
///
/// The underlying generator is ChaCha8 keyed by a hash of the seed and path.
/// Children are derived from the key, not from the stream state, so
/// `stream.child(i)` is the same regardless of how many variates the parent
/// has already produced.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    path: Vec<u64>,
    key: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::from_parts(seed, Vec::new())
    }

    pub fn from_path(seed: u64, path: &[u64]) -> Self {
        Self::from_parts(seed, path.to_vec())
    }

    fn from_parts(seed: u64, path: Vec<u64>) -> Self {
        let key = path.iter().fold(mix64(seed), |k, &p| derive_key(k, p));
        Self::keyed(seed, path, key)
    }

    fn keyed(seed: u64, path: Vec<u64>, key: u64) -> Self {
        let mut bytes = [0u8; 32];
        for (i, chunk) in bytes.chunks_mut(8).enumerate() {
            chunk
                .copy_from_slice(&mix64(key ^ (i as u64).wrapping_mul(GOLDEN_GAMMA)).to_le_bytes());
        }
        RngStream {
            seed,
            path,
            key,
            rng: ChaCha8Rng::from_seed(bytes),
        }
    }

    /// Independent sub-stream at `path ++ [index]`.
    pub fn child(&self, index: u64) -> Self {
        let mut path = self.path.clone();
        path.push(index);
        Self::keyed(self.seed, path, derive_key(self.key, index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Parameter(what()))
    }
}

/// `Normal(mu, sigma^2)`.
pub fn sample_normal<R: Rng + ?Sized>(rng: &mut R, mu: f64, sigma: f64) -> Result<f64> {
    check(mu.is_finite() && sigma >= 0.0 && sigma.is_finite(), || {
        format!("normal requires finite mu and sigma >= 0 (mu={mu}, sigma={sigma})")
    })?;
    if sigma == 0.0 {
        return Ok(mu);
    }
    let z: f64 = rng.sample(StandardNormal);
    Ok(mu + sigma * z)
}

/// `Rician(s, sigma)`, built as `sqrt(Y^2 + Z^2)` with `Y ~ N(s, sigma^2)` and
/// `Z ~ N(0, sigma^2)`.
///
/// Two normal draws are consumed even when `sigma == 0` is detected, except
/// in that degenerate case the result is exactly `s`.
pub fn sample_rician<R: Rng + ?Sized>(rng: &mut R, s: f64, sigma: f64) -> Result<f64> {
    check(
        s >= 0.0 && s.is_finite() && sigma >= 0.0 && sigma.is_finite(),
        || format!("rician requires s >= 0 and sigma >= 0 (s={s}, sigma={sigma})"),
    )?;
    if sigma == 0.0 {
        return Ok(s);
    }
    let y = sample_normal(rng, s, sigma)?;
    let z = sample_normal(rng, 0.0, sigma)?;
    Ok(y.hypot(z))
}

/// Laplacian with mean `mu` and variance `variance` (scale `sqrt(variance / 2)`),
/// sampled by inverting the CDF.
pub fn sample_laplacian<R: Rng + ?Sized>(rng: &mut R, mu: f64, variance: f64) -> Result<f64> {
    check(
        mu.is_finite() && variance >= 0.0 && variance.is_finite(),
        || format!("laplacian requires finite mu and variance >= 0 (mu={mu}, variance={variance})"),
    )?;
    if variance == 0.0 {
        return Ok(mu);
    }
    let b = (variance / 2.0).sqrt();
    let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
    Ok(mu - b * u.signum() * (1.0 - 2.0 * u.abs()).ln())
}

/// `Exp(lambda)` with mean `1 / lambda`, by inverse CDF. Always strictly positive.
pub fn sample_exponential<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> Result<f64> {
    check(lambda > 0.0 && lambda.is_finite(), || {
        format!("exponential requires lambda > 0 (lambda={lambda})")
    })?;
    let u: f64 = rng.sample(Open01);
    Ok(-u.ln() / lambda)
}

/// Uniform on the closed interval `[a, b]`.
pub fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> Result<f64> {
    check(a.is_finite() && b.is_finite() && a <= b, || {
        format!("uniform requires finite a <= b (a={a}, b={b})")
    })?;
    if a == b {
        return Ok(a);
    }
    Ok(rng.random_range(a..=b))
}

/// Phase uniform on `[0, 2*pi)`.
pub fn sample_phase<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let phi = rng.random::<f64>() * TAU;
    if phi >= TAU {
        0.0
    } else {
        phi
    }
}
