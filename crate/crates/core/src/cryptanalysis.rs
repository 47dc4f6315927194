//! Trail-probability bounds, avalanche measurement and a monobit count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chaos::ChaosParams;
use crate::error::{Error, Result};
use crate::keyschedule::keystream;
use crate::kgm::{Kgm, SecretKey, MAX_SECRET_CHARS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrailParams {
    pub active_count: u32,
    /// log2 of the best single-box probability; must be negative.
    pub per_box_log2: f64,
}

impl TrailParams {
    pub fn new(active_count: u32, per_box_log2: f64) -> Result<Self> {
        if active_count == 0 {
            return Err(Error::Domain("active count must be at least 1".into()));
        }
        if !(per_box_log2 < 0.0) {
            return Err(Error::Domain(format!(
                "per-box log2 probability {per_box_log2} must be negative"
            )));
        }
        Ok(Self {
            active_count,
            per_box_log2,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrailBound {
    pub log2: f64,
    /// `log2` truncated toward zero; how the published bounds are quoted
    /// (2^-79.526 is written 2^-79).
    pub exponent: i64,
}

/// `active_count × per_box_log2`.
pub fn trail_bound(p: &TrailParams) -> Result<TrailBound> {
    let p = TrailParams::new(p.active_count, p.per_box_log2)?;
    let log2 = f64::from(p.active_count) * p.per_box_log2;
    Ok(TrailBound {
        log2,
        exponent: log2.trunc() as i64,
    })
}

pub fn hamming_distance(a: &[u8], b: &[u8]) -> u64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| u64::from((x ^ y).count_ones()))
        .sum()
}

/// Fraction of differing bits between two equal-length streams.
pub fn flip_fraction(a: &[u8], b: &[u8]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Domain(format!(
            "stream lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(hamming_distance(a, b) as f64 / (a.len() as f64 * 8.0))
}

pub fn monobit(stream: &[u8]) -> Result<f64> {
    if stream.is_empty() {
        return Err(Error::EmptyInput);
    }
    let ones: u64 = stream.iter().map(|b| u64::from(b.count_ones())).sum();
    Ok(ones as f64 / (stream.len() as f64 * 8.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AvalancheReport {
    pub trials: usize,
    pub stream_len: usize,
    pub mean_flip_fraction: f64,
    pub min_flip_fraction: f64,
    pub max_flip_fraction: f64,
}

impl AvalancheReport {
    fn from_fractions(fractions: &[f64], stream_len: usize) -> Self {
        let trials = fractions.len();
        let mean = fractions.iter().sum::<f64>() / trials as f64;
        let min = fractions.iter().copied().fold(f64::INFINITY, f64::min);
        let max = fractions.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            trials,
            stream_len,
            // Summation rounding can nudge the mean just outside [min, max].
            mean_flip_fraction: mean.clamp(min, max),
            min_flip_fraction: min,
            max_flip_fraction: max,
        }
    }
}

/// Flips bit `bit` of the secret's UTF-8 encoding. Invalid sequences decode
/// to U+FFFD, which is not in the matrix alphabet.
pub fn flip_secret_bit(secret: &SecretKey, bit: usize) -> Result<SecretKey> {
    let mut bytes = secret.as_str().as_bytes().to_vec();
    let total = bytes.len() * 8;
    if bit >= total {
        return Err(Error::Domain(format!("bit {bit} outside {total}-bit secret")));
    }
    bytes[bit / 8] ^= 0x80 >> (bit % 8);
    let text: String = String::from_utf8_lossy(&bytes)
        .chars()
        .take(MAX_SECRET_CHARS)
        .collect();
    SecretKey::new(text)
}

/// Each trial flips one uniformly chosen bit of the secret and compares the
/// two keystreams of length `3 × |secret|`.
pub fn avalanche(
    secret: &SecretKey,
    trials: usize,
    params: &ChaosParams,
    m: &Kgm,
    rng_seed: u64,
) -> Result<AvalancheReport> {
    if trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    let len = 3 * secret.char_len();
    let reference = keystream(secret, len, params, m)?.bytes;
    let bits = secret.as_str().len() * 8;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    let mut fractions = Vec::with_capacity(trials);
    for _ in 0..trials {
        let flipped = flip_secret_bit(secret, rng.gen_range(0..bits))?;
        let other = keystream(&flipped, len, params, m)?.bytes;
        fractions.push(flip_fraction(&reference, &other)?);
    }
    Ok(AvalancheReport::from_fractions(&fractions, len))
}
