//! Logistic map and the per-cycle initial condition.
//!
//! Cycle `c` reads nine bytes of the first key starting at offset `3c`
//! (all offsets wrap around the key):
//!
//! ```text
//! x01 = (B[3c] + B[3c+1] + B[3c+2]) / 2^24
//! x02 = (B[3c+3] + .. + B[3c+8]) / 96
//! x0  = (x01 + x02) mod 1
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kgm::FirstKey;

pub const DEFAULT_R: f64 = 3.9999;
pub const HARDENED_ITERATIONS: u32 = 16;
pub const MIN_FIRST_KEY_BYTES: usize = 9;

const X01_WINDOW: usize = 3;
const X02_WINDOW: usize = 6;
const X01_SCALE: f64 = (1u32 << 24) as f64;
const X02_SCALE: f64 = 96.0;
/// Extra map steps after absorbing the whole key in diffusion mode.
const DIFFUSION_ROUNDS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChaosParams {
    pub r: f64,
    /// Map steps applied to each cycle's seed before quantization.
    pub iterations: u32,
    /// Fold a chaotic digest of the whole first key into every cycle's seed.
    pub key_diffusion: bool,
}

impl Default for ChaosParams {
    fn default() -> Self {
        Self::literal()
    }
}

impl ChaosParams {
    /// No iteration, no diffusion: each keystream byte depends only on the
    /// nine first-key bytes in its window.
    pub fn literal() -> Self {
        Self {
            r: DEFAULT_R,
            iterations: 0,
            key_diffusion: false,
        }
    }

    pub fn hardened() -> Self {
        Self {
            r: DEFAULT_R,
            iterations: HARDENED_ITERATIONS,
            key_diffusion: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=4.0).contains(&self.r) {
            return Err(Error::Domain(format!("r = {} is outside [0, 4]", self.r)));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn step(x: f64, r: f64) -> f64 {
    r * x * (1.0 - x)
}

#[inline]
fn frac(x: f64) -> f64 {
    x - x.floor()
}

pub fn logistic_step(x: f64, r: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} is outside [0, 1]")));
    }
    if !(0.0..=4.0).contains(&r) {
        return Err(Error::Domain(format!("r = {r} is outside [0, 4]")));
    }
    Ok(step(x, r))
}

pub fn iterate(mut x: f64, r: f64, steps: u32) -> f64 {
    for _ in 0..steps {
        x = step(x, r);
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleState {
    pub cycle: usize,
    pub x01: f64,
    pub x02: f64,
    pub x0: f64,
    pub key_len: usize,
}

pub fn initial_condition(k1: &FirstKey, cycle: usize) -> Result<CycleState> {
    initial_condition_bytes(k1.bytes(), cycle)
}

pub fn initial_condition_bytes(k1: &[u8], cycle: usize) -> Result<CycleState> {
    let n = k1.len();
    if n < MIN_FIRST_KEY_BYTES {
        return Err(Error::KeyTooShort {
            len: n,
            min: MIN_FIRST_KEY_BYTES,
        });
    }
    let start = (cycle % n) * X01_WINDOW;
    let window_sum = |from: usize, width: usize| -> u32 {
        (from..from + width).map(|o| u32::from(k1[o % n])).sum()
    };
    let x01 = f64::from(window_sum(start, X01_WINDOW)) / X01_SCALE;
    let x02 = f64::from(window_sum(start + X01_WINDOW, X02_WINDOW)) / X02_SCALE;
    Ok(CycleState {
        cycle,
        x01,
        x02,
        x0: frac(x01 + x02),
        key_len: n,
    })
}

/// `floor(256 x)` for `x` in `[0, 1)`.
pub fn quantize(x: f64) -> Result<u8> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} is outside [0, 1)")));
    }
    Ok(quantize_unit(x))
}

/// Clamping quantizer for map outputs, which may reach 1.0 when r = 4.
#[inline]
pub(crate) fn quantize_unit(x: f64) -> u8 {
    ((x * 256.0) as u32).min(255) as u8
}

/// Chaotic digest of the whole first key, in `[0, 1)`.
///
/// Each byte is added into the state after one map step, then the state is
/// run for a further 32 steps so late bytes spread as far as early ones.
pub fn key_offset(k1: &[u8], r: f64) -> f64 {
    let mut x = 0.5;
    for &b in k1 {
        x = frac(step(x, r) + (f64::from(b) + 1.0) / 257.0);
    }
    for _ in 0..DIFFUSION_ROUNDS {
        x = step(x, r);
    }
    x.clamp(0.0, 1.0)
}

/// Map value fed to the quantizer for block 0 of a cycle.
pub fn cycle_seed(state: &CycleState, params: &ChaosParams, offset: f64) -> f64 {
    let x = if params.key_diffusion {
        frac(state.x0 + offset)
    } else {
        state.x0
    };
    iterate(x, params.r, params.iterations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn logistic_fixed_points() {
        for r in [0.0, 1.0, 3.9999, 4.0] {
            assert_eq!(logistic_step(0.0, r).unwrap(), 0.0);
            assert_eq!(logistic_step(1.0, r).unwrap(), 0.0);
        }
        assert!(close(logistic_step(0.5, 3.9999).unwrap(), 0.999975, 1e-12));
    }

    #[test]
    fn logistic_domain_errors() {
        assert!(matches!(logistic_step(-0.1, 3.0), Err(Error::Domain(_))));
        assert!(matches!(logistic_step(1.1, 3.0), Err(Error::Domain(_))));
        assert!(matches!(logistic_step(0.5, 4.01), Err(Error::Domain(_))));
        assert!(matches!(logistic_step(0.5, -1.0), Err(Error::Domain(_))));
        assert!(ChaosParams { r: 5.0, ..ChaosParams::literal() }.validate().is_err());
    }

    #[test]
    fn worked_initial_condition() {
        // "42,41437C": 52 50 44 | 52 49 52 51 55 67
        let k1 = b"42,41437C52G";
        let s = initial_condition_bytes(k1, 0).unwrap();
        assert!(close(s.x01, 146.0 / 16_777_216.0, 1e-18));
        assert!(close(s.x01, 8.702e-6, 1e-9));
        assert!(close(s.x02, 326.0 / 96.0, 1e-15));
        assert!(close(s.x0, 0.395842, 1e-6));
        assert_eq!(quantize(s.x0).unwrap(), 101);
    }

    #[test]
    fn uniform_key_window() {
        let s = initial_condition_bytes(b"000000000", 0).unwrap();
        assert!(close(s.x01, 144.0 / 16_777_216.0, 1e-18));
        assert_eq!(s.x02, 3.0);
        assert!(close(s.x0, s.x01, 1e-15));
        assert!(close(s.x0, 8.58e-6, 1e-8));
    }

    #[test]
    fn windows_wrap() {
        let k1: Vec<u8> = (0..12u8).map(|i| b'A' + i).collect();
        for c in 0..30 {
            let a = initial_condition_bytes(&k1, c).unwrap();
            let b = initial_condition_bytes(&k1, c + k1.len()).unwrap();
            assert_eq!(a.x0, b.x0);
        }
        // Cycle 3 starts at byte 9 and wraps into bytes 0..5.
        let s = initial_condition_bytes(&k1, 3).unwrap();
        let x01 = f64::from(u32::from(b'J') + u32::from(b'K') + u32::from(b'L')) / X01_SCALE;
        let x02 = f64::from((0..6).map(|i| u32::from(b'A' + i)).sum::<u32>()) / 96.0;
        assert_eq!(s.x01, x01);
        assert_eq!(s.x02, x02);
    }

    #[test]
    fn short_key_rejected() {
        assert_eq!(
            initial_condition_bytes(b"12345678", 0),
            Err(Error::KeyTooShort { len: 8, min: 9 })
        );
    }

    #[test]
    fn quantize_edges() {
        assert_eq!(quantize(0.0).unwrap(), 0);
        assert_eq!(quantize(0.999999).unwrap(), 255);
        assert_eq!(quantize(0.395842).unwrap(), 101);
        assert!(quantize(1.0).is_err());
        assert!(quantize(-0.01).is_err());
        assert_eq!(quantize_unit(1.0), 255);
    }

    #[test]
    fn orbits_stay_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2_000 {
            let mut x: f64 = rng.gen();
            let r = rng.gen_range(0.0..=4.0);
            for _ in 0..500 {
                x = logistic_step(x, r).unwrap();
            }
        }
    }

    #[test]
    fn key_offset_depends_on_every_byte() {
        let base: Vec<u8> = b"07U08_24d01j000000".to_vec();
        let reference = key_offset(&base, DEFAULT_R);
        assert!((0.0..=1.0).contains(&reference));
        for i in 0..base.len() {
            let mut other = base.clone();
            other[i] ^= 1;
            assert_ne!(key_offset(&other, DEFAULT_R), reference, "byte {i}");
        }
    }

    #[test]
    fn literal_seed_is_x0() {
        let s = initial_condition_bytes(b"42,41437C", 0).unwrap();
        assert_eq!(cycle_seed(&s, &ChaosParams::literal(), 0.7), s.x0);
        let h = cycle_seed(&s, &ChaosParams::hardened(), 0.0);
        assert_eq!(h, iterate(s.x0, DEFAULT_R, 16));
    }
}
