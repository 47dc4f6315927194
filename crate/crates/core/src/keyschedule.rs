//! Second key, third key and the final keystream.
//!
//! For every byte `k1` of the first key (one cycle each):
//!
//! ```text
//! q  = quantize(chaotic seed of the cycle)
//! k2 = k1 + q            (mod 256)
//! k3 = lfsr_next(k2)
//! out = k1 ^ k2 ^ k3
//! ```
//!
//! Bits are labelled D0..D7 from the most significant end. The register
//! shifts left and feeds D0 ^ D4 ^ D5 ^ D6 back into the low bit, which is
//! the characteristic polynomial x^8 + x^4 + x^3 + x^2 + 1.
//!
//! Keystreams longer than one pass over the first key are produced block by
//! block: block `b` advances each cycle's map value by `b` extra steps.

use serde::Serialize;

use crate::chaos::{self, ChaosParams, CycleState};
use crate::error::{Error, Result};
use crate::kgm::{first_key, Kgm, SecretKey};

pub fn second_key_byte(k1_byte: u8, x0_byte: u8) -> u8 {
    k1_byte.wrapping_add(x0_byte)
}

/// D0 ^ D4 ^ D5 ^ D6 with D0 the most significant bit.
pub fn lfsr_feedback(state: u8) -> u8 {
    ((state >> 7) ^ (state >> 3) ^ (state >> 2) ^ (state >> 1)) & 1
}

pub fn lfsr_next(k2: u8) -> u8 {
    (k2 << 1) | lfsr_feedback(k2)
}

pub fn final_key_byte(k1: u8, k2: u8, k3: u8) -> u8 {
    k1 ^ k2 ^ k3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KeyBytes {
    pub k1_byte: u8,
    pub k2_byte: u8,
    pub k3_byte: u8,
    pub final_byte: u8,
}

impl KeyBytes {
    pub fn derive(k1_byte: u8, x0_byte: u8) -> Self {
        let k2_byte = second_key_byte(k1_byte, x0_byte);
        let k3_byte = lfsr_next(k2_byte);
        Self {
            k1_byte,
            k2_byte,
            k3_byte,
            final_byte: final_key_byte(k1_byte, k2_byte, k3_byte),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Keystream {
    pub bytes: Vec<u8>,
    pub params: ChaosParams,
    pub secret_fingerprint: u32,
}

/// Endless keystream over a first key, one byte per cycle, block after
/// block.
#[derive(Debug, Clone)]
pub struct KeystreamGenerator<'a> {
    k1: &'a [u8],
    seeds: Vec<f64>,
    r: f64,
    position: usize,
}

impl<'a> KeystreamGenerator<'a> {
    pub fn new(k1: &'a [u8], params: &ChaosParams) -> Result<Self> {
        params.validate()?;
        let n = k1.len();
        if n < chaos::MIN_FIRST_KEY_BYTES {
            return Err(Error::KeyTooShort {
                len: n,
                min: chaos::MIN_FIRST_KEY_BYTES,
            });
        }
        let offset = if params.key_diffusion {
            chaos::key_offset(k1, params.r)
        } else {
            0.0
        };
        let seeds = (0..n)
            .map(|c| {
                chaos::initial_condition_bytes(k1, c).map(|s| chaos::cycle_seed(&s, params, offset))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            k1,
            seeds,
            r: params.r,
            position: 0,
        })
    }

    /// XORs the next `data.len()` keystream bytes into `data`.
    pub fn apply(&mut self, data: &mut [u8]) {
        for (d, k) in data.iter_mut().zip(self.by_ref()) {
            *d ^= k;
        }
    }
}

impl Iterator for KeystreamGenerator<'_> {
    type Item = u8;

    #[inline]
    fn next(&mut self) -> Option<u8> {
        let n = self.k1.len();
        let c = self.position % n;
        if self.position >= n {
            self.seeds[c] = chaos::step(self.seeds[c], self.r);
        }
        self.position += 1;
        let q = chaos::quantize_unit(self.seeds[c]);
        Some(KeyBytes::derive(self.k1[c], q).final_byte)
    }
}

/// Keystream straight from first-key bytes. `length` may be zero.
pub fn keystream_from_first_key(k1: &[u8], length: usize, params: &ChaosParams) -> Result<Vec<u8>> {
    Ok(KeystreamGenerator::new(k1, params)?.take(length).collect())
}

pub fn keystream(secret: &SecretKey, length: usize, params: &ChaosParams, m: &Kgm) -> Result<Keystream> {
    if length == 0 {
        return Err(Error::Domain("keystream length must be at least 1".into()));
    }
    let k1 = first_key(secret, m);
    Ok(Keystream {
        bytes: keystream_from_first_key(k1.bytes(), length, params)?,
        params: *params,
        secret_fingerprint: secret.fingerprint(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleTrace {
    pub state: CycleState,
    pub seed: f64,
    pub x0_byte: u8,
    pub bytes: KeyBytes,
}

/// Per-cycle audit record of the first pass.
pub fn trace(secret: &SecretKey, params: &ChaosParams, m: &Kgm) -> Result<Vec<CycleTrace>> {
    params.validate()?;
    let k1 = first_key(secret, m);
    let bytes = k1.bytes();
    if bytes.len() < chaos::MIN_FIRST_KEY_BYTES {
        return Err(Error::KeyTooShort {
            len: bytes.len(),
            min: chaos::MIN_FIRST_KEY_BYTES,
        });
    }
    let offset = if params.key_diffusion {
        chaos::key_offset(bytes, params.r)
    } else {
        0.0
    };
    (0..bytes.len())
        .map(|c| {
            let state = chaos::initial_condition_bytes(bytes, c)?;
            let seed = chaos::cycle_seed(&state, params, offset);
            let x0_byte = chaos::quantize_unit(seed);
            Ok(CycleTrace {
                state,
                seed,
                x0_byte,
                bytes: KeyBytes::derive(bytes[c], x0_byte),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kgm::DEFAULT_SEED;
    use proptest::prelude::*;

    /// Bit-by-bit register model, indexed D0 (MSB) .. D7.
    fn lfsr_by_bits(v: u8) -> u8 {
        let d: Vec<u8> = (0..8).map(|i| (v >> (7 - i)) & 1).collect();
        let fb = d[0] ^ d[4] ^ d[5] ^ d[6];
        let mut shifted: Vec<u8> = d[1..].to_vec();
        shifted.push(fb);
        shifted.iter().fold(0u8, |acc, &b| (acc << 1) | b)
    }

    #[test]
    fn worked_second_and_third_key() {
        assert_eq!(second_key_byte(0b0011_0100, 0b0000_0011), 0b0011_0111);
        assert_eq!(lfsr_feedback(0b0011_0111), 0);
        assert_eq!(lfsr_next(0b0011_0111), 0b0110_1110);
        assert_eq!(final_key_byte(0b0011_0100, 0b0011_0111, 0b0110_1110), 0b0110_1101);
    }

    #[test]
    fn second_key_wraps() {
        assert_eq!(second_key_byte(0xFF, 0x01), 0x00);
        for x in 0..=255u8 {
            assert_eq!(second_key_byte(x, 0), x);
        }
    }

    #[test]
    fn lfsr_edges() {
        assert_eq!(lfsr_next(0), 0);
        assert_eq!(lfsr_next(0b1000_0000), 0b0000_0001);
        for v in 0..=255u8 {
            assert_eq!(lfsr_next(v), lfsr_by_bits(v));
        }
    }

    #[test]
    fn lfsr_single_maximal_cycle() {
        // Walk from every nonzero state and record the period.
        for start in 1..=255u8 {
            let mut s = lfsr_next(start);
            let mut period = 1;
            while s != start {
                assert_ne!(s, 0);
                s = lfsr_next(s);
                period += 1;
                assert!(period <= 255);
            }
            assert_eq!(period, 255, "start {start:#010b}");
        }
    }

    #[test]
    fn xor_self_cancels() {
        assert_eq!(final_key_byte(0x5A, 0x5A, 0), 0);
        let kb = KeyBytes::derive(0x34, 0x03);
        assert_eq!(kb.final_byte ^ kb.k2_byte ^ kb.k3_byte, kb.k1_byte);
    }

    #[test]
    fn keystream_is_deterministic_and_prefix_stable() {
        let m = Kgm::default();
        let secret = SecretKey::new("POLY12@+αμ").unwrap();
        for params in [ChaosParams::literal(), ChaosParams::hardened()] {
            let a = keystream(&secret, 30, &params, &m).unwrap();
            let b = keystream(&secret, 30, &params, &m).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.bytes.len(), 30);
            let long = keystream(&secret, 60, &params, &m).unwrap();
            assert_eq!(&long.bytes[..30], &a.bytes[..]);
            assert_eq!(a.secret_fingerprint, secret.fingerprint());
        }
    }

    #[test]
    fn base_pass_matches_trace() {
        let m = Kgm::default();
        let secret = SecretKey::new("POLY12@+αμ").unwrap();
        for params in [ChaosParams::literal(), ChaosParams::hardened()] {
            let t = trace(&secret, &params, &m).unwrap();
            let ks = keystream(&secret, t.len(), &params, &m).unwrap();
            let from_trace: Vec<u8> = t.iter().map(|c| c.bytes.final_byte).collect();
            assert_eq!(ks.bytes, from_trace);
        }
    }

    #[test]
    fn literal_cycle_uses_quantized_x0() {
        let m = Kgm::default();
        let secret = SecretKey::new("secret-key").unwrap();
        let k1 = first_key(&secret, &m);
        let ks = keystream(&secret, k1.len(), &ChaosParams::literal(), &m).unwrap();
        for (c, &out) in ks.bytes.iter().enumerate() {
            let s = chaos::initial_condition(&k1, c).unwrap();
            let q = chaos::quantize(s.x0).unwrap();
            let k2 = k1.bytes()[c].wrapping_add(q);
            assert_eq!(out, k1.bytes()[c] ^ k2 ^ lfsr_by_bits(k2));
        }
    }

    #[test]
    fn extension_blocks_advance_the_map() {
        let k1 = b"42,41437C52G07U08_24d01j000000".to_vec();
        let params = ChaosParams::literal();
        let n = k1.len();
        let ks = keystream_from_first_key(&k1, 3 * n + 5, &params).unwrap();
        for p in 0..ks.len() {
            let (b, c) = (p / n, p % n);
            let s = chaos::initial_condition_bytes(&k1, c).unwrap();
            let x = chaos::iterate(s.x0, params.r, b as u32);
            let expected = KeyBytes::derive(k1[c], chaos::quantize_unit(x)).final_byte;
            assert_eq!(ks[p], expected, "position {p}");
        }
    }

    #[test]
    fn apply_matches_collected_stream() {
        let k1 = b"42,41437C52G07U08_24d01j000000";
        let params = ChaosParams::hardened();
        let stream = keystream_from_first_key(k1, 100, &params).unwrap();
        let mut data = vec![0u8; 100];
        let mut gen = KeystreamGenerator::new(k1, &params).unwrap();
        gen.apply(&mut data[..37]);
        gen.apply(&mut data[37..]);
        assert_eq!(data, stream);
    }

    #[test]
    fn short_first_key_is_rejected() {
        let m = Kgm::default();
        let secret = SecretKey::new("ab").unwrap();
        assert!(matches!(
            keystream(&secret, 10, &ChaosParams::literal(), &m),
            Err(Error::KeyTooShort { len: 6, .. })
        ));
        assert!(keystream(&SecretKey::new("abc").unwrap(), 0, &ChaosParams::literal(), &m).is_err());
        assert_eq!(
            keystream_from_first_key(b"000000000", 0, &ChaosParams::literal()).unwrap(),
            Vec::<u8>::new()
        );
    }

    #[test]
    fn default_seed_matrix_is_used() {
        assert_eq!(Kgm::default().seed(), DEFAULT_SEED);
    }

    proptest! {
        #[test]
        fn xor_involution(k1 in any::<u8>(), k2 in any::<u8>(), k3 in any::<u8>()) {
            prop_assert_eq!(final_key_byte(k1, k2, k3) ^ k2 ^ k3, k1);
        }

        #[test]
        fn prefix_stability(k1 in prop::collection::vec(any::<u8>(), 9..40), n in 1usize..200, hardened in any::<bool>()) {
            let params = if hardened { ChaosParams::hardened() } else { ChaosParams::literal() };
            let short = keystream_from_first_key(&k1, n, &params).unwrap();
            let long = keystream_from_first_key(&k1, 2 * n, &params).unwrap();
            prop_assert_eq!(&long[..n], &short[..]);
        }
    }
}
