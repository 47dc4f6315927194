//! The 3-dimensional key generation matrix and first-key derivation.
//!
//! The matrix is 9 layers of 9×9 characters. Each layer is filled from a
//! 95-character alphabet (Latin upper and lower case, digits, nine
//! punctuation marks, 24 lowercase Greek letters). A layer only has 81
//! cells, so 14 characters are left out of every layer:
//!
//! 1. A ChaCha8 generator seeded with the 64-bit matrix seed shuffles the
//!    alphabet once. Layer `L` omits the 14 characters at positions
//!    `14L .. 14L + 14` (mod 95) of that order, so each character is missing
//!    from one or two layers and present in the other seven or eight.
//! 2. For each layer in turn, the same generator shuffles the remaining 81
//!    characters, which are written row by row.
//!
//! A secret character found at row `i`, column `j` of layer `L` yields the
//! code `i`, `j`, `cell(L + 1 mod 9, i, j)`. A character missing from the
//! layer yields `"000"`.

use std::collections::HashMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DIM: usize = 9;
pub const LAYER_CELLS: usize = DIM * DIM;
/// Documented default seed ("0x3DK").
pub const DEFAULT_SEED: u64 = 0x0003_D4C3_B2A1_0001;
pub const MAX_SECRET_CHARS: usize = 64;
pub const ABSENT_CODE: [char; 3] = ['0', '0', '0'];

const PUNCTUATION: [char; 9] = [',', '.', '_', '@', '+', '-', '=', '#', '!'];

/// The ordered matrix alphabet.
pub fn alphabet() -> Vec<char> {
    let greek = ('α'..='ω').filter(|&c| c != 'ς');
    ('A'..='Z')
        .chain('a'..='z')
        .chain('0'..='9')
        .chain(PUNCTUATION)
        .chain(greek)
        .collect()
}

/// Byte value of a first-key character: its code point modulo 256.
///
/// ASCII characters map to their ASCII code; the Greek block U+03B1..U+03C9
/// lands on 0xB1..0xC9, which does not collide with anything else in the
/// alphabet.
pub fn code_byte(c: char) -> u8 {
    (c as u32 & 0xFF) as u8
}

/// A user secret: 1 to 64 characters.
#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey(String);

impl SecretKey {
    pub fn new(secret: impl Into<String>) -> Result<Self> {
        let secret = secret.into();
        let len = secret.chars().count();
        if len == 0 {
            return Err(Error::EmptyKey);
        }
        if len > MAX_SECRET_CHARS {
            return Err(Error::KeyTooLong {
                len,
                max: MAX_SECRET_CHARS,
            });
        }
        Ok(Self(secret))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn char_len(&self) -> usize {
        self.0.chars().count()
    }

    /// CRC-32 of the UTF-8 encoding.
    pub fn fingerprint(&self) -> u32 {
        crc32fast::hash(self.0.as_bytes())
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SecretKey(<redacted>)")
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct Kgm {
    /// `layers[layer][row][col]`
    layers: [[[char; DIM]; DIM]; DIM],
    positions: Vec<HashMap<char, (u8, u8)>>,
    seed: u64,
}

impl fmt::Debug for Kgm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kgm").field("seed", &self.seed).finish_non_exhaustive()
    }
}

impl Default for Kgm {
    fn default() -> Self {
        build_matrix(DEFAULT_SEED)
    }
}

impl Kgm {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn cell(&self, layer: usize, row: usize, col: usize) -> char {
        self.layers[layer][row][col]
    }

    pub fn layer(&self, layer: usize) -> &[[char; DIM]; DIM] {
        &self.layers[layer]
    }

    /// Row and column of `c` in `layer`, if present.
    pub fn position(&self, c: char, layer: usize) -> Option<(usize, usize)> {
        self.positions[layer]
            .get(&c)
            .map(|&(i, j)| (i as usize, j as usize))
    }

    /// Nested `[layer][row][col]` single-character strings.
    pub fn to_nested(&self) -> Vec<Vec<Vec<String>>> {
        self.layers
            .iter()
            .map(|layer| {
                layer
                    .iter()
                    .map(|row| row.iter().map(|c| c.to_string()).collect())
                    .collect()
            })
            .collect()
    }
}

pub fn build_matrix(seed: u64) -> Kgm {
    let alphabet = alphabet();
    let n = alphabet.len();
    let omit_per_layer = n - LAYER_CELLS;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut order = alphabet.clone();
    order.shuffle(&mut rng);

    let mut layers = [[['\0'; DIM]; DIM]; DIM];
    let mut positions = Vec::with_capacity(DIM);
    for (l, layer) in layers.iter_mut().enumerate() {
        let start = l * omit_per_layer;
        let omitted: Vec<char> = (0..omit_per_layer)
            .map(|t| order[(start + t) % n])
            .collect();
        let mut members: Vec<char> = alphabet
            .iter()
            .copied()
            .filter(|c| !omitted.contains(c))
            .collect();
        debug_assert_eq!(members.len(), LAYER_CELLS);
        members.shuffle(&mut rng);

        let mut index = HashMap::with_capacity(LAYER_CELLS);
        for (cell, &c) in members.iter().enumerate() {
            let (i, j) = (cell / DIM, cell % DIM);
            layer[i][j] = c;
            index.insert(c, (i as u8, j as u8));
        }
        positions.push(index);
    }

    Kgm {
        layers,
        positions,
        seed,
    }
}

/// Three-character code of `c` in `layer` (taken mod 9).
pub fn lookup(c: char, layer: usize, m: &Kgm) -> [char; 3] {
    let layer = layer % DIM;
    match m.position(c, layer) {
        Some((i, j)) => [
            char::from(b'0' + i as u8),
            char::from(b'0' + j as u8),
            m.cell((layer + 1) % DIM, i, j),
        ],
        None => ABSENT_CODE,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FirstKey {
    chars: String,
    bytes: Vec<u8>,
    source_len: usize,
}

impl FirstKey {
    pub fn as_str(&self) -> &str {
        &self.chars
    }

    /// One byte per code character, see [`code_byte`].
    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }
}

impl fmt::Display for FirstKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.chars)
    }
}

/// Character `f` of the secret is looked up in layer `f mod 9`.
pub fn first_key(secret: &SecretKey, m: &Kgm) -> FirstKey {
    let source_len = secret.char_len();
    let mut chars = String::with_capacity(source_len * 3);
    let mut bytes = Vec::with_capacity(source_len * 3);
    for (f, c) in secret.as_str().chars().enumerate() {
        for code in lookup(c, f % DIM, m) {
            chars.push(code);
            bytes.push(code_byte(code));
        }
    }
    FirstKey {
        chars,
        bytes,
        source_len,
    }
}
