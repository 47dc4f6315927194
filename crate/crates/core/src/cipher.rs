//! XOR stream encryption and the `CHK1` envelope.
//!
//! Layout, integers little-endian:
//!
//! | offset | size | field         |
//! |--------|------|---------------|
//! | 0      | 4    | magic `CHK1`  |
//! | 4      | 1    | version (1)   |
//! | 5      | 8    | matrix seed   |
//! | 13     | 1    | mode          |
//! | 14     | 1    | index flag    |
//! | 15     | 8    | payload length|
//! | 23     | n    | payload       |
//!
//! The secret is never written to the envelope.

use std::fmt;

use crate::chaos::ChaosParams;
use crate::error::{Error, Result};
use crate::index;
use crate::keyschedule::KeystreamGenerator;
use crate::kgm::{build_matrix, first_key, SecretKey, DEFAULT_SEED};

pub const MAGIC: [u8; 4] = *b"CHK1";
pub const FORMAT_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 23;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[repr(u8)]
pub enum Mode {
    #[default]
    Literal = 0,
    Hardened = 1,
}

impl Mode {
    pub fn params(self) -> ChaosParams {
        match self {
            Mode::Literal => ChaosParams::literal(),
            Mode::Hardened => ChaosParams::hardened(),
        }
    }

    pub fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Mode::Literal),
            1 => Ok(Mode::Hardened),
            other => Err(Error::UnknownMode(other)),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Literal => "literal",
            Mode::Hardened => "hardened",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncryptOptions {
    pub mode: Mode,
    pub index: bool,
    pub kgm_seed: u64,
}

impl Default for EncryptOptions {
    fn default() -> Self {
        Self {
            mode: Mode::Literal,
            index: true,
            kgm_seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CiphertextEnvelope {
    pub version: u8,
    pub kgm_seed: u64,
    pub mode: Mode,
    pub index_flag: bool,
    pub payload: Vec<u8>,
}

impl CiphertextEnvelope {
    pub fn payload_len(&self) -> u64 {
        self.payload.len() as u64
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(self.version);
        out.extend_from_slice(&self.kgm_seed.to_le_bytes());
        out.push(self.mode as u8);
        out.push(u8::from(self.index_flag));
        out.extend_from_slice(&self.payload_len().to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        if data.len() < MAGIC.len() || data[..4] != MAGIC {
            return Err(Error::BadMagic);
        }
        if data.len() < HEADER_LEN {
            return Err(Error::Truncated(format!(
                "{} bytes, header needs {HEADER_LEN}",
                data.len()
            )));
        }
        let version = data[4];
        if version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let kgm_seed = u64::from_le_bytes(data[5..13].try_into().expect("8-byte slice"));
        let mode = Mode::from_byte(data[13])?;
        let index_flag = match data[14] {
            0 => false,
            1 => true,
            other => return Err(Error::InvalidHeader(format!("index flag {other}"))),
        };
        let payload_len = u64::from_le_bytes(data[15..23].try_into().expect("8-byte slice"));
        let body = &data[HEADER_LEN..];
        if (body.len() as u64) < payload_len {
            return Err(Error::Truncated(format!(
                "payload has {} of {payload_len} bytes",
                body.len()
            )));
        }
        if (body.len() as u64) > payload_len {
            return Err(Error::InvalidHeader(format!(
                "{} trailing bytes after payload",
                body.len() as u64 - payload_len
            )));
        }
        Ok(Self {
            version,
            kgm_seed,
            mode,
            index_flag,
            payload: body.to_vec(),
        })
    }
}

fn apply_keystream(data: &mut [u8], secret: &SecretKey, seed: u64, mode: Mode) -> Result<()> {
    let matrix = build_matrix(seed);
    let k1 = first_key(secret, &matrix);
    KeystreamGenerator::new(k1.bytes(), &mode.params())?.apply(data);
    Ok(())
}

pub fn encrypt(plaintext: &str, secret: &SecretKey, options: &EncryptOptions) -> Result<CiphertextEnvelope> {
    let mut payload = if options.index {
        index::render(&index::index_encode(plaintext)).into_bytes()
    } else {
        plaintext.as_bytes().to_vec()
    };
    apply_keystream(&mut payload, secret, options.kgm_seed, options.mode)?;
    Ok(CiphertextEnvelope {
        version: FORMAT_VERSION,
        kgm_seed: options.kgm_seed,
        mode: options.mode,
        index_flag: options.index,
        payload,
    })
}

pub fn decrypt(env: &CiphertextEnvelope, secret: &SecretKey) -> Result<String> {
    if env.version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: env.version,
            expected: FORMAT_VERSION,
        });
    }
    let mut data = env.payload.clone();
    apply_keystream(&mut data, secret, env.kgm_seed, env.mode)?;
    let text = String::from_utf8(data).map_err(|_| Error::InvalidUtf8)?;
    if env.index_flag {
        index::decode(&text)
    } else {
        Ok(text)
    }
}

/// Parses and decrypts a serialized envelope.
pub fn decrypt_bytes(data: &[u8], secret: &SecretKey) -> Result<String> {
    decrypt(&CiphertextEnvelope::from_bytes(data)?, secret)
}
