//! Chaos-based key scheduling and a lightweight XOR stream cipher.
//!
//! The pipeline turns a short secret into a keystream in four steps:
//!
//! 1. [`kgm::first_key`] looks every secret character up in a seeded
//!    9×9×9 character matrix and emits a 3-character code per character.
//! 2. [`chaos::initial_condition`] reads sliding byte windows of that first
//!    key and folds them into a logistic-map seed per cycle.
//! 3. [`keyschedule`] adds the quantized seed to the first-key byte (second
//!    key), runs it through an 8-bit LFSR step (third key) and XORs all three.
//! 4. [`cipher::encrypt`] optionally word-indexes the plaintext
//!    ([`index`]), XORs it with the keystream and wraps it in a `CHK1`
//!    envelope.
//!
//! [`cryptanalysis`] and [`bench`] hold the evaluation tooling; [`cli`]
//! wires everything to the `chaoskey` binary.

pub mod bench;
pub mod chaos;
pub mod cipher;
pub mod cli;
pub mod cryptanalysis;
pub mod error;
pub mod index;
pub mod keyschedule;
pub mod kgm;

pub use chaos::{ChaosParams, CycleState};
pub use cipher::{decrypt, encrypt, CiphertextEnvelope, EncryptOptions, Mode};
pub use error::{Error, Result};
pub use index::{IndexedMessage, Token};
pub use keyschedule::{keystream, KeyBytes, Keystream};
pub use kgm::{build_matrix, first_key, FirstKey, Kgm, SecretKey};
