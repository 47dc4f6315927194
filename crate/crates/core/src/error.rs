use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("secret key is empty")]
    EmptyKey,
    #[error("secret key has {len} characters, at most {max} are allowed")]
    KeyTooLong { len: usize, max: usize },
    #[error("first key has {len} bytes, at least {min} are required")]
    KeyTooShort { len: usize, min: usize },
    #[error("value out of domain: {0}")]
    Domain(String),
    #[error("malformed index at token {position}: {reason}")]
    MalformedIndex { position: usize, reason: String },
    #[error("not a ciphertext envelope (bad magic)")]
    BadMagic,
    #[error("unsupported envelope version {found}, expected {expected}")]
    VersionMismatch { found: u8, expected: u8 },
    #[error("unknown cipher mode byte {0}")]
    UnknownMode(u8),
    #[error("invalid envelope header: {0}")]
    InvalidHeader(String),
    #[error("envelope truncated: {0}")]
    Truncated(String),
    #[error("decrypted payload is not valid UTF-8")]
    InvalidUtf8,
    #[error("input is empty")]
    EmptyInput,
}

impl Error {
    /// Stable identifier used in machine-readable error output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyKey => "EmptyKey",
            Error::KeyTooLong { .. } => "KeyTooLong",
            Error::KeyTooShort { .. } => "KeyTooShort",
            Error::Domain(_) => "DomainError",
            Error::MalformedIndex { .. } => "MalformedIndex",
            Error::BadMagic => "BadMagic",
            Error::VersionMismatch { .. } => "VersionMismatch",
            Error::UnknownMode(_) => "UnknownMode",
            Error::InvalidHeader(_) => "InvalidHeader",
            Error::Truncated(_) => "Truncated",
            Error::InvalidUtf8 => "InvalidUtf8",
            Error::EmptyInput => "EmptyInput",
        }
    }

    pub fn is_key_error(&self) -> bool {
        matches!(
            self,
            Error::EmptyKey | Error::KeyTooLong { .. } | Error::KeyTooShort { .. }
        )
    }

    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::MalformedIndex { .. }
                | Error::BadMagic
                | Error::VersionMismatch { .. }
                | Error::UnknownMode(_)
                | Error::InvalidHeader(_)
                | Error::Truncated(_)
                | Error::InvalidUtf8
                | Error::EmptyInput
        )
    }
}
