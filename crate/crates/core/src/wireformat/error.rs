use thiserror::Error;

/// A value did not match the schema it was encoded under.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("value mismatch at {path}: expected {expected}, found {found}")]
pub struct EncodeError {
    pub path: String,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at offset {offset}")]
pub struct DecodeError {
    pub offset: usize,
    pub kind: DecodeErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeErrorKind {
    #[error("truncated input: needed {needed} bytes, {remaining} remaining")]
    Truncated { needed: usize, remaining: usize },
    #[error("length prefix {len} exceeds remaining {remaining} bytes")]
    LengthOverflow { len: u64, remaining: usize },
    #[error("invalid UTF-8 in string")]
    InvalidUtf8,
    #[error("invalid optional tag {0}")]
    InvalidOptionalTag(u8),
    #[error("invalid bool byte {0}")]
    InvalidBool(u8),
    #[error("{0} trailing bytes")]
    TrailingBytes(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvelopeError {
    #[error("envelope too short: {0} bytes")]
    TooShort(usize),
    #[error("bad envelope magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported envelope version {0}")]
    UnsupportedVersion(u16),
    #[error("unknown envelope kind {0}")]
    UnknownKind(u8),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CarrierError {
    #[error("carrier is not valid JSON: {0}")]
    Json(String),
    #[error("carrier must be a JSON object")]
    NotAnObject,
    #[error("missing payload key")]
    MissingPayload,
    #[error("payload must be a string")]
    PayloadNotString,
    #[error("unexpected carrier key {0:?}")]
    UnexpectedKey(String),
    #[error("invalid base64 payload: {0}")]
    Base64(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("json decode error at {path}: {message}")]
pub struct JsonDecodeError {
    pub path: String,
    pub message: String,
}

/// Returned when a dynamic [`Value`](super::Value) cannot be converted into a
/// statically typed one.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("expected {expected}, found {found}")]
pub struct ValueMismatch {
    pub expected: String,
    pub found: String,
}
