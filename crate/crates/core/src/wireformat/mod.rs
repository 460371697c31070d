//! Portable wire format for task captures and results.
//!
//! Three encodings share one schema grammar:
//!
//! * **binary**: fixed little-endian layout with `u64` length prefixes,
//!   used inside [`Envelope`] frames;
//! * **carrier**: an envelope wrapped as Base64 inside `{"payload": ...}`,
//!   which is what REST-style function ingress accepts;
//! * **json**: a canonical JSON mapping, kept for comparison benchmarks and
//!   debugging.
//!
//! Values can be handled dynamically through [`Value`] and [`Schema`], or
//! statically through the [`Wire`] trait. Both routes produce identical
//! bytes.

mod binary;
mod carrier;
mod envelope;
mod error;
mod json;
mod schema;
mod typed;

pub use binary::{decode_prefix, decode_value, encode_value, Reader};
pub use carrier::{unwrap_base64_json, wrap_base64_json, PAYLOAD_KEY};
pub use envelope::{Envelope, EnvelopeKind, ENVELOPE_HEADER_LEN, ENVELOPE_MAGIC, ENVELOPE_VERSION};
pub use error::{
    CarrierError, DecodeError, DecodeErrorKind, EncodeError, EnvelopeError, JsonDecodeError,
    ValueMismatch,
};
pub use json::{decode_json_value, encode_json_value};
pub use schema::{Field, Schema, Value};
pub use typed::{ByteBuf, Wire};

/// Default cap on request and response payloads, matching the common
/// 6 MB synchronous-invocation limit of hosted FaaS platforms.
pub const DEFAULT_PAYLOAD_LIMIT: usize = 6 * 1024 * 1024;

/// Encodes a typed value into a fresh buffer.
pub fn to_bytes<T: Wire>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    value.encode(&mut out);
    out
}

/// Decodes a typed value, requiring the whole buffer to be consumed.
pub fn from_bytes<T: Wire>(bytes: &[u8]) -> Result<T, DecodeError> {
    let mut reader = Reader::new(bytes);
    let value = T::decode(&mut reader)?;
    reader.finish()?;
    Ok(value)
}
