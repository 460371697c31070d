use super::error::{DecodeError, DecodeErrorKind, EncodeError};
use super::schema::{Schema, Value};

/// Sequences of zero-sized elements carry no bytes to bound their count, so
/// decoding caps them explicitly.
const MAX_ZERO_SIZED_ELEMENTS: u64 = 1 << 20;

/// Encodes `value` under `schema`.
///
/// Fixed-width primitives are written little-endian, `bool` as one byte,
/// strings and byte sequences as a `u64` length followed by raw bytes,
/// sequences as a `u64` count followed by elements, optionals as a tag byte
/// (0 absent, 1 present) followed by the payload, and records as their
/// fields in declared order without tags.
pub fn encode_value(value: &Value, schema: &Schema) -> Result<Vec<u8>, EncodeError> {
    let mut out = Vec::new();
    let mut path = String::from("$");
    encode_into(value, schema, &mut out, &mut path)?;
    Ok(out)
}

fn mismatch(path: &str, schema: &Schema, value: &Value) -> EncodeError {
    EncodeError { path: path.to_owned(), expected: schema.to_string(), found: value.kind().to_owned() }
}

fn encode_into(
    value: &Value,
    schema: &Schema,
    out: &mut Vec<u8>,
    path: &mut String,
) -> Result<(), EncodeError> {
    match (schema, value) {
        (Schema::Bool, Value::Bool(b)) => out.push(u8::from(*b)),
        (Schema::I8, Value::I8(v)) => out.extend_from_slice(&v.to_le_bytes()),
        (Schema::I16, Value::I16(v)) => out.extend_from_slice(&v.to_le_bytes()),
        (Schema::I32, Value::I32(v)) => out.extend_from_slice(&v.to_le_bytes()),
        (Schema::I64, Value::I64(v)) => out.extend_from_slice(&v.to_le_bytes()),
        (Schema::U8, Value::U8(v)) => out.push(*v),
        (Schema::U16, Value::U16(v)) => out.extend_from_slice(&v.to_le_bytes()),
        (Schema::U32, Value::U32(v)) => out.extend_from_slice(&v.to_le_bytes()),
        (Schema::U64, Value::U64(v)) => out.extend_from_slice(&v.to_le_bytes()),
        (Schema::F32, Value::F32(v)) => out.extend_from_slice(&v.to_le_bytes()),
        (Schema::F64, Value::F64(v)) => out.extend_from_slice(&v.to_le_bytes()),
        (Schema::Str, Value::Str(s)) => {
            out.extend_from_slice(&(s.len() as u64).to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        }
        (Schema::Bytes, Value::Bytes(b)) => {
            out.extend_from_slice(&(b.len() as u64).to_le_bytes());
            out.extend_from_slice(b);
        }
        (Schema::Seq(inner), Value::Seq(items)) => {
            out.extend_from_slice(&(items.len() as u64).to_le_bytes());
            let base = path.len();
            for (i, item) in items.iter().enumerate() {
                path.push_str(&format!("[{i}]"));
                encode_into(item, inner, out, path)?;
                path.truncate(base);
            }
        }
        (Schema::Opt(_), Value::Opt(None)) => out.push(0),
        (Schema::Opt(inner), Value::Opt(Some(v))) => {
            out.push(1);
            path.push('?');
            encode_into(v, inner, out, path)?;
            path.pop();
        }
        (Schema::Record(fields), Value::Record(values)) => {
            if fields.len() != values.len() {
                return Err(EncodeError {
                    path: path.clone(),
                    expected: format!("record with {} fields", fields.len()),
                    found: format!("record with {} fields", values.len()),
                });
            }
            let base = path.len();
            for (field, v) in fields.iter().zip(values) {
                path.push('.');
                path.push_str(&field.name);
                encode_into(v, &field.schema, out, path)?;
                path.truncate(base);
            }
        }
        _ => return Err(mismatch(path, schema, value)),
    }
    Ok(())
}

/// Decodes a value that must occupy all of `bytes`.
pub fn decode_value(bytes: &[u8], schema: &Schema) -> Result<Value, DecodeError> {
    let mut reader = Reader::new(bytes);
    let value = reader.read_value(schema)?;
    reader.finish()?;
    Ok(value)
}

/// Decodes one value from the front of `bytes`, returning it with the number
/// of bytes consumed.
pub fn decode_prefix(bytes: &[u8], schema: &Schema) -> Result<(Value, usize), DecodeError> {
    let mut reader = Reader::new(bytes);
    let value = reader.read_value(schema)?;
    Ok((value, reader.position()))
}

/// Cursor over an encoded buffer. Every error carries the byte offset at
/// which it was detected.
#[derive(Debug, Clone)]
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn error(&self, kind: DecodeErrorKind) -> DecodeError {
        DecodeError { offset: self.pos, kind }
    }

    /// Fails unless every byte has been consumed.
    pub fn finish(&self) -> Result<(), DecodeError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(self.error(DecodeErrorKind::TrailingBytes(n))),
        }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if n > self.remaining() {
            return Err(self.error(DecodeErrorKind::Truncated { needed: n, remaining: self.remaining() }));
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn take_array<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        let slice = self.take(N)?;
        let mut arr = [0u8; N];
        arr.copy_from_slice(slice);
        Ok(arr)
    }

    pub fn read_u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take_array::<1>()?[0])
    }

    pub fn read_bool(&mut self) -> Result<bool, DecodeError> {
        let at = self.pos;
        match self.read_u8()? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(DecodeError { offset: at, kind: DecodeErrorKind::InvalidBool(other) }),
        }
    }

    pub fn read_i8(&mut self) -> Result<i8, DecodeError> {
        Ok(i8::from_le_bytes(self.take_array()?))
    }

    pub fn read_i16(&mut self) -> Result<i16, DecodeError> {
        Ok(i16::from_le_bytes(self.take_array()?))
    }

    pub fn read_i32(&mut self) -> Result<i32, DecodeError> {
        Ok(i32::from_le_bytes(self.take_array()?))
    }

    pub fn read_i64(&mut self) -> Result<i64, DecodeError> {
        Ok(i64::from_le_bytes(self.take_array()?))
    }

    pub fn read_u16(&mut self) -> Result<u16, DecodeError> {
        Ok(u16::from_le_bytes(self.take_array()?))
    }

    pub fn read_u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_le_bytes(self.take_array()?))
    }

    pub fn read_u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_le_bytes(self.take_array()?))
    }

    pub fn read_f32(&mut self) -> Result<f32, DecodeError> {
        Ok(f32::from_le_bytes(self.take_array()?))
    }

    pub fn read_f64(&mut self) -> Result<f64, DecodeError> {
        Ok(f64::from_le_bytes(self.take_array()?))
    }

    /// Reads a `u64` byte-length prefix and checks it against the remaining input.
    pub fn read_len(&mut self) -> Result<usize, DecodeError> {
        let at = self.pos;
        let len = self.read_u64()?;
        if len > self.remaining() as u64 {
            return Err(DecodeError {
                offset: at,
                kind: DecodeErrorKind::LengthOverflow { len, remaining: self.remaining() },
            });
        }
        Ok(len as usize)
    }

    /// Reads a `u64` element count for elements at least `min_len` bytes wide.
    pub fn read_count(&mut self, min_len: usize) -> Result<usize, DecodeError> {
        let at = self.pos;
        let count = self.read_u64()?;
        let remaining = self.remaining();
        let fits = match min_len {
            0 => count <= MAX_ZERO_SIZED_ELEMENTS,
            w => count <= (remaining / w) as u64,
        };
        if !fits {
            return Err(DecodeError {
                offset: at,
                kind: DecodeErrorKind::LengthOverflow { len: count, remaining },
            });
        }
        Ok(count as usize)
    }

    pub fn read_bytes(&mut self) -> Result<&'a [u8], DecodeError> {
        let len = self.read_len()?;
        self.take(len)
    }

    pub fn read_str(&mut self) -> Result<&'a str, DecodeError> {
        let len = self.read_len()?;
        let at = self.pos;
        let raw = self.take(len)?;
        std::str::from_utf8(raw)
            .map_err(|_| DecodeError { offset: at, kind: DecodeErrorKind::InvalidUtf8 })
    }

    /// Reads an optional tag, returning whether a payload follows.
    pub fn read_tag(&mut self) -> Result<bool, DecodeError> {
        let at = self.pos;
        match self.read_u8()? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(DecodeError { offset: at, kind: DecodeErrorKind::InvalidOptionalTag(other) }),
        }
    }

    pub fn read_value(&mut self, schema: &Schema) -> Result<Value, DecodeError> {
        Ok(match schema {
            Schema::Bool => Value::Bool(self.read_bool()?),
            Schema::I8 => Value::I8(self.read_i8()?),
            Schema::I16 => Value::I16(self.read_i16()?),
            Schema::I32 => Value::I32(self.read_i32()?),
            Schema::I64 => Value::I64(self.read_i64()?),
            Schema::U8 => Value::U8(self.read_u8()?),
            Schema::U16 => Value::U16(self.read_u16()?),
            Schema::U32 => Value::U32(self.read_u32()?),
            Schema::U64 => Value::U64(self.read_u64()?),
            Schema::F32 => Value::F32(self.read_f32()?),
            Schema::F64 => Value::F64(self.read_f64()?),
            Schema::Str => Value::Str(self.read_str()?.to_owned()),
            Schema::Bytes => Value::Bytes(self.read_bytes()?.to_vec()),
            Schema::Seq(inner) => {
                let count = self.read_count(inner.min_encoded_len())?;
                let mut items = Vec::with_capacity(count);
                for _ in 0..count {
                    items.push(self.read_value(inner)?);
                }
                Value::Seq(items)
            }
            Schema::Opt(inner) => {
                if self.read_tag()? {
                    Value::some(self.read_value(inner)?)
                } else {
                    Value::none()
                }
            }
            Schema::Record(fields) => Value::Record(
                fields.iter().map(|f| self.read_value(&f.schema)).collect::<Result<_, _>>()?,
            ),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wireformat::Field;

    #[test]
    fn u32_is_little_endian() {
        assert_eq!(encode_value(&Value::U32(7), &Schema::U32).unwrap(), [7, 0, 0, 0]);
        assert_eq!(decode_value(&[7, 0, 0, 0], &Schema::U32).unwrap(), Value::U32(7));
    }

    #[test]
    fn string_has_u64_length_prefix() {
        let bytes = encode_value(&Value::Str("ab".into()), &Schema::Str).unwrap();
        assert_eq!(bytes, [2, 0, 0, 0, 0, 0, 0, 0, 0x61, 0x62]);
    }

    #[test]
    fn million_u32_sequence_size() {
        let value = Value::Seq((0..1_000_000u32).map(Value::U32).collect());
        let bytes = encode_value(&value, &Schema::seq(Schema::U32)).unwrap();
        assert_eq!(bytes.len(), 4_000_008);
    }

    #[test]
    fn invalid_optional_tag_reports_offset() {
        let err = decode_value(&[0xFF], &Schema::opt(Schema::U8)).unwrap_err();
        assert_eq!(err.to_string(), "invalid optional tag 255 at offset 0");
    }

    #[test]
    fn truncated_input() {
        let err = decode_value(&[1, 2], &Schema::U32).unwrap_err();
        assert_eq!(err.offset, 0);
        assert!(matches!(err.kind, DecodeErrorKind::Truncated { needed: 4, remaining: 2 }));
    }

    #[test]
    fn length_prefix_beyond_input() {
        let mut bytes = 100u64.to_le_bytes().to_vec();
        bytes.extend_from_slice(b"abc");
        let err = decode_value(&bytes, &Schema::Str).unwrap_err();
        assert_eq!(err.offset, 0);
        assert!(matches!(err.kind, DecodeErrorKind::LengthOverflow { len: 100, remaining: 3 }));
    }

    #[test]
    fn invalid_utf8_offset_points_at_payload() {
        let mut bytes = 2u64.to_le_bytes().to_vec();
        bytes.extend_from_slice(&[0xC3, 0x28]);
        let err = decode_value(&bytes, &Schema::Str).unwrap_err();
        assert_eq!(err, DecodeError { offset: 8, kind: DecodeErrorKind::InvalidUtf8 });
    }

    #[test]
    fn huge_sequence_count_is_rejected_without_allocating() {
        let bytes = u64::MAX.to_le_bytes();
        let err = decode_value(&bytes, &Schema::seq(Schema::U64)).unwrap_err();
        assert!(matches!(err.kind, DecodeErrorKind::LengthOverflow { .. }));
        let err = decode_value(&bytes, &Schema::seq(Schema::Record(vec![]))).unwrap_err();
        assert!(matches!(err.kind, DecodeErrorKind::LengthOverflow { .. }));
    }

    #[test]
    fn trailing_bytes_are_an_error_but_prefix_decoding_reports_consumption() {
        let err = decode_value(&[1, 0, 0, 0, 9], &Schema::U32).unwrap_err();
        assert_eq!(err, DecodeError { offset: 4, kind: DecodeErrorKind::TrailingBytes(1) });
        let (v, used) = decode_prefix(&[1, 0, 0, 0, 9], &Schema::U32).unwrap();
        assert_eq!((v, used), (Value::U32(1), 4));
    }

    #[test]
    fn record_fields_are_untagged_in_declared_order() {
        let schema = Schema::Record(vec![Field::new("a", Schema::U8), Field::new("b", Schema::U16)]);
        let value = Value::Record(vec![Value::U8(1), Value::U16(0x0302)]);
        assert_eq!(encode_value(&value, &schema).unwrap(), [1, 2, 3]);
    }

    #[test]
    fn mismatch_names_field_path() {
        let schema = Schema::record([("xs", Schema::seq(Schema::opt(Schema::U32)))]);
        let value = Value::Record(vec![Value::Seq(vec![Value::none(), Value::some(Value::I32(1))])]);
        let err = encode_value(&value, &schema).unwrap_err();
        assert_eq!(err.path, "$.xs[1]?");
        assert_eq!(err.expected, "u32");
        assert_eq!(err.found, "i32");
    }

    #[test]
    fn bool_byte_domain() {
        assert_eq!(decode_value(&[1], &Schema::Bool).unwrap(), Value::Bool(true));
        let err = decode_value(&[2], &Schema::Bool).unwrap_err();
        assert_eq!(err.kind, DecodeErrorKind::InvalidBool(2));
    }
}
