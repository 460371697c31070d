use super::binary::Reader;
use super::error::{DecodeError, ValueMismatch};
use super::schema::{Field, Schema, Value};

/// Rust types with a fixed wire schema.
///
/// `encode`/`decode` are the fast path used by the dispatcher and the worker
/// runtime; they must produce exactly the bytes that
/// [`encode_value`](super::encode_value) produces for `to_value()` under
/// `schema()`.
pub trait Wire: Sized {
    fn schema() -> Schema;
    fn encode(&self, out: &mut Vec<u8>);
    fn decode(reader: &mut Reader<'_>) -> Result<Self, DecodeError>;
    fn to_value(&self) -> Value;
    fn from_value(value: Value) -> Result<Self, ValueMismatch>;

    #[doc(hidden)]
    fn encode_slice(items: &[Self], out: &mut Vec<u8>) {
        out.extend_from_slice(&(items.len() as u64).to_le_bytes());
        for item in items {
            item.encode(out);
        }
    }

    #[doc(hidden)]
    fn decode_vec(reader: &mut Reader<'_>) -> Result<Vec<Self>, DecodeError> {
        let count = reader.read_count(Self::schema().min_encoded_len())?;
        let mut items = Vec::with_capacity(count);
        for _ in 0..count {
            items.push(Self::decode(reader)?);
        }
        Ok(items)
    }
}

fn mismatch<T: Wire>(found: &Value) -> ValueMismatch {
    ValueMismatch { expected: T::schema().to_string(), found: found.kind().to_owned() }
}

macro_rules! numeric_wire {
    ($($ty:ty => $variant:ident, $read:ident;)*) => {$(
        impl Wire for $ty {
            fn schema() -> Schema {
                Schema::$variant
            }

            #[inline]
            fn encode(&self, out: &mut Vec<u8>) {
                out.extend_from_slice(&self.to_le_bytes());
            }

            #[inline]
            fn decode(reader: &mut Reader<'_>) -> Result<Self, DecodeError> {
                reader.$read()
            }

            fn to_value(&self) -> Value {
                Value::$variant(*self)
            }

            fn from_value(value: Value) -> Result<Self, ValueMismatch> {
                match value {
                    Value::$variant(v) => Ok(v),
                    other => Err(mismatch::<Self>(&other)),
                }
            }

            fn encode_slice(items: &[Self], out: &mut Vec<u8>) {
                const WIDTH: usize = std::mem::size_of::<$ty>();
                out.reserve(8 + items.len() * WIDTH);
                out.extend_from_slice(&(items.len() as u64).to_le_bytes());
                let start = out.len();
                out.resize(start + items.len() * WIDTH, 0);
                for (chunk, item) in out[start..].chunks_exact_mut(WIDTH).zip(items) {
                    chunk.copy_from_slice(&item.to_le_bytes());
                }
            }

            fn decode_vec(reader: &mut Reader<'_>) -> Result<Vec<Self>, DecodeError> {
                const WIDTH: usize = std::mem::size_of::<$ty>();
                let count = reader.read_count(WIDTH)?;
                let raw = reader.take(count * WIDTH)?;
                Ok(raw
                    .chunks_exact(WIDTH)
                    .map(|c| <$ty>::from_le_bytes(c.try_into().expect("exact chunk")))
                    .collect())
            }
        }
    )*};
}

numeric_wire! {
    i8 => I8, read_i8;
    i16 => I16, read_i16;
    i32 => I32, read_i32;
    i64 => I64, read_i64;
    u16 => U16, read_u16;
    u32 => U32, read_u32;
    u64 => U64, read_u64;
    f32 => F32, read_f32;
    f64 => F64, read_f64;
}

impl Wire for u8 {
    fn schema() -> Schema {
        Schema::U8
    }

    fn encode(&self, out: &mut Vec<u8>) {
        out.push(*self);
    }

    fn decode(reader: &mut Reader<'_>) -> Result<Self, DecodeError> {
        reader.read_u8()
    }

    fn to_value(&self) -> Value {
        Value::U8(*self)
    }

    fn from_value(value: Value) -> Result<Self, ValueMismatch> {
        match value {
            Value::U8(v) => Ok(v),
            other => Err(mismatch::<Self>(&other)),
        }
    }

    fn encode_slice(items: &[Self], out: &mut Vec<u8>) {
        out.extend_from_slice(&(items.len() as u64).to_le_bytes());
        out.extend_from_slice(items);
    }

    fn decode_vec(reader: &mut Reader<'_>) -> Result<Vec<Self>, DecodeError> {
        Ok(reader.read_bytes()?.to_vec())
    }
}

impl Wire for bool {
    fn schema() -> Schema {
        Schema::Bool
    }

    fn encode(&self, out: &mut Vec<u8>) {
        out.push(u8::from(*self));
    }

    fn decode(reader: &mut Reader<'_>) -> Result<Self, DecodeError> {
        reader.read_bool()
    }

    fn to_value(&self) -> Value {
        Value::Bool(*self)
    }

    fn from_value(value: Value) -> Result<Self, ValueMismatch> {
        match value {
            Value::Bool(v) => Ok(v),
            other => Err(mismatch::<Self>(&other)),
        }
    }
}

impl Wire for String {
    fn schema() -> Schema {
        Schema::Str
    }

    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        out.extend_from_slice(self.as_bytes());
    }

    fn decode(reader: &mut Reader<'_>) -> Result<Self, DecodeError> {
        reader.read_str().map(str::to_owned)
    }

    fn to_value(&self) -> Value {
        Value::Str(self.clone())
    }

    fn from_value(value: Value) -> Result<Self, ValueMismatch> {
        match value {
            Value::Str(v) => Ok(v),
            other => Err(mismatch::<Self>(&other)),
        }
    }
}

/// An opaque byte string, encoded under [`Schema::Bytes`].
///
/// `Vec<u8>` has identical binary bytes but maps to a JSON array rather than
/// a Base64 string.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ByteBuf(pub Vec<u8>);

impl Wire for ByteBuf {
    fn schema() -> Schema {
        Schema::Bytes
    }

    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.0.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.0);
    }

    fn decode(reader: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(ByteBuf(reader.read_bytes()?.to_vec()))
    }

    fn to_value(&self) -> Value {
        Value::Bytes(self.0.clone())
    }

    fn from_value(value: Value) -> Result<Self, ValueMismatch> {
        match value {
            Value::Bytes(v) => Ok(ByteBuf(v)),
            other => Err(mismatch::<Self>(&other)),
        }
    }
}

impl<T: Wire> Wire for Vec<T> {
    fn schema() -> Schema {
        Schema::seq(T::schema())
    }

    fn encode(&self, out: &mut Vec<u8>) {
        T::encode_slice(self, out);
    }

    fn decode(reader: &mut Reader<'_>) -> Result<Self, DecodeError> {
        T::decode_vec(reader)
    }

    fn to_value(&self) -> Value {
        Value::Seq(self.iter().map(Wire::to_value).collect())
    }

    fn from_value(value: Value) -> Result<Self, ValueMismatch> {
        match value {
            Value::Seq(items) => items.into_iter().map(T::from_value).collect(),
            other => Err(mismatch::<Self>(&other)),
        }
    }
}

impl<T: Wire> Wire for Option<T> {
    fn schema() -> Schema {
        Schema::opt(T::schema())
    }

    fn encode(&self, out: &mut Vec<u8>) {
        match self {
            None => out.push(0),
            Some(v) => {
                out.push(1);
                v.encode(out);
            }
        }
    }

    fn decode(reader: &mut Reader<'_>) -> Result<Self, DecodeError> {
        if reader.read_tag()? {
            T::decode(reader).map(Some)
        } else {
            Ok(None)
        }
    }

    fn to_value(&self) -> Value {
        Value::Opt(self.as_ref().map(|v| Box::new(v.to_value())))
    }

    fn from_value(value: Value) -> Result<Self, ValueMismatch> {
        match value {
            Value::Opt(None) => Ok(None),
            Value::Opt(Some(v)) => T::from_value(*v).map(Some),
            other => Err(mismatch::<Self>(&other)),
        }
    }
}

/// The unit type is the empty record; a task with no return value answers
/// with an empty body.
impl Wire for () {
    fn schema() -> Schema {
        Schema::Record(Vec::new())
    }

    fn encode(&self, _out: &mut Vec<u8>) {}

    fn decode(_reader: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(())
    }

    fn to_value(&self) -> Value {
        Value::Record(Vec::new())
    }

    fn from_value(value: Value) -> Result<Self, ValueMismatch> {
        match value {
            Value::Record(v) if v.is_empty() => Ok(()),
            other => Err(mismatch::<Self>(&other)),
        }
    }
}

macro_rules! tuple_wire {
    ($(($($name:ident : $idx:tt),+))*) => {$(
        /// Tuples are records whose fields are named by position.
        impl<$($name: Wire),+> Wire for ($($name,)+) {
            fn schema() -> Schema {
                Schema::Record(vec![$(Field::new(stringify!($idx), $name::schema())),+])
            }

            fn encode(&self, out: &mut Vec<u8>) {
                $(self.$idx.encode(out);)+
            }

            fn decode(reader: &mut Reader<'_>) -> Result<Self, DecodeError> {
                Ok(($($name::decode(reader)?,)+))
            }

            fn to_value(&self) -> Value {
                Value::Record(vec![$(self.$idx.to_value()),+])
            }

            fn from_value(value: Value) -> Result<Self, ValueMismatch> {
                let found = value.kind();
                match value {
                    Value::Record(fields) => {
                        let mut it = fields.into_iter();
                        let out = ($($name::from_value(it.next().ok_or_else(|| ValueMismatch {
                            expected: Self::schema().to_string(),
                            found: "shorter record".into(),
                        })?)?,)+);
                        match it.next() {
                            None => Ok(out),
                            Some(_) => Err(ValueMismatch {
                                expected: Self::schema().to_string(),
                                found: "longer record".into(),
                            }),
                        }
                    }
                    _ => Err(ValueMismatch { expected: Self::schema().to_string(), found: found.into() }),
                }
            }
        }
    )*};
}

tuple_wire! {
    (A: 0)
    (A: 0, B: 1)
    (A: 0, B: 1, C: 2)
    (A: 0, B: 1, C: 2, D: 3)
    (A: 0, B: 1, C: 2, D: 3, E: 4)
    (A: 0, B: 1, C: 2, D: 3, E: 4, F: 5)
}
