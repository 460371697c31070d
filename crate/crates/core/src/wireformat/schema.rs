use std::fmt;

/// Closed, recursive type grammar every capture and result must fit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Schema {
    Bool,
    I8,
    I16,
    I32,
    I64,
    U8,
    U16,
    U32,
    U64,
    F32,
    F64,
    Str,
    Bytes,
    Seq(Box<Schema>),
    Opt(Box<Schema>),
    Record(Vec<Field>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Field {
    pub name: String,
    pub schema: Schema,
}

impl Field {
    pub fn new(name: impl Into<String>, schema: Schema) -> Self {
        Self { name: name.into(), schema }
    }
}

impl Schema {
    pub fn seq(inner: Schema) -> Self {
        Schema::Seq(Box::new(inner))
    }

    pub fn opt(inner: Schema) -> Self {
        Schema::Opt(Box::new(inner))
    }

    pub fn record<N: Into<String>>(fields: impl IntoIterator<Item = (N, Schema)>) -> Self {
        Schema::Record(fields.into_iter().map(|(n, s)| Field::new(n, s)).collect())
    }

    /// Smallest number of bytes any value of this schema occupies in binary form.
    pub fn min_encoded_len(&self) -> usize {
        match self {
            Schema::Bool | Schema::I8 | Schema::U8 => 1,
            Schema::I16 | Schema::U16 => 2,
            Schema::I32 | Schema::U32 | Schema::F32 => 4,
            Schema::I64 | Schema::U64 | Schema::F64 => 8,
            Schema::Str | Schema::Bytes | Schema::Seq(_) => 8,
            Schema::Opt(_) => 1,
            Schema::Record(fields) => fields.iter().map(|f| f.schema.min_encoded_len()).sum(),
        }
    }

    /// Width of a fixed-size primitive, `None` for variable-size schemas.
    pub fn fixed_width(&self) -> Option<usize> {
        match self {
            Schema::Bool | Schema::I8 | Schema::U8 => Some(1),
            Schema::I16 | Schema::U16 => Some(2),
            Schema::I32 | Schema::U32 | Schema::F32 => Some(4),
            Schema::I64 | Schema::U64 | Schema::F64 => Some(8),
            _ => None,
        }
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schema::Bool => f.write_str("bool"),
            Schema::I8 => f.write_str("i8"),
            Schema::I16 => f.write_str("i16"),
            Schema::I32 => f.write_str("i32"),
            Schema::I64 => f.write_str("i64"),
            Schema::U8 => f.write_str("u8"),
            Schema::U16 => f.write_str("u16"),
            Schema::U32 => f.write_str("u32"),
            Schema::U64 => f.write_str("u64"),
            Schema::F32 => f.write_str("f32"),
            Schema::F64 => f.write_str("f64"),
            Schema::Str => f.write_str("string"),
            Schema::Bytes => f.write_str("bytes"),
            Schema::Seq(inner) => write!(f, "seq<{inner}>"),
            Schema::Opt(inner) => write!(f, "opt<{inner}>"),
            Schema::Record(fields) => {
                f.write_str("{")?;
                for (i, field) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}: {}", field.name, field.schema)?;
                }
                f.write_str("}")
            }
        }
    }
}

/// A dynamically typed value; record fields are positional, names live in
/// the [`Schema`].
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Bool(bool),
    I8(i8),
    I16(i16),
    I32(i32),
    I64(i64),
    U8(u8),
    U16(u16),
    U32(u32),
    U64(u64),
    F32(f32),
    F64(f64),
    Str(String),
    Bytes(Vec<u8>),
    Seq(Vec<Value>),
    Opt(Option<Box<Value>>),
    Record(Vec<Value>),
}

impl Value {
    pub fn kind(&self) -> &'static str {
        match self {
            Value::Bool(_) => "bool",
            Value::I8(_) => "i8",
            Value::I16(_) => "i16",
            Value::I32(_) => "i32",
            Value::I64(_) => "i64",
            Value::U8(_) => "u8",
            Value::U16(_) => "u16",
            Value::U32(_) => "u32",
            Value::U64(_) => "u64",
            Value::F32(_) => "f32",
            Value::F64(_) => "f64",
            Value::Str(_) => "string",
            Value::Bytes(_) => "bytes",
            Value::Seq(_) => "seq",
            Value::Opt(_) => "opt",
            Value::Record(_) => "record",
        }
    }

    pub fn some(inner: Value) -> Self {
        Value::Opt(Some(Box::new(inner)))
    }

    pub fn none() -> Self {
        Value::Opt(None)
    }
}
