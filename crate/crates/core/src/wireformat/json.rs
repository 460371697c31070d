//! Canonical JSON mapping.
//!
//! Integers are JSON numbers rendered in full digits and must decode from an
//! integer literal (no float transit). Byte sequences are Base64 strings,
//! records are objects keyed by field name, sequences are arrays and an
//! absent optional is `null`. A present optional whose payload is itself
//! optional is wrapped in a one-element array so `Some(None)` and `None`
//! stay distinct.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde_json::{Map, Number, Value as Json};

use super::error::{EncodeError, JsonDecodeError};
use super::schema::{Schema, Value};

pub fn encode_json_value(value: &Value, schema: &Schema) -> Result<String, EncodeError> {
    let json = to_json(value, schema, &mut String::from("$"))?;
    Ok(serde_json::to_string(&json).expect("serde_json::Value always serializes"))
}

pub fn decode_json_value(text: &str, schema: &Schema) -> Result<Value, JsonDecodeError> {
    let json: Json = serde_json::from_str(text)
        .map_err(|e| JsonDecodeError { path: "$".into(), message: e.to_string() })?;
    from_json(&json, schema, &mut String::from("$"))
}

fn float(path: &str, v: f64, schema: &Schema) -> Result<Json, EncodeError> {
    Number::from_f64(v).map(Json::Number).ok_or_else(|| EncodeError {
        path: path.to_owned(),
        expected: format!("finite {schema}"),
        found: v.to_string(),
    })
}

fn to_json(value: &Value, schema: &Schema, path: &mut String) -> Result<Json, EncodeError> {
    Ok(match (schema, value) {
        (Schema::Bool, Value::Bool(b)) => Json::Bool(*b),
        (Schema::I8, Value::I8(v)) => Json::from(*v),
        (Schema::I16, Value::I16(v)) => Json::from(*v),
        (Schema::I32, Value::I32(v)) => Json::from(*v),
        (Schema::I64, Value::I64(v)) => Json::from(*v),
        (Schema::U8, Value::U8(v)) => Json::from(*v),
        (Schema::U16, Value::U16(v)) => Json::from(*v),
        (Schema::U32, Value::U32(v)) => Json::from(*v),
        (Schema::U64, Value::U64(v)) => Json::from(*v),
        (Schema::F32, Value::F32(v)) => float(path, f64::from(*v), schema)?,
        (Schema::F64, Value::F64(v)) => float(path, *v, schema)?,
        (Schema::Str, Value::Str(s)) => Json::String(s.clone()),
        (Schema::Bytes, Value::Bytes(b)) => Json::String(STANDARD.encode(b)),
        (Schema::Seq(inner), Value::Seq(items)) => {
            let base = path.len();
            let mut out = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                path.push_str(&format!("[{i}]"));
                out.push(to_json(item, inner, path)?);
                path.truncate(base);
            }
            Json::Array(out)
        }
        (Schema::Opt(_), Value::Opt(None)) => Json::Null,
        (Schema::Opt(inner), Value::Opt(Some(v))) => {
            path.push('?');
            let payload = to_json(v, inner, path)?;
            path.pop();
            if matches!(**inner, Schema::Opt(_)) {
                Json::Array(vec![payload])
            } else {
                payload
            }
        }
        (Schema::Record(fields), Value::Record(values)) if fields.len() == values.len() => {
            let base = path.len();
            let mut map = Map::with_capacity(fields.len());
            for (field, v) in fields.iter().zip(values) {
                path.push('.');
                path.push_str(&field.name);
                map.insert(field.name.clone(), to_json(v, &field.schema, path)?);
                path.truncate(base);
            }
            Json::Object(map)
        }
        _ => {
            return Err(EncodeError {
                path: path.clone(),
                expected: schema.to_string(),
                found: value.kind().to_owned(),
            })
        }
    })
}

fn json_kind(json: &Json) -> &'static str {
    match json {
        Json::Null => "null",
        Json::Bool(_) => "bool",
        Json::Number(n) if n.is_f64() => "float",
        Json::Number(_) => "integer",
        Json::String(_) => "string",
        Json::Array(_) => "array",
        Json::Object(_) => "object",
    }
}

fn from_json(json: &Json, schema: &Schema, path: &mut String) -> Result<Value, JsonDecodeError> {
    let fail = |path: &str, message: String| JsonDecodeError { path: path.to_owned(), message };
    let mismatch = |path: &str| fail(path, format!("expected {schema}, found {}", json_kind(json)));

    macro_rules! int {
        ($variant:ident, $ty:ty) => {{
            let n = match json {
                Json::Number(n) if !n.is_f64() => n,
                _ => return Err(mismatch(path)),
            };
            let v = if let Some(u) = n.as_u64() {
                <$ty>::try_from(u).ok()
            } else {
                n.as_i64().and_then(|i| <$ty>::try_from(i).ok())
            };
            Value::$variant(v.ok_or_else(|| fail(path, format!("{n} out of range for {schema}")))?)
        }};
    }

    Ok(match schema {
        Schema::Bool => match json {
            Json::Bool(b) => Value::Bool(*b),
            _ => return Err(mismatch(path)),
        },
        Schema::I8 => int!(I8, i8),
        Schema::I16 => int!(I16, i16),
        Schema::I32 => int!(I32, i32),
        Schema::I64 => int!(I64, i64),
        Schema::U8 => int!(U8, u8),
        Schema::U16 => int!(U16, u16),
        Schema::U32 => int!(U32, u32),
        Schema::U64 => int!(U64, u64),
        Schema::F32 => match json.as_f64() {
            Some(v) => Value::F32(v as f32),
            None => return Err(mismatch(path)),
        },
        Schema::F64 => match json.as_f64() {
            Some(v) => Value::F64(v),
            None => return Err(mismatch(path)),
        },
        Schema::Str => match json {
            Json::String(s) => Value::Str(s.clone()),
            _ => return Err(mismatch(path)),
        },
        Schema::Bytes => match json {
            Json::String(s) => Value::Bytes(
                STANDARD.decode(s).map_err(|e| fail(path, format!("invalid base64: {e}")))?,
            ),
            _ => return Err(mismatch(path)),
        },
        Schema::Seq(inner) => match json {
            Json::Array(items) => {
                let base = path.len();
                let mut out = Vec::with_capacity(items.len());
                for (i, item) in items.iter().enumerate() {
                    path.push_str(&format!("[{i}]"));
                    out.push(from_json(item, inner, path)?);
                    path.truncate(base);
                }
                Value::Seq(out)
            }
            _ => return Err(mismatch(path)),
        },
        Schema::Opt(inner) => match json {
            Json::Null => Value::none(),
            _ if matches!(**inner, Schema::Opt(_)) => match json {
                Json::Array(items) if items.len() == 1 => {
                    path.push('?');
                    let v = from_json(&items[0], inner, path)?;
                    path.pop();
                    Value::some(v)
                }
                _ => return Err(fail(path, "nested optional must be null or a one-element array".into())),
            },
            _ => {
                path.push('?');
                let v = from_json(json, inner, path)?;
                path.pop();
                Value::some(v)
            }
        },
        Schema::Record(fields) => match json {
            Json::Object(map) => {
                if let Some(extra) = map.keys().find(|k| !fields.iter().any(|f| &f.name == *k)) {
                    return Err(fail(path, format!("unknown field {extra:?}")));
                }
                let base = path.len();
                let mut out = Vec::with_capacity(fields.len());
                for field in fields {
                    path.push('.');
                    path.push_str(&field.name);
                    let item = map
                        .get(&field.name)
                        .ok_or_else(|| fail(path, "missing field".into()))?;
                    out.push(from_json(item, &field.schema, path)?);
                    path.truncate(base);
                }
                Value::Record(out)
            }
            _ => return Err(mismatch(path)),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_maps_to_object_in_field_order() {
        let schema = Schema::record([("a", Schema::U32), ("b", Schema::Str)]);
        let value = Value::Record(vec![Value::U32(1), Value::Str("x".into())]);
        assert_eq!(encode_json_value(&value, &schema).unwrap(), r#"{"a":1,"b":"x"}"#);

        let reversed = Schema::record([("b", Schema::Str), ("a", Schema::U32)]);
        let value = Value::Record(vec![Value::Str("x".into()), Value::U32(1)]);
        assert_eq!(encode_json_value(&value, &reversed).unwrap(), r#"{"b":"x","a":1}"#);
    }

    #[test]
    fn u8_sequence_is_array() {
        let value = Value::Seq(vec![Value::U8(1), Value::U8(2), Value::U8(3)]);
        assert_eq!(encode_json_value(&value, &Schema::seq(Schema::U8)).unwrap(), "[1,2,3]");
    }

    #[test]
    fn u64_two_pow_63_is_exact() {
        let v = Value::U64(1 << 63);
        let text = encode_json_value(&v, &Schema::U64).unwrap();
        assert_eq!(text, "9223372036854775808");
        assert_eq!(decode_json_value(&text, &Schema::U64).unwrap(), v);
        assert_eq!(
            decode_json_value("18446744073709551615", &Schema::U64).unwrap(),
            Value::U64(u64::MAX)
        );
    }

    #[test]
    fn integers_refuse_float_literals() {
        let err = decode_json_value("9.223372036854776e18", &Schema::U64).unwrap_err();
        assert_eq!(err.path, "$");
        assert!(err.message.contains("found float"), "{}", err.message);
        assert!(decode_json_value("1.0", &Schema::U8).is_err());
    }

    #[test]
    fn range_checks() {
        assert!(decode_json_value("256", &Schema::U8).is_err());
        assert!(decode_json_value("-1", &Schema::U64).is_err());
        assert_eq!(decode_json_value("-128", &Schema::I8).unwrap(), Value::I8(-128));
    }

    #[test]
    fn bytes_use_base64() {
        let text = encode_json_value(&Value::Bytes(b"CPLS".to_vec()), &Schema::Bytes).unwrap();
        assert_eq!(text, r#""Q1BMUw==""#);
    }

    #[test]
    fn nested_optionals_stay_distinct() {
        let schema = Schema::opt(Schema::opt(Schema::U8));
        for value in [Value::none(), Value::some(Value::none()), Value::some(Value::some(Value::U8(4)))] {
            let text = encode_json_value(&value, &schema).unwrap();
            assert_eq!(decode_json_value(&text, &schema).unwrap(), value, "{text}");
        }
    }

    #[test]
    fn errors_carry_json_path() {
        let schema = Schema::record([("xs", Schema::seq(Schema::U16))]);
        let err = decode_json_value(r#"{"xs":[1,2,"three"]}"#, &schema).unwrap_err();
        assert_eq!(err.path, "$.xs[2]");
        let err = decode_json_value(r#"{}"#, &schema).unwrap_err();
        assert_eq!(err.path, "$.xs");
        let err = decode_json_value(r#"{"xs":[],"y":0}"#, &schema).unwrap_err();
        assert!(err.message.contains("unknown field"));
    }

    #[test]
    fn non_finite_floats_are_rejected() {
        assert!(encode_json_value(&Value::F64(f64::NAN), &Schema::F64).is_err());
    }

    #[test]
    fn f32_round_trips_through_f64_text() {
        let v = Value::F32(0.1);
        let text = encode_json_value(&v, &Schema::F32).unwrap();
        assert_eq!(decode_json_value(&text, &Schema::F32).unwrap(), v);
    }
}
