//! Fixtures shared by the criterion benches.

use offload_core::wireformat::{Schema, Value, Wire};

/// `n` scrambled `u32`s.
pub fn u32_array(n: u32) -> Vec<u32> {
    (0..n).map(|i| i.wrapping_mul(2_654_435_761)).collect()
}

/// A sequence of `n` small records mixing strings, floats and options.
pub fn records(n: usize) -> (Value, Schema) {
    let schema = Schema::seq(Schema::record([
        ("id", Schema::U64),
        ("label", Schema::Str),
        ("weight", Schema::F64),
        ("parent", Schema::opt(Schema::U32)),
    ]));
    let value = Value::Seq(
        (0..n)
            .map(|i| {
                Value::Record(vec![
                    (i as u64).to_value(),
                    format!("node-{i}").to_value(),
                    (i as f64 * 0.5).to_value(),
                    if i % 3 == 0 { Value::none() } else { Value::some((i as u32 / 2).to_value()) },
                ])
            })
            .collect(),
    );
    (value, schema)
}

#[cfg(test)]
mod tests {
    use super::*;
    use offload_core::wireformat::{decode_value, encode_value};

    #[test]
    fn records_fixture_matches_its_schema() {
        let (v, s) = records(10);
        let bytes = encode_value(&v, &s).unwrap();
        assert_eq!(decode_value(&bytes, &s).unwrap(), v);
    }
}
