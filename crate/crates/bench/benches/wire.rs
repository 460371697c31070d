use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use offload_bench::{records, u32_array};
use offload_core::wireformat::{
    self, encode_json_value, encode_value, unwrap_base64_json, wrap_base64_json, Envelope, Wire,
};

fn encode_modes(c: &mut Criterion) {
    let mut group = c.benchmark_group("encode_u32_array");
    for n in [1_000u32, 100_000, 1_000_000] {
        let xs = u32_array(n);
        let value = xs.to_value();
        let schema = <Vec<u32>>::schema();
        group.throughput(Throughput::Bytes(u64::from(n) * 4));
        group.bench_with_input(BenchmarkId::new("binary", n), &xs, |b, xs| b.iter(|| wireformat::to_bytes(xs)));
        group.bench_with_input(BenchmarkId::new("base64", n), &xs, |b, xs| {
            b.iter(|| wrap_base64_json(&Envelope::request(wireformat::to_bytes(xs)).to_bytes()))
        });
        group.bench_with_input(BenchmarkId::new("json", n), &value, |b, v| {
            b.iter(|| encode_json_value(v, &schema).unwrap())
        });
    }
    group.finish();
}

fn decode_carrier(c: &mut Criterion) {
    let xs = u32_array(100_000);
    let carrier = wrap_base64_json(&Envelope::request(wireformat::to_bytes(&xs)).to_bytes());
    c.bench_function("decode_carrier_u32x100k", |b| {
        b.iter(|| {
            let env = Envelope::from_bytes(&unwrap_base64_json(&carrier).unwrap()).unwrap();
            wireformat::from_bytes::<Vec<u32>>(&env.body).unwrap()
        })
    });
}

fn nested_records(c: &mut Criterion) {
    let (value, schema) = records(10_000);
    c.bench_function("encode_records_10k", |b| b.iter(|| encode_value(&value, &schema).unwrap()));
}

criterion_group!(benches, encode_modes, decode_carrier, nested_records);
criterion_main!(benches);
