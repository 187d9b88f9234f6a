//! Data-parallel core vs. sequential fallback.
//!
//! The two workloads that dominate wall time — trade-off table
//! construction and exhaustive keyspace sweeps — exist in both a rayon
//! version (`parallel` feature, default) and a plain sequential one.
//! This suite measures both on the same inputs so the speedup (or lack
//! of one on small inputs) is a number, not a belief.
//!
//! Scaled down from the acceptance sizes to keep a full run short:
//! 2^18 keys instead of 2^20, quarter-size tables.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use gsmlab_core::attacks::{
    search_fingerprint, search_keyspace, search_keyspace_sequential, tmto_build,
    tmto_build_sequential, TmtoParams,
};
use gsmlab_core::cipher::CipherSuite;

const KEYSPACE_BITS: u32 = 18;
const CHAIN_LENGTH: u32 = 128;
const CHAINS: u32 = 2048;

fn bench_table_build(c: &mut Criterion) {
    let mut g = c.benchmark_group("table_build_128x2048_over_2e18");
    g.sample_size(10);
    g.bench_function("parallel", |b| {
        b.iter(|| {
            let params = TmtoParams::new(CipherSuite::A51, KEYSPACE_BITS, CHAIN_LENGTH, CHAINS);
            black_box(tmto_build(black_box(params)).unwrap())
        })
    });
    g.bench_function("sequential", |b| {
        b.iter(|| {
            let params = TmtoParams::new(CipherSuite::A51, KEYSPACE_BITS, CHAIN_LENGTH, CHAINS);
            black_box(tmto_build_sequential(black_box(params)).unwrap())
        })
    });
    g.finish();
}

fn bench_keyspace_search(c: &mut Criterion) {
    // 16 planted keys, one sweep matching all of them.
    let fingerprints: Vec<u64> = (0..16u64)
        .map(|i| search_fingerprint(CipherSuite::A51, i * 12_289 + 7))
        .collect();

    let mut g = c.benchmark_group("keyspace_sweep_16_targets_over_2e18");
    g.sample_size(10);
    g.bench_function("parallel", |b| {
        b.iter(|| {
            black_box(search_keyspace(
                CipherSuite::A51,
                KEYSPACE_BITS,
                black_box(&fingerprints),
            ))
        })
    });
    g.bench_function("sequential", |b| {
        b.iter(|| {
            black_box(search_keyspace_sequential(
                CipherSuite::A51,
                KEYSPACE_BITS,
                black_box(&fingerprints),
            ))
        })
    });
    g.finish();
}

criterion_group!(benches, bench_table_build, bench_keyspace_search);
criterion_main!(benches);
