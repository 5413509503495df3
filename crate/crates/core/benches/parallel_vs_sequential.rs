//! Compares the rayon-parallel representative-day solve path against the
//! always-available sequential fallback, plus the DTW kernel that
//! dominates clustering time.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use bess_core::cluster::{dtw_distance, featurize};
use bess_core::config::Config;
use bess_core::dispatch::simulate_day;
use bess_core::parallel::try_map_sequential;
#[cfg(feature = "parallel")]
use bess_core::parallel::try_map;
use bess_core::synth;

fn bench_day_solving(c: &mut Criterion) {
    let (days, _) = synth::planted_year(2021, 5, 7, 0.02);
    let days = days[..8].to_vec();
    let resolved = Config::from_toml("").unwrap().resolve().unwrap();
    let battery = resolved.battery.clone();
    let degradation = resolved.degradation.clone();

    let mut group = c.benchmark_group("solve_days");
    group.sample_size(10);
    group.bench_function("sequential", |bench| {
        bench.iter(|| {
            try_map_sequential(black_box(&days), |day| {
                simulate_day(day, &battery, &degradation)
            })
            .unwrap()
        })
    });
    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |bench| {
        bench.iter(|| {
            try_map(black_box(&days), |day| {
                simulate_day(day, &battery, &degradation)
            })
            .unwrap()
        })
    });
    group.finish();
}

fn bench_dtw(c: &mut Criterion) {
    let (days, _) = synth::planted_year(2021, 5, 13, 0.05);
    let a = featurize(&days[0]);
    let b = featurize(&days[1]);
    c.bench_function("dtw_72dim", |bench| {
        bench.iter(|| dtw_distance(black_box(&a), black_box(&b)).unwrap())
    });
}

criterion_group!(benches, bench_day_solving, bench_dtw);
criterion_main!(benches);
