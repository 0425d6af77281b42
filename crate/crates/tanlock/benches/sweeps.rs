//! Sweep throughput: sequential vs rayon execution.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use tanlock::{
    lock_range_sweep, snr_jitter_sweep, AdaptationConfig, DividerConfig, FsmConfig, LockCriteria,
    LoopParams, RunConfig, RunStrategy, StimulusSpec, Variant,
};

fn base_config() -> RunConfig {
    let params = LoopParams::new(Variant::Ndtl, 32.0, 3.125, 0.25);
    let mut stimulus = StimulusSpec::constant(params.free_running_frequency());
    stimulus.step_value = 0.2;
    stimulus.step_time = 0.2;
    stimulus.seed = 99;
    RunConfig {
        params,
        stimulus,
        divider: DividerConfig::integer(4),
        adaptation: AdaptationConfig::default(),
        fsm: FsmConfig::default(),
        samples: 800,
    }
}

fn strategies() -> Vec<(&'static str, RunStrategy)> {
    let mut out = vec![("sequential", RunStrategy::Sequential)];
    #[cfg(feature = "parallel")]
    out.push(("parallel", RunStrategy::Parallel));
    out
}

fn bench_lock_range(c: &mut Criterion) {
    let base = base_config();
    let criteria = LockCriteria::default();
    let grid: Vec<f64> = (0..21).map(|i| 0.8 + 0.02 * i as f64).collect();
    let mut group = c.benchmark_group("lock_range_sweep");
    group.sample_size(10);
    for (label, strategy) in strategies() {
        group.bench_with_input(BenchmarkId::from_parameter(label), &strategy, |b, &s| {
            b.iter(|| lock_range_sweep(&base, &criteria, &grid, s).unwrap());
        });
    }
    group.finish();
}

fn bench_snr_sweep(c: &mut Criterion) {
    let mut template = base_config();
    template.divider = DividerConfig::fractional(4, 1, 5);
    template.stimulus.step_value = 0.3;
    let criteria = LockCriteria::default();
    let grid = vec![0.0, 10.0, 20.0, 30.0];
    let mut group = c.benchmark_group("snr_jitter_sweep");
    group.sample_size(10);
    for (label, strategy) in strategies() {
        group.bench_with_input(BenchmarkId::from_parameter(label), &strategy, |b, &s| {
            b.iter(|| snr_jitter_sweep(&template, &criteria, &grid, 4, 0.5, s).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, bench_lock_range, bench_snr_sweep);
criterion_main!(benches);
