//! Sequential against rayon execution for the two hot loops: the Monte
//! Carlo error oracle and independent simulation trials.

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use resalloc::channel::RadioParams;
use resalloc::par::Execution;
use resalloc::prediction::oracle::monte_carlo_error_oracle;
use resalloc::prediction::PredictionDistribution::{Gaussian, Uniform};
use resalloc::prediction::{BandwidthPrediction, GainPrediction, TrueFrameState};
use resalloc::simulator::{run_trials, ScenarioConfig};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn oracle(c: &mut Criterion) {
    let radio = RadioParams::new(8, 10e6, 40.0, 4e-21).unwrap();
    let bw = BandwidthPrediction::with_cv(1e6, 0.2, Gaussian).unwrap();
    let gain = GainPrediction::with_delta_ratio(1e-12, 1.0, Uniform).unwrap();
    let truth = TrueFrameState::new(1e6, 1e-12, 0.2).unwrap();
    let mut g = c.benchmark_group("oracle_100k");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| monte_carlo_error_oracle(&bw, &gain, &truth, 100, &radio, 100_000, 1, black_box(exec)).unwrap())
        });
    }
    g.finish();
}

fn trials(c: &mut Criterion) {
    let mut cfg = ScenarioConfig {
        trials: 4,
        ..ScenarioConfig::default()
    };
    cfg.arrivals.rate_per_s = 0.25;
    let mut g = c.benchmark_group("trials_4");
    g.sample_size(10).measurement_time(Duration::from_secs(20));
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_trials(&cfg, black_box(exec)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, oracle, trials);
criterion_main!(benches);
