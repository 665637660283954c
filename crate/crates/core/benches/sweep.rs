use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use vacneg::cmkit::LatticeConfig;
use vacneg::corrlat::{clear_cache, corr_table_with};
use vacneg::exec::Execution;
use vacneg::sweeps::evaluate_all;
use vacneg::{Mass, PrecisionPolicy};

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn batch() -> Vec<LatticeConfig> {
    let policy = PrecisionPolicy::for_target(30);
    let mut out = Vec::new();
    for d in [4, 6, 8] {
        for r in [1, 3, 6, 10] {
            for m in ["0.01", "0.5"] {
                out.push(LatticeConfig::new(d, r, m.parse().unwrap(), policy.clone()).unwrap());
            }
        }
    }
    out
}

fn sweep(c: &mut Criterion) {
    let configs = batch();
    let mut g = c.benchmark_group("evaluate_all");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter_batched(clear_cache, |_| evaluate_all(&configs, exec), BatchSize::PerIteration)
        });
    }
    g.finish();
}

fn correlators(c: &mut Criterion) {
    let policy = PrecisionPolicy::for_target(50);
    let m: Mass = "0.1".parse().unwrap();
    let mut g = c.benchmark_group("corr_table");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter_batched(clear_cache, |_| corr_table_with(64, &m, &policy, exec).unwrap(), BatchSize::PerIteration)
        });
    }
    g.finish();
}

criterion_group!(benches, sweep, correlators);
criterion_main!(benches);
