//! Sequential vs rayon execution on the two heaviest workloads: the canonical
//! closure sweep and a two-axis wavepacket run.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use twobody::evolve::{EvolveConfig, GridSpec};
use twobody::exec::Exec;
use twobody::suites::{check_poincare, PoincareMode, SuiteConfig};

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn closure(c: &mut Criterion) {
    let cfg = SuiteConfig {
        points: 16,
        ..SuiteConfig::default()
    };
    let mut g = c.benchmark_group("canonical-closure");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| check_poincare(PoincareMode::Canonical, &cfg, exec).unwrap())
        });
    }
    g.finish();
}

fn evolve(c: &mut Criterion) {
    let mut cfg = EvolveConfig::free_packet();
    cfg.grid = GridSpec {
        active_axes: vec![4, 5],
        n: vec![128, 128],
        l: vec![400.0, 400.0],
        dt: 0.3,
        steps: 20,
    };
    cfg.packet.center_x = vec![-100.0, 0.0];
    cfg.packet.center_p = vec![1.0, 0.0];
    cfg.packet.width = vec![20.0, 20.0];
    let cfg = cfg.validated().unwrap();
    let mut g = c.benchmark_group("evolve-128x128");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| b.iter(|| cfg.run(2, exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, closure, evolve);
criterion_main!(benches);
