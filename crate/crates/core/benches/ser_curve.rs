use std::hint::black_box;

use aloe_ser::estimators::Method;
use aloe_ser::exec::Execution;
use aloe_ser::geometry::{build_improper, build_qam};
use aloe_ser::harness::{build_cells, rrmse_study, ser_curve_with_cells, FacetSet, LinkConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [
    ("parallel", Execution::Parallel),
    ("sequential", Execution::Sequential),
];

fn bench_ser_curve(c: &mut Criterion) {
    let mut group = c.benchmark_group("ser_curve");
    for m in [16, 64] {
        let constellation = build_qam(m).unwrap();
        let cells = build_cells(&constellation, FacetSet::Minimal).unwrap();
        let snr: Vec<f64> = (0..=12).map(|i| 2.0 * i as f64).collect();
        for (name, exec) in MODES {
            let mut cfg = LinkConfig::new(constellation.clone(), snr.clone(), 1000)
                .with_methods(&[Method::Aloe]);
            cfg.execution = exec;
            group.bench_with_input(
                BenchmarkId::new(name, format!("{m}-QAM")),
                &cfg,
                |b, cfg| b.iter(|| ser_curve_with_cells(black_box(cfg), &cells, 1).unwrap()),
            );
        }
    }
    group.finish();
}

fn bench_rrmse_study(c: &mut Criterion) {
    let mut group = c.benchmark_group("rrmse_study");
    group.sample_size(10);
    let constellation = build_improper(64, 0.8).unwrap();
    for (name, exec) in MODES {
        let mut cfg = LinkConfig::new(constellation.clone(), vec![10.0, 16.0, 22.0], 20);
        cfg.is_alpha_grid = vec![1.0, 3.0];
        cfg.execution = exec;
        group.bench_function(BenchmarkId::new(name, "improper-64"), |b| {
            b.iter(|| rrmse_study(black_box(&cfg), 50, 3).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_ser_curve, bench_rrmse_study);
criterion_main!(benches);
