use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use jcas_core::array::{build_operators, ArrayConfig, Target};
use jcas_core::channel::{generate_channels, ChannelConfig};
use jcas_core::exec::Execution;
use jcas_core::oracle::{simplex_grid_opt, OracleBudget};
use jcas_core::pareto::{run_sweep, uniform_alphas, ParamGrid, SweepSpec};
use jcas_core::C64;
use std::hint::black_box;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("pareto_sweep");
    group.sample_size(10);
    for (name, exec) in MODES {
        let spec = SweepSpec {
            alphas: uniform_alphas(21),
            param_grid: ParamGrid {
                k: vec![2, 4],
                n_tx: vec![8, 10],
                ..ParamGrid::default()
            },
            execution: exec,
            ..SweepSpec::default()
        };
        group.bench_with_input(BenchmarkId::new(name, "4 cells x 21"), &spec, |b, s| {
            b.iter(|| black_box(run_sweep(s).unwrap()))
        });
    }
    group.finish();
}

fn grid_oracle(c: &mut Criterion) {
    let array = ArrayConfig::half_wavelength(6, 6).unwrap();
    let cs = generate_channels(&ChannelConfig::standard(3, 4), &array).unwrap();
    let ops = build_operators(&array, &Target::new(0.2, C64::new(1.0, 0.0), 1.0).unwrap());
    let budget = OracleBudget::default();
    let mut group = c.benchmark_group("simplex_grid");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, "K=3 g=120"), |b| {
            b.iter(|| {
                black_box(simplex_grid_opt(&cs.h, &ops.m, 10.0, 0.5, 120, &budget, exec).unwrap())
            })
        });
    }
    group.finish();
}

criterion_group!(benches, sweep, grid_oracle);
criterion_main!(benches);
