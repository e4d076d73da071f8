use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use sve_core::coefficient::CoefficientSpec;
use sve_core::kernel::KernelParams;
use sve_core::montecarlo::{sample_coupled, sample_rate, PathRange};
use sve_core::parallel::ExecMode;
use sve_core::solver::{CoupledScheme, TermSelection};

fn modes() -> Vec<ExecMode> {
    if cfg!(feature = "parallel") {
        vec![ExecMode::Sequential, ExecMode::Parallel]
    } else {
        vec![ExecMode::Sequential]
    }
}

fn monte_carlo(c: &mut Criterion) {
    let sigma = CoefficientSpec::Affine { a: 1.0, b: 0.3 };
    let params = KernelParams::unit(0.25, 64).unwrap();
    let scheme = CoupledScheme::new(&params, 8).unwrap();

    let mut group = c.benchmark_group("coupled");
    group.sample_size(10);
    for mode in modes() {
        group.bench_function(format!("{mode:?}"), |b| {
            b.iter(|| {
                let s = sample_coupled(
                    &scheme,
                    &sigma,
                    1.0,
                    7,
                    PathRange::new(0, 512),
                    64,
                    TermSelection::ALL,
                    mode,
                )
                .unwrap();
                black_box(s.y.len())
            })
        });
    }
    group.finish();

    let mut group = c.benchmark_group("rate");
    group.sample_size(10);
    for mode in modes() {
        group.bench_function(format!("{mode:?}"), |b| {
            b.iter(|| {
                let s = sample_rate(
                    &params,
                    &sigma,
                    1.0,
                    &[16, 32, 64],
                    8,
                    1.0,
                    7,
                    PathRange::new(0, 256),
                    mode,
                )
                .unwrap();
                black_box(s.y.len())
            })
        });
    }
    group.finish();
}

criterion_group!(benches, monte_carlo);
criterion_main!(benches);
