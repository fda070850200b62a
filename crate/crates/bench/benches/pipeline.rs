use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use mopkit::builtin::builtin;
use mopkit::factorization::gauss_borel;
use mopkit::suites::{run_suite, Suite, Tolerances};
use mopkit::Pipeline;
use mopkit_bench::{moments, pipeline, SPECS};
use num_complex::Complex64;

fn build(c: &mut Criterion) {
    let mut g = c.benchmark_group("pipeline_build");
    g.sample_size(10);
    for name in SPECS {
        let spec = builtin(name).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(name), &spec, |b, spec| {
            b.iter(|| Pipeline::with_defaults(black_box(spec.clone()), 6).unwrap())
        });
    }
    g.finish();
}

fn factorization(c: &mut Criterion) {
    let mut g = c.benchmark_group("gauss_borel");
    for n in [4, 8, 12] {
        let md = moments("hermite-nilpotent", n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &md, |b, md| b.iter(|| gauss_borel(black_box(md), n).unwrap()));
    }
    g.finish();
}

fn cauchy(c: &mut Criterion) {
    let mut g = c.benchmark_group("cauchy_values");
    g.sample_size(20);
    let z = Complex64::new(0.3, 0.7);
    for name in SPECS {
        let p = pipeline(name, 6);
        g.bench_function(*name, |b| b.iter(|| p.cauchy_values(black_box(z), 0).unwrap()));
    }
    g.finish();
}

fn suite(c: &mut Criterion) {
    let p = pipeline("hermite-scalar", 4);
    let tol = Tolerances::default();
    let mut g = c.benchmark_group("suite");
    g.sample_size(10);
    g.bench_function("recurrence", |b| b.iter(|| run_suite(&p, Suite::Recurrence, &tol)));
    g.finish();
}

criterion_group!(benches, build, factorization, cauchy, suite);
criterion_main!(benches);
