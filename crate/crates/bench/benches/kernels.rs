use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use muskat_bench::{default_mesh, worked_quantities};
use muskat_core::elliptic::{solve_initial_pressure, PressureData};
use muskat_core::geometry::DomainSpec;
use muskat_core::spectral::{eval_factorization, find_zeros};
use muskat_core::weights::{global_weights, InterfaceAngle};
use muskat_core::{Complex64, Kind};

fn spectral(c: &mut Criterion) {
    let sq = worked_quantities();
    c.bench_function("find_zeros plus", |b| b.iter(|| find_zeros(Kind::Plus, black_box(&sq)).unwrap()));
    let zs = find_zeros(Kind::Minus, &sq).unwrap();
    let z = Complex64::new(0.7, 0.3);
    c.bench_function("factorization N=1e4", |b| b.iter(|| eval_factorization(Kind::Minus, black_box(z), &sq, &zs, 10_000)));
}

fn weights(c: &mut Criterion) {
    let a = InterfaceAngle { q: 1, p: 3 };
    c.bench_function("global_weights pi/3", |b| b.iter(|| global_weights(a, a, [0.0, 0.0], 0.5, black_box(3.5)).unwrap()));
}

fn elliptic(c: &mut Criterion) {
    let mut g = c.benchmark_group("initial pressure");
    g.sample_size(10);
    let spec = DomainSpec::default();
    for level in [0, 1] {
        let (_, mesh) = default_mesh(level);
        g.bench_function(format!("level {level}"), |b| {
            b.iter(|| solve_initial_pressure(&spec, &mesh, PressureData::default(), 1.0, 0.5).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, spectral, weights, elliptic);
criterion_main!(benches);
