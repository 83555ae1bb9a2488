use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use qloop::{solve_intertwiner, verify_first_equation, Algebra, Tag, Vertical, C64};
use qloop_bench::{fixture_family, fixture_lattice};

fn intertwiner(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_intertwiner");
    for a in [Algebra::A1, Algebra::A2] {
        let fam = fixture_family(a).unwrap();
        let (z, w) = (C64::new(1.1, 0.2), C64::new(0.6, 0.0));
        g.bench_with_input(BenchmarkId::from_parameter(a), &fam, |b, fam| {
            b.iter(|| solve_intertwiner(&fam.v, &fam.v, black_box(z), black_box(w)).unwrap())
        });
    }
    g.finish();
}

fn vertical_transfer(c: &mut Criterion) {
    let mut g = c.benchmark_group("vertical_transfer");
    let fam = fixture_family(Algebra::A1).unwrap();
    for big_n in [1, 2, 3] {
        let cfg = fixture_lattice(Algebra::A1, big_n);
        let v = Vertical::new(&fam, &cfg.zeta, &cfg.xi).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(big_n), &v, |b, v| {
            b.iter(|| v.transfer(black_box(C64::new(1.0, 0.0)), Tag::V, &cfg.kappa).unwrap())
        });
    }
    g.finish();
}

fn first_equation(c: &mut Criterion) {
    let mut g = c.benchmark_group("verify_first_equation");
    g.sample_size(10);
    for (a, big_n) in [(Algebra::A1, 1), (Algebra::A1, 2), (Algebra::A2, 1)] {
        let fam = fixture_family(a).unwrap();
        let cfg = fixture_lattice(a, big_n);
        g.bench_with_input(BenchmarkId::new(a.to_string(), big_n), &cfg, |b, cfg| {
            b.iter(|| verify_first_equation(&fam, cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(kernels, intertwiner, vertical_transfer, first_equation);
criterion_main!(kernels);
