use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use schauder_core::campanato::{best_fit_error, PolyClass};
use schauder_core::fields::{random_rough_coefficients, synthetic_rhs, Pattern, RhsKind};
use schauder_core::lattice::{AnisotropicGrid, GridFunction};
use schauder_core::mollify::{build_kernel, mollify_xprime};
use schauder_core::seminorm::{seminorm_xprime, Family, PairBudget, SeminormSpec};
use schauder_core::solve::solve_elliptic_nondiv;

fn square(n: usize) -> AnisotropicGrid {
    AnisotropicGrid::cube(2, 1, -1.0, 1.0, n).unwrap()
}

fn data(n: usize) -> GridFunction {
    synthetic_rhs(&square(n), 0.5, 11, RhsKind::RoughXpp).unwrap().f
}

fn seminorms(c: &mut Criterion) {
    let mut g = c.benchmark_group("seminorm");
    for n in [33, 65, 129] {
        let u = data(n);
        g.bench_with_input(BenchmarkId::new("xprime_exact", n), &u, |b, u| b.iter(|| seminorm_xprime(u, 0.5).unwrap()));
    }
    let u = data(65);
    let full = SeminormSpec::new(Family::Full, 0, 0.5);
    g.bench_function("full_sampled_65", |b| {
        b.iter(|| full.with_budget(PairBudget::Sampled { n_pairs: 2000, seed: 1 }).evaluate(&u).unwrap())
    });
    g.finish();
}

fn mollifiers(c: &mut Criterion) {
    c.bench_function("kernel_build", |b| b.iter(|| build_kernel().unwrap()));
    let u = data(257);
    c.bench_function("mollify_xprime_257", |b| b.iter(|| mollify_xprime(&u, 0.0625).unwrap()));
}

fn campanato(c: &mut Criterion) {
    let u = data(129);
    c.bench_function("best_fit_ptilde2_129", |b| b.iter(|| best_fit_error(&u, &[64, 64], 0.25, PolyClass::Ptilde(2)).unwrap()));
}

fn solver(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_nondiv");
    g.sample_size(10);
    for n in [33, 65] {
        let grid = square(n);
        let a = random_rough_coefficients(&grid, 0.2, Pattern::XppOnly, 3).unwrap();
        let f = data(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &(a, f), |b, (a, f)| b.iter(|| solve_elliptic_nondiv(a, f, 1e-10).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, seminorms, mollifiers, campanato, solver);
criterion_main!(benches);
