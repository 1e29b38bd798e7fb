use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use spme_bench::bump_fixture;
use spme_core::extinction::{hitting_time_mc, Barrier, Convention, HittingMcConfig};
use spme_core::{mollify, sample_path, solve, stable_dt, step};

fn solver_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("solver_step");
    for n in [128, 512, 2048] {
        let (cfg, u) = bump_fixture(n, 0.01);
        let dt = stable_dt(&u, 3.0, &cfg);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| step(black_box(&u), 3.0, &cfg, dt).unwrap())
        });
    }
    group.finish();
}

fn pathwise_solve(c: &mut Criterion) {
    let (cfg, u) = bump_fixture(128, 0.01);
    let u0 = u.minus_floor(cfg.epsilon);
    let path = sample_path(cfg.t_end, cfg.epsilon / 4.0, 1).unwrap();
    let mp = mollify(&path, cfg.epsilon).unwrap();
    c.bench_function("solve_n128_t0.1", |b| b.iter(|| solve(&cfg, &mp, black_box(&u0), 0.05).unwrap()));
}

fn mollification(c: &mut Criterion) {
    let path = sample_path(1.0, 1e-4, 3).unwrap();
    let mut group = c.benchmark_group("mollify");
    for eps in [1e-3, 1e-2] {
        group.bench_with_input(BenchmarkId::from_parameter(eps), &eps, |b, &eps| {
            b.iter(|| mollify(black_box(&path), eps).unwrap())
        });
    }
    group.finish();
}

fn hitting_monte_carlo(c: &mut Criterion) {
    let cfg = HittingMcConfig {
        barrier: Barrier::new(2.0, 2.3, 2.0, 1.0, Convention::Heuristic).unwrap(),
        n_paths: 1000,
        horizon: 1e4,
        dt0: 1e-3,
        growth: 0.01,
        master_seed: 5,
    };
    c.bench_function("hitting_mc_1000_paths", |b| b.iter(|| hitting_time_mc(black_box(&cfg)).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = solver_step, pathwise_solve, mollification, hitting_monte_carlo
}
criterion_main!(benches);
