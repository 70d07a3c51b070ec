use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rankmin_bench::{gaussian_problem, sampling_problem};
use rankmin_core::airls::{refactor, update_y, update_z, FactoredIterate};
use rankmin_core::irls::irls_step;
use rankmin_core::lsq::{solve_image, solve_kernel};
use rankmin_core::objective::weight;
use rankmin_core::{LsStrategy, WeightSide};

fn irls(c: &mut Criterion) {
    let problem = gaussian_problem(12, 12, 3, 64, 1).unwrap();
    let x = problem.map.min_norm_solution(&problem.y).unwrap();
    c.bench_function("weight 12x12", |b| b.iter(|| weight(&x, 1e-3, 0.0, WeightSide::Left).unwrap()));
    let w = weight(&x, 1e-3, 0.0, WeightSide::Left).unwrap();
    c.bench_function("image solve 12x12 l=64", |b| b.iter(|| solve_image(&problem, &w).unwrap()));
    c.bench_function("kernel solve 12x12 l=64", |b| b.iter(|| solve_kernel(&problem, &w, &x).unwrap()));
    c.bench_function("irls step 12x12 l=64", |b| {
        b.iter(|| irls_step(&x, 1e-3, WeightSide::Left, 0.0, LsStrategy::Auto, &problem).unwrap())
    });
}

fn airls(c: &mut Criterion) {
    let problem = sampling_problem(50, 50, 5, 2.0, 2).unwrap();
    let it = refactor(&FactoredIterate::random(50, 50, 7, 3));
    c.bench_function("airls half sweeps 50x50 R=7", |b| {
        b.iter_batched(
            || it.clone(),
            |it| {
                let z = update_z(&it, 1e-2, 0.0, 1.0, &problem).unwrap();
                let next = refactor(&FactoredIterate { z, ..it });
                update_y(&next, 1e-2, 0.0, 1.0, &problem).unwrap()
            },
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, irls, airls);
criterion_main!(benches);
