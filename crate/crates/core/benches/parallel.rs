//! Element loops on one thread versus the full rayon pool.
//!
//! Run with `cargo bench -p femcont --bench parallel`. Building with
//! `--no-default-features` makes both variants sequential.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use femcont::fem::estimator::{error_indicator, DEFAULT_ALPHA, DEFAULT_BETA};
use femcont::problem::{Params, System};
use femcont::problems::preset;
use std::hint::black_box;

fn bratu(h: f64) -> (System, Vec<f64>, f64) {
    let mut p = Params::new();
    p.insert("h".into(), h);
    let (sys, st) = preset("bratu").unwrap().setup(&p, None).unwrap();
    // a non-constant field so the jump terms are not all zero
    let u: Vec<f64> = sys
        .mesh()
        .points()
        .iter()
        .map(|q| 0.3 + (3.0 * q[0]).cos() * (2.0 * q[1]).sin())
        .collect();
    (sys, u, st.lam)
}

fn pools() -> Vec<(usize, rayon::ThreadPool)> {
    let max = rayon::current_num_threads();
    let mut sizes = vec![1];
    if max > 1 {
        sizes.push(max);
    }
    sizes
        .into_iter()
        .map(|n| (n, rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap()))
        .collect()
}

fn element_loops(c: &mut Criterion) {
    let (sys, u, lam) = bratu(0.0125);
    let mut g = c.benchmark_group("bratu_81x81");
    g.sample_size(20);
    for (threads, pool) in pools() {
        g.bench_with_input(BenchmarkId::new("residual", threads), &threads, |b, _| {
            pool.install(|| b.iter(|| sys.residual(black_box(&u), lam).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("jacobian", threads), &threads, |b, _| {
            pool.install(|| b.iter(|| sys.assembled_gu(black_box(&u), lam).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("error_indicator", threads), &threads, |b, _| {
            let coeffs = sys.problem.coefficients(&sys.space, &u, lam).unwrap();
            pool.install(|| {
                b.iter(|| error_indicator(sys.mesh(), &coeffs, black_box(&u), DEFAULT_ALPHA, DEFAULT_BETA).unwrap())
            })
        });
    }
    g.finish();

    let (sys, u, lam) = bratu(0.05);
    let mut g = c.benchmark_group("bratu_21x21");
    g.sample_size(10);
    for (threads, pool) in pools() {
        g.bench_with_input(BenchmarkId::new("fd_jacobian", threads), &threads, |b, _| {
            pool.install(|| b.iter(|| sys.jacobian(black_box(&u), lam, 3).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, element_loops);
criterion_main!(benches);
