//! Right-hand side and norm kernels on a single-worker rayon pool versus
//! the global pool. Build with `--no-default-features` for the purely
//! sequential code path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use foch_core::equation::rhs_u;
use foch_core::littlewood_paley::{besov_norm, build_partition, BesovIndex};
use foch_core::{GridSpec, SpectralField};

fn field(points: usize) -> SpectralField {
    SpectralField::from_fn(GridSpec::full(200.0, points).unwrap(), |x| {
        (-x * x).exp() * (1.0 + 0.3 * (5.0 * x).sin())
    })
}

#[cfg(feature = "parallel")]
fn pools() -> Vec<(&'static str, Option<rayon::ThreadPool>)> {
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    vec![("one_thread", Some(single)), ("global", None)]
}

#[cfg(not(feature = "parallel"))]
fn pools() -> Vec<(&'static str, Option<()>)> {
    vec![("sequential", None)]
}

#[cfg(feature = "parallel")]
fn within<R: Send>(pool: &Option<rayon::ThreadPool>, f: impl FnOnce() -> R + Send) -> R {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn within<R>(_: &Option<()>, f: impl FnOnce() -> R) -> R {
    f()
}

fn rhs(c: &mut Criterion) {
    let mut group = c.benchmark_group("rhs_u");
    group.sample_size(20);
    for points in [1usize << 14, 1 << 17] {
        let u = field(points);
        for (name, pool) in pools() {
            group.bench_with_input(BenchmarkId::new(name, points), &u, |b, u| {
                b.iter(|| within(&pool, || rhs_u(u).unwrap()))
            });
        }
    }
    group.finish();
}

fn besov(c: &mut Criterion) {
    let mut group = c.benchmark_group("besov_b0_inf_inf");
    group.sample_size(20);
    let u = field(1 << 17);
    let part = build_partition(*u.grid()).unwrap();
    for (name, pool) in pools() {
        group.bench_function(name, |b| {
            b.iter(|| within(&pool, || besov_norm(&u, BesovIndex::zero_inf_inf(), &part).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, rhs, besov);
criterion_main!(benches);
