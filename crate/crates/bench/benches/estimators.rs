use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gensurp_bench::fixture;
use gensurp_core::analysis::bootstrap_scores_seeded;
use gensurp_core::{simulate_batch, Estimator, GsModel, LanguageModel, Warping, DEFAULT_EPSILON};

fn model(name: &str) -> GsModel {
    GsModel::from_name(name, DEFAULT_EPSILON).unwrap()
}

pub fn exact(c: &mut Criterion) {
    let (bed, items) = fixture(20);
    let rep = bed.embeddings.bind(bed.model.alphabet());
    let est = Estimator::new(&bed.model, Some(&rep));
    let item = &items[5];
    let mut group = c.benchmark_group("exact");
    for name in ["surprisal", "exp_next_surprisal", "exp_next_info_value", "pmi"] {
        let m = model(name);
        group.bench_function(name, |b| {
            b.iter(|| est.estimate_exact(&m, black_box(&item.target), black_box(&item.context)).unwrap())
        });
    }
    group.finish();
}

pub fn sampled(c: &mut Criterion) {
    let (bed, items) = fixture(20);
    let rep = bed.embeddings.bind(bed.model.alphabet());
    let est = Estimator::new(&bed.model, Some(&rep));
    let item = &items[5];
    let mut group = c.benchmark_group("mc");
    group.sample_size(20);
    for name in ["probability", "information_value", "entropy", "exp_info_value"] {
        let m = model(name);
        for n in [16, 128, 512] {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                b.iter(|| est.estimate_mc(&m, &item.target, &item.context, black_box(n), 5, 7).unwrap())
            });
        }
    }
    group.finish();
}

pub fn sampling(c: &mut Criterion) {
    let (bed, items) = fixture(20);
    let item = &items[5];
    c.bench_function("simulate_batch 512x5", |b| {
        b.iter(|| simulate_batch(&bed.model, black_box(&item.context), 512, 5, 7).unwrap())
    });
}

pub fn bootstrap(c: &mut Criterion) {
    let scores: Vec<f64> = (0..512).map(|i| (i as f64 * 0.37).sin().abs()).collect();
    c.bench_function("bootstrap 512 scores x 1000", |b| {
        b.iter(|| bootstrap_scores_seeded(black_box(&scores), 1000, Warping::Identity, 3))
    });
}

criterion_group!(benches, exact, sampled, sampling, bootstrap);
criterion_main!(benches);
