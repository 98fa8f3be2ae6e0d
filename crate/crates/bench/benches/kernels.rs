use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use revdiff_core::entropy::{kl_histogram, HistogramConfig};
use revdiff_core::sampler::{reverse_step, ScoreField};
use revdiff_core::score_net::{Activation, MlpScore};
use revdiff_core::{ExactMixtureScore, ForwardProcess, GammaSchedule, GaussianMixture};

fn reverse_step_bench(c: &mut Criterion) {
    let data = GaussianMixture::default_dataset();
    let edm = ForwardProcess::edm();
    let score = ExactMixtureScore::new(&data, &edm);
    let mut pop = data.diffuse(&edm, 0.5).sample(100_000, 1).unwrap();
    pop.forward_time = 0.5;
    let sched = GammaSchedule::Constant { gamma: 1.0 };
    c.bench_function("reverse_step 1e5 particles", |b| {
        b.iter(|| reverse_step(black_box(&pop), &edm, &score, &sched, 0.5, 0.499, 7).unwrap())
    });
}

fn histogram_bench(c: &mut Criterion) {
    let data = GaussianMixture::default_dataset();
    let p = data.sample(100_000, 1).unwrap();
    let q = data.sample(100_000, 2).unwrap();
    let cfg = HistogramConfig::default();
    c.bench_function("kl_histogram 1e5 vs 1e5", |b| {
        b.iter(|| kl_histogram(black_box(&p), black_box(&q), &cfg).unwrap())
    });
}

fn mlp_bench(c: &mut Criterion) {
    let net = MlpScore::new(1, &[100, 100, 100], Activation::Silu, 0).unwrap();
    let xs: Vec<f64> = (0..256).map(|i| i as f64 / 128.0 - 1.0).collect();
    c.bench_function("mlp eval_batch 256 rows", |b| {
        b.iter_batched(
            || vec![0.0; xs.len()],
            |mut out| {
                net.eval_batch(black_box(&xs), 0.3, &mut out);
                out
            },
            BatchSize::SmallInput,
        )
    });
}

fn mixture_score_bench(c: &mut Criterion) {
    let data = GaussianMixture::two_d_preset();
    let edm = ForwardProcess::edm();
    let p = data.diffuse(&edm, 0.2);
    let x = [0.3, -0.1];
    let mut out = [0.0; 2];
    let mut scratch = [0.0; 2];
    c.bench_function("mixture score_into 2-D", |b| {
        b.iter(|| {
            p.score_into(black_box(&x), &mut out, &mut scratch);
            out
        })
    });
}

criterion_group!(kernels, reverse_step_bench, histogram_bench, mlp_bench, mixture_score_bench);
criterion_main!(kernels);
