use revdiff_core::entropy::{kl_gaussian, kl_histogram, kl_mixtures_1d, HistogramConfig};
use revdiff_core::{Error, GaussianMixture, ParticlePopulation};

fn draws(mean: Vec<f64>, std: f64, n: usize, seed: u64) -> ParticlePopulation {
    GaussianMixture::gaussian(mean, std).unwrap().sample(n, seed).unwrap()
}

#[test]
fn histogram_tracks_closed_form_in_both_directions() {
    let p = draws(vec![0.0], 1.0, 100_000, 1);
    let q = draws(vec![0.5], 1.2, 100_000, 2);
    let cfg = HistogramConfig::default();
    let fwd = kl_histogram(&p, &q, &cfg).unwrap().value;
    let rev = kl_histogram(&q, &p, &cfg).unwrap().value;
    let fwd_exact = kl_gaussian(0.0, 1.0, 0.5, 1.44).unwrap();
    let rev_exact = kl_gaussian(0.5, 1.44, 0.0, 1.0).unwrap();
    assert!((fwd - fwd_exact).abs() < 5e-3, "{fwd} vs {fwd_exact}");
    assert!((rev - rev_exact).abs() < 5e-3, "{rev} vs {rev_exact}");
    // the two directions differ by far more than the estimator error
    assert!((fwd_exact - rev_exact).abs() > 0.02);
    assert!(((fwd - rev) - (fwd_exact - rev_exact)).abs() < 5e-3);
}

#[test]
fn two_dimensional_histogram() {
    let p = draws(vec![0.0, 0.0], 1.0, 200_000, 3);
    let q = draws(vec![0.4, -0.2], 1.0, 200_000, 4);
    let exact = 0.5 * (0.16 + 0.04);
    let est = kl_histogram(&p, &q, &HistogramConfig::default()).unwrap().value;
    assert!((est - exact).abs() < 0.03, "{est} vs {exact}");
}

#[test]
fn bin_averaging_reduces_spread() {
    let averaged = HistogramConfig::default();
    let single = HistogramConfig {
        window: 0,
        ..HistogramConfig::default()
    };
    let data = GaussianMixture::default_dataset();
    let mut a = Vec::new();
    let mut s = Vec::new();
    for k in 0..12u64 {
        let p = data.sample(20_000, 100 + 2 * k).unwrap();
        let q = data.sample(20_000, 101 + 2 * k).unwrap();
        a.push(kl_histogram(&p, &q, &averaged).unwrap().value);
        s.push(kl_histogram(&p, &q, &single).unwrap().value);
    }
    let sd = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    assert!(sd(&a) < sd(&s), "averaged {} vs single {}", sd(&a), sd(&s));
}

#[test]
fn quadrature_matches_gaussian_closed_form() {
    let p = GaussianMixture::gaussian(vec![0.1], 0.7).unwrap();
    let q = GaussianMixture::gaussian(vec![-0.3], 1.1).unwrap();
    let v = kl_mixtures_1d(&p, &q, 1e-12).unwrap().value;
    let exact = kl_gaussian(0.1, 0.49, -0.3, 1.21).unwrap();
    assert!((v - exact).abs() < 1e-10, "{v} vs {exact}");
}

#[test]
fn error_cases() {
    let cfg = HistogramConfig::default();
    let small = draws(vec![0.0], 1.0, 500, 1);
    let big = draws(vec![0.0], 1.0, 20_000, 2);
    assert!(matches!(
        kl_histogram(&small, &big, &cfg),
        Err(Error::InsufficientSamples { .. })
    ));
    let far = draws(vec![1000.0], 1.0, 20_000, 3);
    assert!(matches!(kl_histogram(&big, &far, &cfg), Err(Error::EmptyOverlap)));
    let flat = draws(vec![0.0, 0.0], 1.0, 20_000, 4);
    assert!(kl_histogram(&big, &flat, &cfg).is_err());
}
