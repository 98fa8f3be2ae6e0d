use ndarray::Array2;
use revdiff_core::score_net::{
    jacobian_antisymmetry, train, Activation, DsmBatch, MlpScore, TimeSampling, TrainConfig,
};
use revdiff_core::{Error, ExactMixtureScore, ForwardProcess, GaussianMixture, LinearSde, StreamRng};

fn batch_at(data: &GaussianMixture, t: f64, rows: usize, seed: u64) -> DsmBatch {
    let pop = data.sample(rows, seed).unwrap();
    let x0 = Array2::from_shape_vec((rows, data.dim()), pop.positions().to_vec()).unwrap();
    let mut rng = StreamRng::new(seed, 1);
    DsmBatch::draw(x0.view(), &ForwardProcess::edm(), t, t, TimeSampling::Uniform, &mut rng)
}

/// For `p₀ = N(0, σ₀²)` the exact score attains the DSM minimum
/// `σ₀² / (σ₀² + σ(t)²)` per dimension.
#[test]
fn exact_score_attains_dsm_minimum() {
    let s0 = 0.6;
    let data = GaussianMixture::gaussian(vec![0.0], s0).unwrap();
    let edm = ForwardProcess::edm();
    let exact = ExactMixtureScore::new(&data, &edm);
    let rows = 400_000;
    for (k, &t) in [0.01, 0.1, 0.5].iter().enumerate() {
        let b = batch_at(&data, t, rows, 10 + k as u64);
        let loss = b.loss_of(&exact);
        let sig = edm.sigma(t);
        let want = s0 * s0 / (s0 * s0 + sig * sig);
        // the per-row loss is want·χ²₁, so its standard error is want·√(2/rows)
        let se = want * (2.0 / rows as f64).sqrt();
        assert!((loss - want).abs() < 5.0 * se, "t={t}: {loss} vs {want}");
    }
}

#[test]
fn training_closes_the_gap_to_the_exact_score() {
    let data = GaussianMixture::default_dataset();
    let edm = ForwardProcess::edm();
    let exact = ExactMixtureScore::new(&data, &edm);
    let train_set = data.sample(20_000, 3).unwrap();
    let mut model = MlpScore::new(1, &[32, 32], Activation::Silu, 4).unwrap();
    let held_out = {
        let pop = data.sample(20_000, 5).unwrap();
        let x0 = Array2::from_shape_vec((20_000, 1), pop.positions().to_vec()).unwrap();
        let mut rng = StreamRng::new(6, 0);
        DsmBatch::draw(x0.view(), &edm, 1e-2, 0.75, TimeSampling::Uniform, &mut rng)
    };
    let floor = held_out.loss_of(&exact);
    let before = held_out.loss_of(&model) - floor;
    let cfg = TrainConfig {
        steps: 1500,
        batch_size: 128,
        t_floor: 1e-2,
        ..TrainConfig::default()
    };
    let report = train(&mut model, &train_set, &edm, &cfg).unwrap();
    assert_eq!(report.losses.len(), 1500);
    let after = held_out.loss_of(&model) - floor;
    assert!(after < 0.25 * before, "excess {before} -> {after}");
}

#[test]
fn exact_gradient_field_is_symmetric_and_mlp_need_not_be() {
    let data = GaussianMixture::two_d_preset();
    let edm = ForwardProcess::edm();
    let exact = ExactMixtureScore::new(&data, &edm);
    let pts = data.diffuse(&edm, 0.3).sample(200, 1).unwrap();
    assert!(jacobian_antisymmetry(&exact, &pts, 0.3, 1e-5) < 1e-6);
    let net = MlpScore::new(2, &[16, 16], Activation::Softplus, 2).unwrap();
    assert!(jacobian_antisymmetry(&net, &pts, 0.3, 1e-5) > 1e-3);
}

#[test]
fn missing_checkpoint_is_reported() {
    let r = MlpScore::load(std::path::Path::new("/nonexistent/score.json"));
    assert!(matches!(r, Err(Error::MissingInput(_))));
}
