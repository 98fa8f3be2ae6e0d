//! Multilayer-perceptron score model trained by denoising score matching.
//!
//! The network maps `(x, t) ∈ ℝⁿ⁺¹` to a score estimate in `ℝⁿ`. Training
//! minimises the variance-normalised objective
//!
//! ```text
//! E |s(t)σ(t) · s_θ(x_t, t) + z|²,   x_t = s(t) x₀ + s(t)σ(t) z
//! ```
//!
//! with gradients from hand-written backpropagation and Adam updates.

use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::GaussianMixture;
use crate::process::LinearSde;
use crate::rng::StreamRng;
use crate::sampler::{ExactMixtureScore, ParticlePopulation, ScoreField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Silu,
    Relu,
    Softplus,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Silu => x * sigmoid(x),
            Activation::Relu => x.max(0.0),
            Activation::Softplus => softplus(x),
        }
    }

    #[inline]
    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Silu => {
                let s = sigmoid(x);
                s * (1.0 + x * (1.0 - s))
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Softplus => sigmoid(x),
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Dense network; layer `l` computes `a_l = act(a_{l−1} W_lᵀ + b_l)`, the last
/// layer is affine.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpScore {
    sizes: Vec<usize>,
    activation: Activation,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
}

/// Parameter gradients laid out like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Checkpoint {
    layer_sizes: Vec<usize>,
    activation: Activation,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl MlpScore {
    /// Network for an `n`-dimensional state with the given hidden widths.
    /// Weights are drawn `N(0, 1/fan_in)` from `seed`; biases start at zero.
    pub fn new(dim: usize, hidden: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        if dim == 0 || hidden.contains(&0) {
            return Err(Error::InvalidParams("layer sizes must be positive".into()));
        }
        let mut sizes = vec![dim + 1];
        sizes.extend_from_slice(hidden);
        sizes.push(dim);
        let mut rng = StreamRng::new(seed, 0x1417);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in sizes.windows(2) {
            let sd = (1.0 / w[0] as f64).sqrt();
            weights.push(Array2::from_shape_fn((w[1], w[0]), |_| sd * rng.normal()));
            biases.push(Array1::zeros(w[1]));
        }
        Ok(Self {
            sizes,
            activation,
            weights,
            biases,
        })
    }

    /// All weights and biases set to zero.
    pub fn zeros(dim: usize, hidden: &[usize], activation: Activation) -> Result<Self> {
        let mut m = Self::new(dim, hidden, activation, 0)?;
        m.weights.iter_mut().for_each(|w| w.fill(0.0));
        Ok(m)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn state_dim(&self) -> usize {
        *self.sizes.last().expect("non-empty")
    }

    pub fn n_params(&self) -> usize {
        self.sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.n_params() {
            return Err(Error::InvalidParams(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                p.len()
            )));
        }
        let mut it = p.iter();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            w.iter_mut().chain(b.iter_mut()).for_each(|v| *v = *it.next().expect("length checked"));
        }
        Ok(())
    }

    /// Forward pass on a batch of inputs `[x, t]` (one row per sample).
    pub fn forward_inputs(&self, input: ArrayView2<'_, f64>) -> Array2<f64> {
        let last = self.weights.len() - 1;
        let mut a = input.to_owned();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = a.dot(&w.t());
            z += b;
            if l < last {
                z.mapv_inplace(|v| self.activation.apply(v));
            }
            a = z;
        }
        a
    }

    /// Score at a single state.
    pub fn forward(&self, x: &[f64], t: f64) -> Vec<f64> {
        let mut input = Array2::zeros((1, x.len() + 1));
        for (k, v) in x.iter().enumerate() {
            input[[0, k]] = *v;
        }
        input[[0, x.len()]] = t;
        self.forward_inputs(input.view()).into_raw_vec_and_offset().0
    }

    /// Mean DSM loss on `batch` and its gradient.
    pub fn loss_and_grad(&self, batch: &DsmBatch) -> (f64, Gradients) {
        let n = self.state_dim();
        let bsz = batch.inputs.nrows();
        let last = self.weights.len() - 1;
        // keep pre-activations for the backward pass
        let mut pre = Vec::with_capacity(self.weights.len());
        let mut acts = vec![batch.inputs.clone()];
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = acts[l].dot(&w.t());
            z += b;
            if l < last {
                acts.push(z.mapv(|v| self.activation.apply(v)));
            }
            pre.push(z);
        }
        let out = &pre[last];
        let mut grad = Array2::zeros((bsz, n));
        let mut loss = 0.0;
        for i in 0..bsz {
            let c = batch.noise_scale[i];
            for k in 0..n {
                let r = c * out[[i, k]] + batch.noise[[i, k]];
                loss += r * r;
                grad[[i, k]] = 2.0 * c * r / bsz as f64;
            }
        }
        loss /= bsz as f64;

        let mut gw = vec![Array2::zeros((0, 0)); self.weights.len()];
        let mut gb = vec![Array1::zeros(0); self.weights.len()];
        let mut delta = grad;
        for l in (0..=last).rev() {
            gw[l] = delta.t().dot(&acts[l]);
            gb[l] = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut back = delta.dot(&self.weights[l]);
                let act = self.activation;
                back.zip_mut_with(&pre[l - 1], |d, &z| *d *= act.derivative(z));
                delta = back;
            }
        }
        (
            loss,
            Gradients {
                weights: gw,
                biases: gb,
            },
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let ck = Checkpoint {
            layer_sizes: self.sizes.clone(),
            activation: self.activation,
            weights: self.weights.iter().map(|w| w.iter().copied().collect()).collect(),
            biases: self.biases.iter().map(|b| b.to_vec()).collect(),
        };
        std::fs::write(path, serde_json::to_vec(&ck)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::MissingInput(format!("{}: {e}", path.display())))?;
        let ck: Checkpoint = serde_json::from_slice(&bytes)?;
        let s = &ck.layer_sizes;
        if s.len() < 2 || s[0] != s[s.len() - 1] + 1 {
            return Err(Error::InvalidParams(format!("bad layer sizes {s:?}")));
        }
        if ck.weights.len() != s.len() - 1 || ck.biases.len() != s.len() - 1 {
            return Err(Error::InvalidParams("layer count does not match header".into()));
        }
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for (i, w) in s.windows(2).enumerate() {
            let wm = Array2::from_shape_vec((w[1], w[0]), ck.weights[i].clone())
                .map_err(|e| Error::InvalidParams(format!("layer {i}: {e}")))?;
            if ck.biases[i].len() != w[1] {
                return Err(Error::InvalidParams(format!("layer {i}: bias length")));
            }
            weights.push(wm);
            biases.push(Array1::from(ck.biases[i].clone()));
        }
        Ok(Self {
            sizes: ck.layer_sizes,
            activation: ck.activation,
            weights,
            biases,
        })
    }
}

impl ScoreField for MlpScore {
    fn dim(&self) -> usize {
        self.state_dim()
    }

    fn eval_batch(&self, xs: &[f64], t: f64, out: &mut [f64]) {
        let n = self.state_dim();
        let rows = xs.len() / n;
        let mut input = Array2::zeros((rows, n + 1));
        for (i, x) in xs.chunks_exact(n).enumerate() {
            for k in 0..n {
                input[[i, k]] = x[k];
            }
            input[[i, n]] = t;
        }
        let o = self.forward_inputs(input.view());
        for (dst, src) in out.iter_mut().zip(o.iter()) {
            *dst = *src;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeSampling {
    /// Uniform on `[t_floor, T]`.
    Uniform,
    /// Uniform in `log t` on `[t_floor, T]`.
    LogUniform,
}

/// One draw of `(x_t, t, z)` for the DSM objective.
#[derive(Debug, Clone, PartialEq)]
pub struct DsmBatch {
    /// Rows `[x_t, t]`.
    pub inputs: Array2<f64>,
    pub noise: Array2<f64>,
    /// `s(t)σ(t)` per row.
    pub noise_scale: Vec<f64>,
}

impl DsmBatch {
    /// Noises the rows of `x0` at times drawn from `sampling` on `[t_floor, t_end]`.
    pub fn draw(
        x0: ArrayView2<'_, f64>,
        sde: &dyn LinearSde,
        t_floor: f64,
        t_end: f64,
        sampling: TimeSampling,
        rng: &mut StreamRng,
    ) -> Self {
        let (bsz, n) = x0.dim();
        let mut inputs = Array2::zeros((bsz, n + 1));
        let mut noise = Array2::zeros((bsz, n));
        let mut noise_scale = Vec::with_capacity(bsz);
        for i in 0..bsz {
            let u = rng.uniform();
            let t = match sampling {
                TimeSampling::Uniform => t_floor + u * (t_end - t_floor),
                TimeSampling::LogUniform => (t_floor.ln() + u * (t_end / t_floor).ln()).exp(),
            };
            let s = sde.scale(t);
            let c = s * sde.sigma(t);
            for k in 0..n {
                let z = rng.normal();
                noise[[i, k]] = z;
                inputs[[i, k]] = s * x0[[i, k]] + c * z;
            }
            inputs[[i, n]] = t;
            noise_scale.push(c);
        }
        Self {
            inputs,
            noise,
            noise_scale,
        }
    }

    /// DSM loss of an arbitrary score field on this batch.
    pub fn loss_of(&self, field: &dyn ScoreField) -> f64 {
        let n = self.noise.ncols();
        let mut total = 0.0;
        for (i, row) in self.inputs.outer_iter().enumerate() {
            let x: Vec<f64> = row.slice(s![..n]).to_vec();
            let sc = field.eval(&x, row[n]);
            for k in 0..n {
                total += (self.noise_scale[i] * sc[k] + self.noise[[i, k]]).powi(2);
            }
        }
        total / self.inputs.nrows() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub t_floor: f64,
    pub t_end: f64,
    pub time_sampling: TimeSampling,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 20_000,
            batch_size: 256,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            t_floor: 1e-4,
            t_end: 0.75,
            time_sampling: TimeSampling::Uniform,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || !(self.learning_rate > 0.0) {
            return Err(Error::InvalidParams("batch size and learning rate must be positive".into()));
        }
        if !(self.t_floor > 0.0 && self.t_floor < self.t_end) {
            return Err(Error::InvalidParams(format!(
                "need 0 < t_floor < T, got t_floor = {}, T = {}",
                self.t_floor, self.t_end
            )));
        }
        Ok(())
    }
}

/// Adam state over the flattened parameters.
#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    pub fn new(n: usize, cfg: &TrainConfig) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.adam_eps,
        }
    }

    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub losses: Vec<f64>,
}

impl TrainReport {
    /// Trailing moving average with the given window.
    pub fn smoothed(&self, window: usize) -> Vec<f64> {
        let w = window.max(1);
        let mut out = Vec::with_capacity(self.losses.len());
        let mut acc = 0.0;
        for (i, l) in self.losses.iter().enumerate() {
            acc += l;
            if i >= w {
                acc -= self.losses[i - w];
            }
            out.push(acc / (i + 1).min(w) as f64);
        }
        out
    }
}

/// Trains `model` in place on the rows of `data`. Deterministic for a fixed seed.
pub fn train(
    model: &mut MlpScore,
    data: &ParticlePopulation,
    sde: &dyn LinearSde,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    let n = model.state_dim();
    if data.dim() != n {
        return Err(Error::InvalidParams(format!(
            "data dimension {} does not match model dimension {n}",
            data.dim()
        )));
    }
    let mut params = model.params();
    let mut opt = Adam::new(params.len(), cfg);
    let mut losses = Vec::with_capacity(cfg.steps);
    let mut x0 = Array2::zeros((cfg.batch_size, n));
    for step in 0..cfg.steps {
        let mut rng = StreamRng::new(cfg.seed, step as u64);
        for i in 0..cfg.batch_size {
            let j = ((rng.uniform() * data.count() as f64) as usize).min(data.count() - 1);
            for (k, v) in data.row(j).iter().enumerate() {
                x0[[i, k]] = *v;
            }
        }
        let batch = DsmBatch::draw(x0.view(), sde, cfg.t_floor, cfg.t_end, cfg.time_sampling, &mut rng);
        let (loss, grad) = model.loss_and_grad(&batch);
        if !loss.is_finite() {
            return Err(Error::DivergenceDetected { step, loss });
        }
        losses.push(loss);
        opt.update(&mut params, &grad.flatten());
        model.set_params(&params)?;
    }
    Ok(TrainReport { losses })
}

/// Mean of `|s_θ(x, t) − ∇log p_t(x)|²` over the rows of `samples`.
pub fn score_error_moment(
    model: &dyn ScoreField,
    data: &GaussianMixture,
    sde: &dyn LinearSde,
    samples: &ParticlePopulation,
) -> f64 {
    let t = samples.forward_time;
    let exact = ExactMixtureScore::new(data, sde);
    let xs = samples.positions();
    let mut a = vec![0.0; xs.len()];
    let mut b = vec![0.0; xs.len()];
    model.eval_batch(xs, t, &mut a);
    exact.eval_batch(xs, t, &mut b);
    a.iter().zip(&b).map(|(u, v)| (u - v).powi(2)).sum::<f64>() / samples.count() as f64
}

/// `E_{p_t}[|ε_t|²]` at each time, from `count` fresh draws of the true marginal.
pub fn score_error_profile(
    model: &dyn ScoreField,
    data: &GaussianMixture,
    sde: &dyn LinearSde,
    times: &[f64],
    count: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut pop = data.diffuse(sde, t).sample(count, crate::rng::derive_key(&[seed, i as u64]))?;
            pop.forward_time = t;
            Ok(score_error_moment(model, data, sde, &pop))
        })
        .collect()
}

/// Mean of `‖J − Jᵀ‖_F / ‖J‖_F` over the rows of `samples`, with the Jacobian
/// from central differences of step `h`. Zero for one-dimensional fields.
pub fn jacobian_antisymmetry(field: &dyn ScoreField, samples: &ParticlePopulation, t: f64, h: f64) -> f64 {
    let n = samples.dim();
    if n < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut counted = 0usize;
    let mut jac = vec![0.0; n * n];
    for x in samples.rows() {
        let mut xp = x.to_vec();
        for j in 0..n {
            xp[j] = x[j] + h;
            let fp = field.eval(&xp, t);
            xp[j] = x[j] - h;
            let fm = field.eval(&xp, t);
            xp[j] = x[j];
            for i in 0..n {
                jac[i * n + j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            for j in 0..n {
                num += (jac[i * n + j] - jac[j * n + i]).powi(2);
                den += jac[i * n + j].powi(2);
            }
        }
        if den > 0.0 {
            total += (num / den).sqrt();
            counted += 1;
        }
    }
    if counted == 0 {
        0.0
    } else {
        total / counted as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::ForwardProcess;

    fn toy_batch(n: usize, rows: usize, seed: u64) -> DsmBatch {
        let mut rng = StreamRng::new(seed, 9);
        let x0 = Array2::from_shape_fn((rows, n), |_| rng.normal());
        DsmBatch::draw(x0.view(), &ForwardProcess::edm(), 1e-2, 1.0, TimeSampling::Uniform, &mut rng)
    }

    fn max_rel_grad_error(model: &MlpScore, batch: &DsmBatch) -> f64 {
        let (_, g) = model.loss_and_grad(batch);
        let g = g.flatten();
        let p0 = model.params();
        let mut m = model.clone();
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for i in 0..p0.len() {
            let mut p = p0.clone();
            p[i] += h;
            m.set_params(&p).unwrap();
            let lp = m.loss_and_grad(batch).0;
            p[i] -= 2.0 * h;
            m.set_params(&p).unwrap();
            let lm = m.loss_and_grad(batch).0;
            let fd = (lp - lm) / (2.0 * h);
            worst = worst.max((fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-4));
        }
        worst
    }

    #[test]
    fn five_parameter_gradient() {
        let m = MlpScore::new(1, &[1], Activation::Silu, 3).unwrap();
        assert_eq!(m.n_params(), 5);
        assert!(max_rel_grad_error(&m, &toy_batch(1, 16, 1)) < 1e-5);
    }

    #[test]
    fn gradients_all_activations() {
        for act in [Activation::Silu, Activation::Relu, Activation::Softplus] {
            let mut m = MlpScore::new(2, &[5, 4], act, 11).unwrap();
            let mut p = m.params();
            // nonzero biases so every unit is exercised
            p.iter_mut().enumerate().for_each(|(i, v)| *v += 0.01 * (i % 7) as f64);
            m.set_params(&p).unwrap();
            let e = max_rel_grad_error(&m, &toy_batch(2, 32, 2));
            assert!(e < 1e-5, "{act:?}: {e}");
        }
    }

    #[test]
    fn zero_weights_give_zero() {
        let m = MlpScore::zeros(2, &[8, 8], Activation::Silu).unwrap();
        assert_eq!(m.forward(&[0.3, -1.0], 0.5), vec![0.0, 0.0]);
        let r = MlpScore::new(2, &[8, 8], Activation::Silu, 1).unwrap();
        assert!(r.forward(&[0.3, -1.0], 0.5).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn checkpoint_roundtrip() {
        let m = MlpScore::new(2, &[6, 3], Activation::Softplus, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        m.save(&p).unwrap();
        assert_eq!(MlpScore::load(&p).unwrap(), m);
        assert!(matches!(
            MlpScore::load(&dir.path().join("missing.json")),
            Err(Error::MissingInput(_))
        ));
    }

    #[test]
    fn zero_steps_and_determinism() {
        let data = GaussianMixture::default_dataset().sample(1000, 1).unwrap();
        let edm = ForwardProcess::edm();
        let base = MlpScore::new(1, &[16, 16], Activation::Silu, 2).unwrap();
        let mut m = base.clone();
        let cfg0 = TrainConfig {
            steps: 0,
            ..Default::default()
        };
        train(&mut m, &data, &edm, &cfg0).unwrap();
        assert_eq!(m, base);
        let cfg = TrainConfig {
            steps: 20,
            batch_size: 32,
            ..Default::default()
        };
        let mut a = base.clone();
        let mut b = base.clone();
        train(&mut a, &data, &edm, &cfg).unwrap();
        train(&mut b, &data, &edm, &cfg).unwrap();
        assert_eq!(a.params(), b.params());
        assert_ne!(a.params(), base.params());
    }

    #[test]
    fn antisymmetry_of_gradient_fields() {
        let d = GaussianMixture::two_d_preset();
        let edm = ForwardProcess::edm();
        let exact = ExactMixtureScore::new(&d, &edm);
        let pts = d.diffuse(&edm, 0.3).sample(200, 4).unwrap();
        assert!(jacobian_antisymmetry(&exact, &pts, 0.3, 1e-5) < 1e-6);
        let d1 = GaussianMixture::default_dataset();
        let e1 = ExactMixtureScore::new(&d1, &edm);
        let p1 = d1.sample(50, 1).unwrap();
        assert_eq!(jacobian_antisymmetry(&e1, &p1, 0.3, 1e-5), 0.0);
    }

    #[test]
    fn exact_field_has_zero_error() {
        let d = GaussianMixture::default_dataset();
        let edm = ForwardProcess::edm();
        let exact = ExactMixtureScore::new(&d, &edm);
        let prof = score_error_profile(&exact, &d, &edm, &[0.01, 0.3, 0.75], 500, 0).unwrap();
        assert!(prof.iter().all(|&v| v == 0.0));
    }
}
