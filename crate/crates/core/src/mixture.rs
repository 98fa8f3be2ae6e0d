//! Spherical Gaussian mixtures: the data law `p₀` and every diffused marginal `p_t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::LinearSde;
use crate::rng::StreamRng;
use crate::sampler::ParticlePopulation;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Per-axis standard deviation.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Component>", into = "Vec<Component>")]
pub struct GaussianMixture {
    dim: usize,
    components: Vec<Component>,
}

impl TryFrom<Vec<Component>> for GaussianMixture {
    type Error = Error;

    fn try_from(components: Vec<Component>) -> Result<Self> {
        Self::new(components)
    }
}

impl From<GaussianMixture> for Vec<Component> {
    fn from(m: GaussianMixture) -> Self {
        m.components
    }
}

impl GaussianMixture {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidParams("mixture needs at least one component".into()))?;
        let dim = first.mean.len();
        if dim == 0 {
            return Err(Error::InvalidParams("dimension must be positive".into()));
        }
        let mut total = 0.0;
        for (i, c) in components.iter().enumerate() {
            if c.mean.len() != dim {
                return Err(Error::InvalidParams(format!(
                    "component {i} has dimension {}, expected {dim}",
                    c.mean.len()
                )));
            }
            if !(c.weight > 0.0) || !c.weight.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "component {i} weight {} is not positive",
                    c.weight
                )));
            }
            if !(c.std > 0.0) || !c.std.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "component {i} stddev {} is not positive",
                    c.std
                )));
            }
            if c.mean.iter().any(|m| !m.is_finite()) {
                return Err(Error::InvalidParams(format!("component {i} mean is not finite")));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { dim, components })
    }

    /// Single spherical Gaussian `N(mean, std² I)`.
    pub fn gaussian(mean: Vec<f64>, std: f64) -> Result<Self> {
        Self::new(vec![Component {
            weight: 1.0,
            mean,
            std,
        }])
    }

    /// The 1-D two-component dataset used throughout the experiments:
    /// `0.1·N(−1, 0.2²) + 0.9·N(0.1, 0.1²)`.
    pub fn default_dataset() -> Self {
        Self::new(vec![
            Component {
                weight: 0.1,
                mean: vec![-1.0],
                std: 0.2,
            },
            Component {
                weight: 0.9,
                mean: vec![0.1],
                std: 0.1,
            },
        ])
        .expect("valid preset")
    }

    /// A 2-D two-component preset. Parameters are a choice of this crate.
    pub fn two_d_preset() -> Self {
        Self::new(vec![
            Component {
                weight: 0.3,
                mean: vec![-1.0, -0.5],
                std: 0.2,
            },
            Component {
                weight: 0.7,
                mean: vec![0.5, 0.4],
                std: 0.15,
            },
        ])
        .expect("valid preset")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for c in &self.components {
            for (mi, ci) in m.iter_mut().zip(&c.mean) {
                *mi += c.weight * ci;
            }
        }
        m
    }

    /// Per-axis marginal variance.
    pub fn variance(&self) -> Vec<f64> {
        let mean = self.mean();
        let mut v = vec![0.0; self.dim];
        for c in &self.components {
            for (k, vk) in v.iter_mut().enumerate() {
                *vk += c.weight * (c.std * c.std + c.mean[k] * c.mean[k]);
            }
        }
        for (vk, mk) in v.iter_mut().zip(&mean) {
            *vk -= mk * mk;
        }
        v
    }

    /// The marginal `p_t` of the linear forward process started from `self`.
    pub fn diffuse<P: LinearSde + ?Sized>(&self, process: &P, t: f64) -> GaussianMixture {
        let s = process.scale(t);
        let sig = process.sigma(t);
        let components = self
            .components
            .iter()
            .map(|c| Component {
                weight: c.weight,
                mean: c.mean.iter().map(|m| s * m).collect(),
                std: s * (c.std * c.std + sig * sig).sqrt(),
            })
            .collect();
        GaussianMixture {
            dim: self.dim,
            components,
        }
    }

    #[inline]
    fn component_log_terms(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim as f64;
        for (o, c) in out.iter_mut().zip(&self.components) {
            let var = c.std * c.std;
            let d2: f64 = x.iter().zip(&c.mean).map(|(a, b)| (a - b) * (a - b)).sum();
            *o = c.weight.ln() - 0.5 * n * (LN_2PI + var.ln()) - 0.5 * d2 / var;
        }
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let mut terms = vec![0.0; self.components.len()];
        self.component_log_terms(x, &mut terms);
        log_sum_exp(&terms)
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        self.log_density(x).exp()
    }

    /// Exact score `∇ log p(x)` via log-space responsibilities.
    pub fn score(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        let mut scratch = vec![0.0; self.components.len()];
        self.score_into(x, &mut out, &mut scratch);
        out
    }

    /// Allocation-free score; `scratch` must hold one slot per component.
    #[inline]
    pub fn score_into(&self, x: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        if self.components.len() == 1 {
            let c = &self.components[0];
            let inv = 1.0 / (c.std * c.std);
            for ((o, xi), mi) in out.iter_mut().zip(x).zip(&c.mean) {
                *o = (mi - xi) * inv;
            }
            return;
        }
        self.component_log_terms(x, scratch);
        let mx = scratch.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for r in scratch.iter_mut() {
            *r = (*r - mx).exp();
            z += *r;
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        for (r, c) in scratch.iter().zip(&self.components) {
            let w = r / (z * c.std * c.std);
            for ((o, xi), mi) in out.iter_mut().zip(x).zip(&c.mean) {
                *o += w * (mi - xi);
            }
        }
    }

    /// Draws one point from stream `rng` into `out`.
    pub fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]) {
        let u = rng.uniform();
        let mut acc = 0.0;
        let mut chosen = &self.components[self.components.len() - 1];
        for c in &self.components {
            acc += c.weight;
            if u < acc {
                chosen = c;
                break;
            }
        }
        for (o, m) in out.iter_mut().zip(&chosen.mean) {
            *o = m + chosen.std * rng.normal();
        }
    }

    /// `count` i.i.d. draws; particle `i` uses stream `(seed, i)`.
    pub fn sample(&self, count: usize, seed: u64) -> Result<ParticlePopulation> {
        if count == 0 {
            return Err(Error::InvalidParams("sample count must be >= 1".into()));
        }
        let mut positions = vec![0.0; count * self.dim];
        for (i, row) in positions.chunks_exact_mut(self.dim).enumerate() {
            let mut rng = StreamRng::new(seed, i as u64);
            self.sample_into(&mut rng, row);
        }
        ParticlePopulation::new(self.dim, positions, 0.0, seed)
    }
}

#[inline]
pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let mx = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + terms.iter().map(|t| (t - mx).exp()).sum::<f64>().ln()
}
