//! Relative entropy: closed form for Gaussians, quadrature for 1-D densities,
//! and a bin-averaged histogram estimator for particle populations.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::GaussianMixture;
use crate::process::LinearSde;
use crate::quadrature;
use crate::rng::derive_key;
use crate::sampler::ParticlePopulation;

pub const DEFAULT_N_BINS: usize = 100;
pub const DEFAULT_BIN_WINDOW: usize = 20;
pub const MIN_HISTOGRAM_COUNT: usize = 10_000;
/// Fresh reference draws per checkpoint in [`entropy_evolution`].
pub const DEFAULT_REFERENCE_COUNT: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    ClosedFormGaussian,
    Quadrature,
    Histogram,
}

impl std::fmt::Display for EstimateMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EstimateMethod::ClosedFormGaussian => "closed-form-gaussian",
            EstimateMethod::Quadrature => "quadrature",
            EstimateMethod::Histogram => "histogram",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub value: f64,
    pub method: EstimateMethod,
    /// Inclusive bin-count window for histogram estimates.
    pub n_bins_range: Option<(usize, usize)>,
    /// Spread of the per-bin-count values (zero for deterministic methods).
    pub stderr_hint: f64,
}

impl EntropyEstimate {
    fn exact(value: f64, method: EstimateMethod) -> Self {
        Self {
            value,
            method,
            n_bins_range: None,
            stderr_hint: 0.0,
        }
    }
}

/// `H(N(mu0, var0) | N(mu1, var1))` in one dimension.
pub fn kl_gaussian(mu0: f64, var0: f64, mu1: f64, var1: f64) -> Result<f64> {
    if !(var0 > 0.0 && var1 > 0.0) {
        return Err(Error::Domain(format!(
            "variances must be positive, got {var0} and {var1}"
        )));
    }
    let r = var0 / var1;
    Ok(0.5 * (-r.ln() + r + (mu0 - mu1).powi(2) / var1 - 1.0))
}

/// `∫ p log(p/q)` over `[lo, hi]` by adaptive quadrature of log-densities.
pub fn kl_quadrature<P, Q>(log_p: P, log_q: Q, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    P: Fn(f64) -> f64,
    Q: Fn(f64) -> f64,
{
    quadrature::integrate(
        |x| {
            let lp = log_p(x);
            if lp == f64::NEG_INFINITY {
                return 0.0;
            }
            lp.exp() * (lp - log_q(x))
        },
        lo,
        hi,
        tol,
    )
}

/// KL between two 1-D mixtures by quadrature over `p`'s bulk (±12 std around
/// every component).
pub fn kl_mixtures_1d(p: &GaussianMixture, q: &GaussianMixture, tol: f64) -> Result<EntropyEstimate> {
    if p.dim() != 1 || q.dim() != 1 {
        return Err(Error::InvalidParams("quadrature KL needs 1-D mixtures".into()));
    }
    let lo = p
        .components()
        .iter()
        .map(|c| c.mean[0] - 12.0 * c.std)
        .fold(f64::INFINITY, f64::min);
    let hi = p
        .components()
        .iter()
        .map(|c| c.mean[0] + 12.0 * c.std)
        .fold(f64::NEG_INFINITY, f64::max);
    let v = kl_quadrature(|x| p.log_density(&[x]), |x| q.log_density(&[x]), lo, hi, tol)?;
    Ok(EntropyEstimate::exact(v, EstimateMethod::Quadrature))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HistogramConfig {
    /// Largest bin count per axis; the estimate averages `n_bins − window ..= n_bins`.
    pub n_bins: usize,
    pub window: usize,
    pub min_count: usize,
    /// Width of the clipping window in pooled standard deviations.
    pub clip_std: f64,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        Self {
            n_bins: DEFAULT_N_BINS,
            window: DEFAULT_BIN_WINDOW,
            min_count: MIN_HISTOGRAM_COUNT,
            clip_std: 6.0,
        }
    }
}

/// Per-axis histogram range: the union of both sample ranges clipped to the
/// pooled mean ± `clip_std` pooled standard deviations.
pub fn histogram_range(p: &[f64], q: &[f64], clip_std: f64) -> (f64, f64) {
    let n = (p.len() + q.len()) as f64;
    let mean = p.iter().chain(q).sum::<f64>() / n;
    let var = p.iter().chain(q).map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &x in p.iter().chain(q) {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    (lo.max(mean - clip_std * sd), hi.min(mean + clip_std * sd))
}

/// Normalised coordinates in `[0, 1]`; out-of-range values clamp to the edges.
fn normalise(xs: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let w = hi - lo;
    xs.iter().map(|&x| ((x - lo) / w).clamp(0.0, 1.0)).collect()
}

#[inline]
fn bin(u: f64, b: usize) -> usize {
    ((u * b as f64) as usize).min(b - 1)
}

fn counts(axes: &[Vec<f64>], b: usize) -> Vec<u32> {
    let mut c = vec![0u32; b.pow(axes.len() as u32)];
    let n = axes[0].len();
    for i in 0..n {
        let mut idx = 0;
        for a in axes {
            idx = idx * b + bin(a[i], b);
        }
        c[idx] += 1;
    }
    c
}

/// Plug-in KL of two binned samples with smoothing of empty `q` bins.
/// Returns `None` when no bin holds both `p` and `q` mass.
fn binned_kl(cp: &[u32], cq: &[u32], np: usize, nq: usize) -> Option<f64> {
    let eps = 1.0 / (10.0 * nq as f64);
    let (np, nq) = (np as f64, nq as f64);
    let mut kl = 0.0;
    let mut overlap = false;
    for (&a, &b) in cp.iter().zip(cq) {
        if a == 0 {
            continue;
        }
        let pi = a as f64 / np;
        let qi = if b == 0 {
            eps
        } else {
            overlap = true;
            b as f64 / nq
        };
        kl += pi * (pi / qi).ln();
    }
    overlap.then_some(kl)
}

/// Histogram estimate of `H(p | q)` from samples, averaged over bin counts
/// `n_bins − window ..= n_bins` (per axis; 2-D populations use `b × b` bins).
pub fn kl_histogram(
    p: &ParticlePopulation,
    q: &ParticlePopulation,
    cfg: &HistogramConfig,
) -> Result<EntropyEstimate> {
    if p.dim() != q.dim() {
        return Err(Error::InvalidParams(format!(
            "dimension mismatch: {} vs {}",
            p.dim(),
            q.dim()
        )));
    }
    if !(1..=2).contains(&p.dim()) {
        return Err(Error::InvalidParams(format!(
            "histogram KL supports 1-D and 2-D populations, got {}",
            p.dim()
        )));
    }
    let need = cfg.min_count;
    for n in [p.count(), q.count()] {
        if n < need {
            return Err(Error::InsufficientSamples { got: n, need });
        }
    }
    if cfg.window >= cfg.n_bins {
        return Err(Error::InvalidParams("bin window must be below n_bins".into()));
    }
    let mut up = Vec::with_capacity(p.dim());
    let mut uq = Vec::with_capacity(p.dim());
    for k in 0..p.dim() {
        let (xp, xq) = (p.axis(k), q.axis(k));
        let (lo, hi) = histogram_range(&xp, &xq, cfg.clip_std);
        if !(hi > lo) {
            // every sample sits on one point: identical atoms or disjoint atoms
            if xp[0] == xq[0] {
                return Ok(EntropyEstimate {
                    value: 0.0,
                    method: EstimateMethod::Histogram,
                    n_bins_range: Some((cfg.n_bins - cfg.window, cfg.n_bins)),
                    stderr_hint: 0.0,
                });
            }
            return Err(Error::EmptyOverlap);
        }
        up.push(normalise(&xp, lo, hi));
        uq.push(normalise(&xq, lo, hi));
    }
    let low = cfg.n_bins - cfg.window;
    let values: Vec<Option<f64>> = (low..=cfg.n_bins)
        .into_par_iter()
        .map(|b| binned_kl(&counts(&up, b), &counts(&uq, b), p.count(), q.count()))
        .collect();
    let values: Vec<f64> = values.into_iter().collect::<Option<_>>().ok_or(Error::EmptyOverlap)?;
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let spread = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    Ok(EntropyEstimate {
        value: mean,
        method: EstimateMethod::Histogram,
        n_bins_range: Some((low, cfg.n_bins)),
        stderr_hint: spread,
    })
}

/// Argument order of the relative entropy along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// `H(p̃_t | p_t)`: sampler law against the true marginal.
    SamplerVsTrue,
    /// `H(p_t | p̃_t)`: true marginal against the sampler law.
    TrueVsSampler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub forward_time: f64,
    pub estimate: EntropyEstimate,
}

/// Seed of the fresh reference draws at a checkpoint. Depends only on the
/// master seed and the time, so runs sharing a checkpoint share the reference.
pub fn reference_seed(seed: u64, t: f64) -> u64 {
    derive_key(&[seed, 0x5EF, t.to_bits()])
}

/// Histogram KL between each recorded population and fresh draws of the
/// diffused data law at the same time.
pub fn entropy_evolution(
    records: &[ParticlePopulation],
    data: &GaussianMixture,
    sde: &dyn LinearSde,
    direction: Direction,
    reference_count: usize,
    cfg: &HistogramConfig,
) -> Result<Vec<CurvePoint>> {
    records
        .iter()
        .map(|pop| {
            let t = pop.forward_time;
            let fresh = data
                .diffuse(sde, t)
                .sample(reference_count, reference_seed(pop.seed, t))?;
            let est = match direction {
                Direction::SamplerVsTrue => kl_histogram(pop, &fresh, cfg),
                Direction::TrueVsSampler => kl_histogram(&fresh, pop, cfg),
            }
            .map_err(|e| e.context(format!("entropy at t = {t}")))?;
            Ok(CurvePoint {
                forward_time: t,
                estimate: est,
            })
        })
        .collect()
}

pub fn write_curve_csv(path: &Path, curve: &[CurvePoint]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "forward_time,estimate,method,n_bins_low,n_bins_high")?;
    for p in curve {
        let (lo, hi) = match p.estimate.n_bins_range {
            Some((lo, hi)) => (lo.to_string(), hi.to_string()),
            None => (String::new(), String::new()),
        };
        writeln!(
            w,
            "{},{},{},{},{}",
            p.forward_time, p.estimate.value, p.estimate.method, lo, hi
        )?;
    }
    w.flush()?;
    Ok(())
}
