//! Euler / Euler–Maruyama integration of the γ-family of reverse-time SDEs.
//!
//! In forward time, one step from `t_from` to `t_to < t_from` reads
//!
//! ```text
//! X ← X + (−a(t) X + ½ g(t)² (1 + γ(t)) s(X, t)) Δτ + √γ(t) g(t) √Δτ ξ
//! ```
//!
//! with `Δτ = t_from − t_to` and every coefficient evaluated at `t_from`.
//! `γ ≡ 0` gives the probability-flow ODE. Noise for particle `i` at grid step
//! `k` comes from the counter-based stream `(seed, i, k)`, so results are
//! bit-identical for any split of particles across workers.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::GaussianMixture;
use crate::process::{ForwardProcess, LinearSde};
use crate::rng::StreamRng;

/// Particles per work unit. Fixed so that batched score models see the same
/// batches regardless of the thread count.
pub const CHUNK: usize = 256;

pub const DEFAULT_RHO: f64 = 7.0;
pub const DEFAULT_SIGMA_MIN: f64 = 0.002;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GammaSchedule {
    Constant { gamma: f64 },
    /// `gamma` on the closed interval `[s_min, s_max]`, zero elsewhere.
    /// A degenerate interval (`s_min == s_max`) is empty.
    Interval { gamma: f64, s_min: f64, s_max: f64 },
}

impl GammaSchedule {
    pub fn constant(gamma: f64) -> Result<Self> {
        let s = GammaSchedule::Constant { gamma };
        s.validate(f64::INFINITY)?;
        Ok(s)
    }

    pub fn interval(gamma: f64, s_min: f64, s_max: f64) -> Result<Self> {
        let s = GammaSchedule::Interval {
            gamma,
            s_min,
            s_max,
        };
        s.validate(f64::INFINITY)?;
        Ok(s)
    }

    pub fn ode() -> Self {
        GammaSchedule::Constant { gamma: 0.0 }
    }

    pub fn validate(&self, t_end: f64) -> Result<()> {
        let gamma = self.gamma();
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParams(format!("gamma must be >= 0, got {gamma}")));
        }
        if let GammaSchedule::Interval { s_min, s_max, .. } = *self {
            if !(0.0 <= s_min && s_min <= s_max && s_max <= t_end) {
                return Err(Error::InvalidParams(format!(
                    "interval needs 0 <= s_min <= s_max <= {t_end}, got [{s_min}, {s_max}]"
                )));
            }
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        match *self {
            GammaSchedule::Constant { gamma } | GammaSchedule::Interval { gamma, .. } => gamma,
        }
    }

    #[inline]
    pub fn evaluate(&self, t: f64) -> f64 {
        match *self {
            GammaSchedule::Constant { gamma } => gamma,
            GammaSchedule::Interval {
                gamma,
                s_min,
                s_max,
            } => {
                if s_min < s_max && t >= s_min && t <= s_max {
                    gamma
                } else {
                    0.0
                }
            }
        }
    }
}

/// Descending forward-time nodes `t₀ = T > t₁ > … > t_N = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    pub rho: f64,
    pub sigma_min: f64,
}

impl TimeGrid {
    /// EDM power schedule in noise-level space:
    /// `(T^{1/ρ} + i/(N−1) (σ_min^{1/ρ} − T^{1/ρ}))^ρ` for `i < N`, then `0`.
    pub fn karras(t_end: f64, n_steps: usize, sigma_min: f64, rho: f64) -> Result<Self> {
        if !(t_end > sigma_min && sigma_min > 0.0) || n_steps < 2 || !(rho > 0.0) {
            return Err(Error::InvalidParams(format!(
                "karras grid needs T > sigma_min > 0, n_steps >= 2, rho > 0 \
                 (T = {t_end}, sigma_min = {sigma_min}, n_steps = {n_steps}, rho = {rho})"
            )));
        }
        let hi = t_end.powf(1.0 / rho);
        let lo = sigma_min.powf(1.0 / rho);
        let denom = (n_steps - 1) as f64;
        let mut nodes: Vec<f64> = (0..n_steps)
            .map(|i| (hi + i as f64 / denom * (lo - hi)).powf(rho))
            .collect();
        nodes[0] = t_end;
        nodes[n_steps - 1] = sigma_min;
        nodes.push(0.0);
        Ok(Self {
            nodes,
            rho,
            sigma_min,
        })
    }

    /// Karras schedule laid out in `σ` and mapped to forward time through the
    /// inverse of the process noise level. For EDM this is [`TimeGrid::karras`].
    pub fn karras_for(
        process: &ForwardProcess,
        t_end: f64,
        n_steps: usize,
        sigma_min: f64,
        rho: f64,
    ) -> Result<Self> {
        let sigma_max = process.sigma(t_end);
        let mut grid = Self::karras(sigma_max, n_steps, sigma_min, rho)?;
        for v in grid.nodes.iter_mut() {
            *v = process.time_for_sigma(*v);
        }
        grid.nodes[0] = t_end;
        Ok(grid)
    }

    /// `n_steps` equal steps from `t_end` down to 0.
    pub fn uniform(t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_end > 0.0) || n_steps == 0 {
            return Err(Error::InvalidParams("uniform grid needs T > 0 and n_steps >= 1".into()));
        }
        let mut nodes: Vec<f64> = (0..n_steps)
            .map(|i| t_end * (1.0 - i as f64 / n_steps as f64))
            .collect();
        nodes.push(0.0);
        Self::from_nodes(nodes)
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidParams("grid needs at least two nodes".into()));
        }
        if nodes.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::InvalidParams("grid nodes must be strictly decreasing".into()));
        }
        if !(*nodes.last().expect("non-empty") >= 0.0) {
            return Err(Error::InvalidParams("grid must end at t >= 0".into()));
        }
        Ok(Self {
            nodes,
            rho: f64::NAN,
            sigma_min: f64::NAN,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn t_end(&self) -> f64 {
        self.nodes[0]
    }

    /// Index of the node closest to `t`.
    pub fn nearest_node(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &v) in self.nodes.iter().enumerate() {
            if (v - t).abs() < (self.nodes[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    fn index_of(&self, t: f64) -> Option<usize> {
        let i = self.nearest_node(t);
        ((self.nodes[i] - t).abs() <= 1e-12 * t.abs().max(1.0)).then_some(i)
    }
}

/// A batch of sampler states at one forward time.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticlePopulation {
    dim: usize,
    positions: Vec<f64>,
    pub forward_time: f64,
    pub seed: u64,
}

impl ParticlePopulation {
    pub fn new(dim: usize, positions: Vec<f64>, forward_time: f64, seed: u64) -> Result<Self> {
        if dim == 0 || positions.is_empty() || positions.len() % dim != 0 {
            return Err(Error::InvalidParams(format!(
                "population needs count >= 1 rows of dimension {dim} (got {} values)",
                positions.len()
            )));
        }
        if positions.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("population contains non-finite positions".into()));
        }
        Ok(Self {
            dim,
            positions,
            forward_time,
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.positions.chunks_exact(self.dim)
    }

    /// Values along one axis.
    pub fn axis(&self, k: usize) -> Vec<f64> {
        self.rows().map(|r| r[k]).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for r in self.rows() {
            for (mi, ri) in m.iter_mut().zip(r) {
                *mi += ri;
            }
        }
        let n = self.count() as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// Unbiased per-axis variance.
    pub fn variance(&self) -> Vec<f64> {
        let m = self.mean();
        let mut v = vec![0.0; self.dim];
        for r in self.rows() {
            for k in 0..self.dim {
                v[k] += (r[k] - m[k]).powi(2);
            }
        }
        let n = self.count() as f64;
        v.iter_mut().for_each(|x| *x /= (n - 1.0).max(1.0));
        v
    }

    /// One row per particle: `time, x1..xn, seed`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(w, "time")?;
        for k in 1..=self.dim {
            write!(w, ",x{k}")?;
        }
        writeln!(w, ",seed")?;
        for r in self.rows() {
            write!(w, "{}", self.forward_time)?;
            for v in r {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{}", self.seed)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A (possibly approximate) score `s(x, t) ≈ ∇ log p_t(x)`.
pub trait ScoreField: Sync {
    fn dim(&self) -> usize;

    /// Evaluates the score for a row-major batch `xs` at forward time `t`.
    fn eval_batch(&self, xs: &[f64], t: f64, out: &mut [f64]);

    fn eval(&self, x: &[f64], t: f64) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.eval_batch(x, t, &mut out);
        out
    }
}

impl<S: ScoreField + ?Sized> ScoreField for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval_batch(&self, xs: &[f64], t: f64, out: &mut [f64]) {
        (**self).eval_batch(xs, t, out)
    }
}

/// Exact score of the diffused mixture `p_t`.
pub struct ExactMixtureScore<'a, P: LinearSde + ?Sized> {
    pub data: &'a GaussianMixture,
    pub process: &'a P,
}

impl<'a, P: LinearSde + ?Sized> ExactMixtureScore<'a, P> {
    pub fn new(data: &'a GaussianMixture, process: &'a P) -> Self {
        Self { data, process }
    }
}

impl<P: LinearSde + ?Sized> ScoreField for ExactMixtureScore<'_, P> {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn eval_batch(&self, xs: &[f64], t: f64, out: &mut [f64]) {
        let pt = self.data.diffuse(self.process, t);
        let n = pt.dim();
        let mut scratch = vec![0.0; pt.components().len()];
        for (x, o) in xs.chunks_exact(n).zip(out.chunks_exact_mut(n)) {
            pt.score_into(x, o, &mut scratch);
        }
    }
}

/// `base + error`: a score with an explicitly injected error field.
pub struct PerturbedScore<A, B> {
    pub base: A,
    pub error: B,
}

impl<A: ScoreField, B: ScoreField> ScoreField for PerturbedScore<A, B> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn eval_batch(&self, xs: &[f64], t: f64, out: &mut [f64]) {
        self.base.eval_batch(xs, t, out);
        let mut e = vec![0.0; out.len()];
        self.error.eval_batch(xs, t, &mut e);
        for (o, ei) in out.iter_mut().zip(&e) {
            *o += ei;
        }
    }
}

/// `a − b`, e.g. the error of a learned model against the exact score.
pub struct ScoreDifference<A, B> {
    pub a: A,
    pub b: B,
}

impl<A: ScoreField, B: ScoreField> ScoreField for ScoreDifference<A, B> {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn eval_batch(&self, xs: &[f64], t: f64, out: &mut [f64]) {
        self.a.eval_batch(xs, t, out);
        let mut e = vec![0.0; out.len()];
        self.b.eval_batch(xs, t, &mut e);
        for (o, ei) in out.iter_mut().zip(&e) {
            *o -= ei;
        }
    }
}

struct StepCtx<'a> {
    sde: &'a dyn LinearSde,
    score: &'a dyn ScoreField,
    schedule: &'a GammaSchedule,
    seed: u64,
    dim: usize,
}

impl StepCtx<'_> {
    /// Advances a chunk whose first particle has global index `first`.
    fn step_chunk(
        &self,
        xs: &mut [f64],
        first: usize,
        step: usize,
        t_from: f64,
        t_to: f64,
        drift_buf: &mut [f64],
    ) -> Result<()> {
        let dtau = t_from - t_to;
        let gamma = self.schedule.evaluate(t_from);
        let a = self.sde.drift_coeff(t_from);
        let g = self.sde.diffusion(t_from);
        let half_g2 = 0.5 * g * g * (1.0 + gamma);
        let noise_scale = (gamma * dtau).sqrt() * g;
        let buf = &mut drift_buf[..xs.len()];
        self.score.eval_batch(xs, t_from, buf);
        for (i, (x, s)) in xs
            .chunks_exact_mut(self.dim)
            .zip(buf.chunks_exact(self.dim))
            .enumerate()
        {
            for (xk, sk) in x.iter_mut().zip(s) {
                *xk += (-a * *xk + half_g2 * sk) * dtau;
            }
            if gamma > 0.0 {
                let mut rng = StreamRng::for_step(self.seed, (first + i) as u64, step as u64);
                for xk in x.iter_mut() {
                    *xk += noise_scale * rng.normal();
                }
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteState {
                    step,
                    time: t_from,
                    gamma,
                    dtau,
                });
            }
        }
        Ok(())
    }
}

/// One reverse step from `t_from` to `t_to`. `step` keys the noise streams.
#[allow(clippy::too_many_arguments)]
pub fn reverse_step(
    x: &ParticlePopulation,
    sde: &dyn LinearSde,
    score: &dyn ScoreField,
    schedule: &GammaSchedule,
    t_from: f64,
    t_to: f64,
    step: usize,
) -> Result<ParticlePopulation> {
    if !(t_from > t_to && t_to >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "reverse step needs t_from > t_to >= 0, got {t_from} -> {t_to}"
        )));
    }
    let ctx = StepCtx {
        sde,
        score,
        schedule,
        seed: x.seed,
        dim: x.dim,
    };
    let mut positions = x.positions.clone();
    let stride = CHUNK * x.dim;
    positions
        .par_chunks_mut(stride)
        .enumerate()
        .map(|(c, xs)| {
            let mut buf = vec![0.0; xs.len()];
            ctx.step_chunk(xs, c * CHUNK, step, t_from, t_to, &mut buf)
        })
        .collect::<Result<Vec<()>>>()?;
    Ok(ParticlePopulation {
        dim: x.dim,
        positions,
        forward_time: t_to,
        seed: x.seed,
    })
}

/// Integrates from `start.forward_time` (a grid node) down to `t = 0`,
/// recording the population at the grid nodes nearest to each `record_at`.
///
/// The returned populations are ordered by decreasing forward time, one per
/// distinct recorded node.
pub fn integrate(
    start: &ParticlePopulation,
    sde: &dyn LinearSde,
    score: &dyn ScoreField,
    schedule: &GammaSchedule,
    grid: &TimeGrid,
    record_at: &[f64],
) -> Result<Vec<ParticlePopulation>> {
    let first = grid.index_of(start.forward_time).ok_or_else(|| {
        Error::InvalidParams(format!(
            "start time {} is not a grid node",
            start.forward_time
        ))
    })?;
    if score.dim() != start.dim {
        return Err(Error::InvalidParams(format!(
            "score dimension {} does not match population dimension {}",
            score.dim(),
            start.dim
        )));
    }
    let nodes = grid.nodes();
    let mut record_idx: Vec<usize> = record_at
        .iter()
        .map(|&t| {
            let sub = &nodes[first..];
            let mut best = 0;
            for (i, &v) in sub.iter().enumerate() {
                if (v - t).abs() < (sub[best] - t).abs() {
                    best = i;
                }
            }
            first + best
        })
        .collect();
    record_idx.sort_unstable();
    record_idx.dedup();

    let ctx = StepCtx {
        sde,
        score,
        schedule,
        seed: start.seed,
        dim: start.dim,
    };
    let dim = start.dim;
    let stride = CHUNK * dim;
    let chunks: Vec<(usize, &[f64])> = start.positions.chunks(stride).enumerate().collect();
    let per_chunk: Vec<Vec<Vec<f64>>> = chunks
        .into_par_iter()
        .map(|(c, init)| -> Result<Vec<Vec<f64>>> {
            let mut xs = init.to_vec();
            let mut buf = vec![0.0; xs.len()];
            let mut out = Vec::with_capacity(record_idx.len());
            let mut next = 0;
            if next < record_idx.len() && record_idx[next] == first {
                out.push(xs.clone());
                next += 1;
            }
            for k in first..nodes.len() - 1 {
                ctx.step_chunk(&mut xs, c * CHUNK, k, nodes[k], nodes[k + 1], &mut buf)?;
                if next < record_idx.len() && record_idx[next] == k + 1 {
                    out.push(xs.clone());
                    next += 1;
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut records: Vec<ParticlePopulation> = record_idx
        .iter()
        .map(|&i| ParticlePopulation {
            dim,
            positions: Vec::with_capacity(start.positions.len()),
            forward_time: nodes[i],
            seed: start.seed,
        })
        .collect();
    for chunk in per_chunk {
        for (rec, part) in records.iter_mut().zip(chunk) {
            rec.positions.extend_from_slice(&part);
        }
    }
    Ok(records)
}

/// Integrates and returns only the final population at `t = 0`.
pub fn integrate_to_end(
    start: &ParticlePopulation,
    sde: &dyn LinearSde,
    score: &dyn ScoreField,
    schedule: &GammaSchedule,
    grid: &TimeGrid,
) -> Result<ParticlePopulation> {
    let t_last = *grid.nodes().last().expect("non-empty grid");
    let mut v = integrate(start, sde, score, schedule, grid, &[t_last])?;
    Ok(v.pop().expect("final record"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveStep {
    pub t_from: f64,
    pub dtau: f64,
    /// `γ(t_from)·Δτ`, the step seen by the Langevin-like part.
    pub langevin: f64,
}

pub fn effective_step_size(schedule: &GammaSchedule, grid: &TimeGrid) -> Vec<EffectiveStep> {
    grid.nodes()
        .windows(2)
        .map(|w| {
            let dtau = w[0] - w[1];
            EffectiveStep {
                t_from: w[0],
                dtau,
                langevin: schedule.evaluate(w[0]) * dtau,
            }
        })
        .collect()
}

/// Isotropic Gaussian prior `N(0, s(T)² σ(T)² I)` used in place of `p_T`.
pub fn gaussian_prior(
    sde: &dyn LinearSde,
    dim: usize,
    t_end: f64,
    count: usize,
    seed: u64,
) -> Result<ParticlePopulation> {
    let std = sde.scale(t_end) * sde.sigma(t_end);
    let g = GaussianMixture::gaussian(vec![0.0; dim], std)?;
    let mut p = g.sample(count, seed)?;
    p.forward_time = t_end;
    Ok(p)
}

/// Exact prior: `count` draws of the diffused data law `p_T`.
pub fn exact_prior(
    data: &GaussianMixture,
    sde: &dyn LinearSde,
    t_end: f64,
    count: usize,
    seed: u64,
) -> Result<ParticlePopulation> {
    let mut p = data.diffuse(sde, t_end).sample(count, seed)?;
    p.forward_time = t_end;
    Ok(p)
}
