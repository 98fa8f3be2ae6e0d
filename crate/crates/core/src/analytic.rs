//! Closed-form Gauss–Markov example.
//!
//! Data `N(μ₀, σ₀²)` is diffused by `dX = σ dW`, so `p_t = N(μ₀, σ₀² + σ² t)`.
//! The model score `s_θ(x, t) = −(x − μ_θ) / (α_θ σ(t)²)` and the Gaussian prior
//! `N(μ_T, β_T σ(T)²)` make the reverse process Gaussian at every time, so its
//! moments, the KL to the true marginal and every bound input are explicit.
//! Reverse time is `τ = T − t` and `σ̄(τ)² = σ(T − τ)²`.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundTrace, LsiProfile};
use crate::entropy::kl_gaussian;
use crate::error::{Error, Result};
use crate::process::LinearSde;
use crate::sampler::{GammaSchedule, ScoreField, TimeGrid};

/// Below this `|1 + γ − α_θ|` the logarithmic variance branch is used.
pub const DEGENERATE_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticConfig {
    pub mu0: f64,
    pub sigma0: f64,
    /// Constant forward diffusion `g ≡ σ`.
    pub sigma: f64,
    pub t_end: f64,
    pub mu_theta: f64,
    pub alpha_theta: f64,
    pub mu_t: f64,
    pub beta_t: f64,
    pub gamma: f64,
}

impl Default for AnalyticConfig {
    fn default() -> Self {
        Self {
            mu0: 2.0,
            sigma0: 1.0,
            sigma: 6.0,
            t_end: 1.0,
            mu_theta: 2.0,
            alpha_theta: 1.0,
            mu_t: 2.0,
            beta_t: 1.0,
            gamma: 0.0,
        }
    }
}

/// `dX = σ dW` started from a Gaussian of variance `σ₀²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantDiffusion {
    pub sigma: f64,
}

impl LinearSde for ConstantDiffusion {
    fn drift_coeff(&self, _t: f64) -> f64 {
        0.0
    }

    fn diffusion(&self, _t: f64) -> f64 {
        self.sigma
    }

    fn scale(&self, _t: f64) -> f64 {
        1.0
    }

    fn sigma(&self, t: f64) -> f64 {
        self.sigma * t.sqrt()
    }
}

/// `s_θ(x, t) = −(x − μ_θ) / (α_θ (σ₀² + σ² t))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearScore {
    pub mu_theta: f64,
    pub alpha_theta: f64,
    pub sigma0: f64,
    pub sigma: f64,
}

impl ScoreField for LinearScore {
    fn dim(&self) -> usize {
        1
    }

    fn eval_batch(&self, xs: &[f64], t: f64, out: &mut [f64]) {
        let v = self.alpha_theta * (self.sigma0 * self.sigma0 + self.sigma * self.sigma * t);
        for (o, x) in out.iter_mut().zip(xs) {
            *o = -(x - self.mu_theta) / v;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreErrorMoments {
    /// `E_p̄[ε²]`.
    pub mse_pbar: f64,
    /// `E_p̃[ε²]`.
    pub mse_ptilde: f64,
    /// `E_p̃[ε · ∇log(p̃/p̄)]`.
    pub cross_term: f64,
}

impl AnalyticConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sigma0", self.sigma0),
            ("sigma", self.sigma),
            ("T", self.t_end),
            ("alpha_theta", self.alpha_theta),
            ("beta_T", self.beta_t),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::InvalidParams(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        Ok(())
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    /// A model and prior that reproduce the forward marginals exactly.
    pub fn is_perfect(&self) -> bool {
        self.mu_theta == self.mu0
            && self.alpha_theta == 1.0
            && self.mu_t == self.mu0
            && self.beta_t == 1.0
    }

    pub fn process(&self) -> ConstantDiffusion {
        ConstantDiffusion { sigma: self.sigma }
    }

    pub fn score(&self) -> LinearScore {
        LinearScore {
            mu_theta: self.mu_theta,
            alpha_theta: self.alpha_theta,
            sigma0: self.sigma0,
            sigma: self.sigma,
        }
    }

    /// Forward variance `σ(t)² = σ₀² + σ² t`.
    pub fn forward_var(&self, t: f64) -> f64 {
        self.sigma0 * self.sigma0 + self.sigma * self.sigma * t
    }

    /// `σ̄(τ)²`.
    pub fn pbar_var(&self, tau: f64) -> f64 {
        self.forward_var(self.t_end - tau)
    }

    fn check_tau(&self, tau: f64) -> Result<()> {
        if !(tau >= 0.0 && tau <= self.t_end * (1.0 + 1e-12)) {
            return Err(Error::Domain(format!(
                "reverse time must lie in [0, {}], got {tau}",
                self.t_end
            )));
        }
        Ok(())
    }

    /// Mean and variance of the reverse process at reverse time `τ`.
    pub fn reverse_moments(&self, tau: f64) -> Result<(f64, f64)> {
        self.check_tau(tau)?;
        let vbar = self.pbar_var(tau);
        let log_r = (vbar / self.pbar_var(0.0)).ln();
        let (g, a) = (self.gamma, self.alpha_theta);
        let mean = self.mu_theta + ((1.0 + g) / (2.0 * a) * log_r).exp() * (self.mu_t - self.mu_theta);
        let d = (1.0 + g) - a;
        let var = if d.abs() < DEGENERATE_GUARD {
            vbar * (self.beta_t - g * log_r)
        } else {
            let x = d * log_r / a;
            vbar * (self.beta_t * x.exp() - g * a * x.exp_m1() / d)
        };
        Ok((mean, var))
    }

    /// `H(p̃_τ | p̄_τ)`.
    pub fn kl_exact(&self, tau: f64) -> Result<f64> {
        let (m, v) = self.reverse_moments(tau)?;
        kl_gaussian(m, v, self.mu0, self.pbar_var(tau))
    }

    /// Coefficients of the affine score error `ε(x) = c₀ + c₁ (x − μ₀)`.
    fn error_coeffs(&self, tau: f64) -> (f64, f64) {
        let vbar = self.pbar_var(tau);
        let a = self.alpha_theta;
        ((self.mu_theta - self.mu0) / (a * vbar), (1.0 - 1.0 / a) / vbar)
    }

    pub fn score_error_moments(&self, tau: f64) -> Result<ScoreErrorMoments> {
        let (m, v) = self.reverse_moments(tau)?;
        let vbar = self.pbar_var(tau);
        let (c0, c1) = self.error_coeffs(tau);
        // ε at the p̃ mean, and ∇log(p̃/p̄) = h0 + h1 (x − μ̃)
        let e0 = c0 + c1 * (m - self.mu0);
        let h0 = (m - self.mu0) / vbar;
        let h1 = 1.0 / vbar - 1.0 / v;
        Ok(ScoreErrorMoments {
            mse_pbar: c0 * c0 + c1 * c1 * vbar,
            mse_ptilde: e0 * e0 + c1 * c1 * v,
            cross_term: e0 * h0 + c1 * h1 * v,
        })
    }

    /// LSI profile of the true marginal: a Gaussian's constant is its variance.
    pub fn lsi_profile(&self) -> LsiProfile {
        let cfg = *self;
        LsiProfile::Custom(Arc::new(move |t| Some(cfg.forward_var(t))))
    }

    pub fn schedule(&self) -> GammaSchedule {
        GammaSchedule::Constant { gamma: self.gamma }
    }

    /// `n_steps` steps geometric in forward variance from `T` to 0.
    pub fn variance_geometric_grid(&self, n_steps: usize) -> Result<TimeGrid> {
        self.variance_geometric_grid_through(n_steps, &[])
    }

    /// Variance-geometric grid that also contains each forward time in `stops`.
    pub fn variance_geometric_grid_through(&self, n_steps: usize, stops: &[f64]) -> Result<TimeGrid> {
        if n_steps == 0 {
            return Err(Error::InvalidParams("n_steps must be positive".into()));
        }
        let mut cuts: Vec<f64> = stops
            .iter()
            .copied()
            .filter(|&t| t > 0.0 && t < self.t_end)
            .collect();
        cuts.push(self.t_end);
        cuts.push(0.0);
        cuts.sort_by(|a, b| b.total_cmp(a));
        cuts.dedup();
        let s02 = self.sigma0 * self.sigma0;
        let total = (self.forward_var(self.t_end) / s02).ln();
        let mut nodes = vec![self.t_end];
        for w in cuts.windows(2) {
            let (va, vb) = (self.forward_var(w[0]), self.forward_var(w[1]));
            let k = ((n_steps as f64 * (va / vb).ln() / total).round() as usize).max(1);
            for i in 1..=k {
                let v = va * (vb / va).powf(i as f64 / k as f64);
                nodes.push(if i == k { w[1] } else { (v - s02) / (self.sigma * self.sigma) });
            }
        }
        TimeGrid::from_nodes(nodes)
    }

    /// Exact KL and both bounds of the perturbed-score theorem on `grid`.
    pub fn bound_traces(&self, grid: &TimeGrid) -> Result<AnalyticTraces> {
        let t_end = grid.t_end();
        let mut kl = Vec::new();
        let mut cross = Vec::new();
        let mut mse = Vec::new();
        for &t in grid.nodes() {
            let tau = (t_end - t).max(0.0);
            kl.push(self.kl_exact(tau)?);
            let m = self.score_error_moments(tau)?;
            cross.push(m.cross_term);
            mse.push(m.mse_ptilde);
        }
        let lsi = self.lsi_profile();
        let sched = self.schedule();
        let sde = self.process();
        let general = bounds::thm4_bound_general(kl[0], &lsi, &sched, &sde, grid, &cross)?;
        let delta = if self.gamma > 0.0 {
            Some(bounds::thm4_bound_delta_best(kl[0], &lsi, &sched, &sde, grid, &mse, 20)?)
        } else {
            None
        };
        Ok(AnalyticTraces {
            times: grid.nodes().to_vec(),
            kl,
            general,
            delta,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticTraces {
    pub times: Vec<f64>,
    pub kl: Vec<f64>,
    pub general: BoundTrace,
    /// Present only for `γ > 0`.
    pub delta: Option<BoundTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub mu_theta: Vec<f64>,
    pub alpha_theta: Vec<f64>,
    pub mu_t: Vec<f64>,
    pub beta_t: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            mu_theta: vec![1.5, 2.0, 2.5],
            alpha_theta: vec![0.8, 1.0, 1.25],
            mu_t: vec![0.0, 2.0, 4.0],
            beta_t: vec![0.5, 1.0, 2.0],
            gammas: vec![0.0, 1.0, 5.0, 20.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaEffect {
    Helped,
    Hurt,
    Neutral,
}

impl std::fmt::Display for GammaEffect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GammaEffect::Helped => "helped",
            GammaEffect::Hurt => "hurt",
            GammaEffect::Neutral => "neutral",
        })
    }
}

/// One parameter combination with its final KL per `γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mu_theta: f64,
    pub alpha_theta: f64,
    pub mu_t: f64,
    pub beta_t: f64,
    pub final_kl: Vec<f64>,
    /// Largest `γ` against the smallest.
    pub effect: GammaEffect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub gammas: Vec<f64>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Population variance of the final KL over rows, per `γ`.
    pub fn row_variance(&self) -> Vec<f64> {
        let n = self.rows.len() as f64;
        (0..self.gammas.len())
            .map(|j| {
                let m = self.rows.iter().map(|r| r.final_kl[j]).sum::<f64>() / n;
                self.rows.iter().map(|r| (r.final_kl[j] - m).powi(2)).sum::<f64>() / n
            })
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "mu_theta,alpha_theta,mu_T,beta_T,gamma,final_kl,effect")?;
        for r in &self.rows {
            for (g, kl) in self.gammas.iter().zip(&r.final_kl) {
                writeln!(
                    w,
                    "{},{},{},{},{g},{kl},{}",
                    r.mu_theta, r.alpha_theta, r.mu_t, r.beta_t, r.effect
                )?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Final KL `H(p̃₀ | p₀)` over the Cartesian product of `grid`.
pub fn sweep(base: &AnalyticConfig, grid: &SweepGrid) -> Result<SweepTable> {
    if grid.gammas.is_empty() {
        return Err(Error::InvalidParams("sweep needs at least one gamma".into()));
    }
    let mut combos = Vec::new();
    for &mt in &grid.mu_theta {
        for &at in &grid.alpha_theta {
            for &mu in &grid.mu_t {
                for &bt in &grid.beta_t {
                    combos.push((mt, at, mu, bt));
                }
            }
        }
    }
    let (lo, hi) = min_max_index(&grid.gammas);
    let rows = combos
        .into_par_iter()
        .map(|(mt, at, mu, bt)| {
            let cfg = AnalyticConfig {
                mu_theta: mt,
                alpha_theta: at,
                mu_t: mu,
                beta_t: bt,
                ..*base
            };
            let final_kl = grid
                .gammas
                .iter()
                .map(|&g| {
                    let c = cfg.with_gamma(g);
                    c.validate()?;
                    c.kl_exact(c.t_end)
                })
                .collect::<Result<Vec<f64>>>()?;
            let diff = final_kl[hi] - final_kl[lo];
            let scale = final_kl[hi].abs().max(final_kl[lo].abs());
            let effect = if diff.abs() <= 1e-12 * scale.max(1e-300) || scale < 1e-15 {
                GammaEffect::Neutral
            } else if diff < 0.0 {
                GammaEffect::Helped
            } else {
                GammaEffect::Hurt
            };
            Ok(SweepRow {
                mu_theta: mt,
                alpha_theta: at,
                mu_t: mu,
                beta_t: bt,
                final_kl,
                effect,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        gammas: grid.gammas.clone(),
        rows,
    })
}

fn min_max_index(v: &[f64]) -> (usize, usize) {
    let mut lo = 0;
    let mut hi = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[lo] {
            lo = i;
        }
        if *x > v[hi] {
            hi = i;
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn generic() -> AnalyticConfig {
        AnalyticConfig {
            mu_theta: 1.5,
            alpha_theta: 0.8,
            mu_t: 4.0,
            beta_t: 2.0,
            gamma: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn initial_moments() {
        let c = generic();
        let (m, v) = c.reverse_moments(0.0).unwrap();
        assert!((m - 4.0).abs() < 1e-15);
        assert!((v - 2.0 * 37.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_model() {
        for g in [0.0, 1.0, 5.0, 20.0] {
            let c = AnalyticConfig::default().with_gamma(g);
            assert!(c.is_perfect());
            for tau in [0.0, 0.3, 0.7, 1.0] {
                let (m, v) = c.reverse_moments(tau).unwrap();
                assert!((m - 2.0).abs() < 1e-12);
                assert!((v - c.pbar_var(tau)).abs() < 1e-10 * v);
                assert!(c.kl_exact(tau).unwrap().abs() < 1e-12);
                let e = c.score_error_moments(tau).unwrap();
                assert_eq!((e.mse_pbar, e.cross_term), (0.0, 0.0));
            }
        }
    }

    #[test]
    fn kl_at_start() {
        let c = AnalyticConfig {
            beta_t: 2.0,
            ..Default::default()
        };
        let want = 0.5 * (0.5f64.ln() + 2.0 - 1.0);
        assert!((c.kl_exact(0.0).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn branch_continuity() {
        for g in [0.0, 1.0, 5.0] {
            let base = AnalyticConfig {
                mu_t: 0.0,
                beta_t: 0.5,
                ..Default::default()
            }
            .with_gamma(g);
            let at = |a: f64| {
                AnalyticConfig {
                    alpha_theta: a,
                    ..base
                }
                .reverse_moments(0.6)
                .unwrap()
                .1
            };
            let a0 = 1.0 + g;
            let (lo, mid, hi) = (at(a0 * (1.0 - 1e-9)), at(a0), at(a0 * (1.0 + 1e-9)));
            assert!((lo - hi).abs() < 1e-6 * mid);
            assert!((lo - mid).abs() < 1e-6 * mid);
        }
    }

    #[test]
    fn alpha_one_mse() {
        let c = AnalyticConfig {
            mu_theta: 2.5,
            ..Default::default()
        };
        let mut prev = f64::INFINITY;
        for tau in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let v = c.pbar_var(tau);
            let e = c.score_error_moments(tau).unwrap();
            assert!((e.mse_pbar - 0.25 / (v * v)).abs() < 1e-15);
            // error shrinks with the forward variance, i.e. grows along sampling
            assert!(e.mse_pbar > 0.0 && e.mse_pbar.is_finite());
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn grid_hits_stops() {
        let c = generic();
        let g = c.variance_geometric_grid_through(300, &[0.75, 0.5]).unwrap();
        assert_eq!(g.t_end(), 1.0);
        assert!(g.nodes().contains(&0.75) && g.nodes().contains(&0.5));
        assert_eq!(*g.nodes().last().unwrap(), 0.0);
        assert!((g.n_steps() as i64 - 300).abs() <= 2);
    }

    #[test]
    fn zero_error_bounds_are_thm2() {
        // perfect score with a wrong prior: ε ≡ 0 so the cross-term source vanishes
        let c = AnalyticConfig {
            mu_t: 0.0,
            beta_t: 2.0,
            gamma: 1.0,
            ..Default::default()
        };
        let grid = c.variance_geometric_grid(400).unwrap();
        let tr = c.bound_traces(&grid).unwrap();
        let thm2 = bounds::thm2_bound(tr.kl[0], &c.lsi_profile(), &c.schedule(), &c.process(), &grid);
        for (a, b) in tr.general.values.iter().zip(&thm2.values) {
            assert!((a - b).abs() < 1e-12);
        }
        for (k, b) in tr.kl.iter().zip(&thm2.values) {
            assert!(*k <= b + 1e-9);
        }
    }
}
