//! Experiment drivers: sampling runs, the γ × steps and initial-time sweeps,
//! the `[S_min, S_max]` grid search, the analytic sweep and score training.
//!
//! Every cell of a sweep reuses the master seed for its prior draws, noise
//! streams and reference draws, so two cells that describe the same
//! computation produce identical numbers.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, LsiChoice, PriorKind, ScoreConfig};
use super::emit::emit_plots;
use super::manifest::Manifest;
use crate::analytic::{self, AnalyticConfig, AnalyticTraces, LinearScore, SweepTable};
use crate::bounds::{self, BoundTrace, LsiProfile};
use crate::entropy::{self, CurvePoint, Direction};
use crate::error::{Error, Result};
use crate::mixture::GaussianMixture;
use crate::process::{ForwardProcess, LinearSde};
use crate::rng::derive_key;
use crate::sampler::{
    self, ExactMixtureScore, GammaSchedule, ParticlePopulation, ScoreField, TimeGrid,
};
use crate::score_net::{self, MlpScore, TrainConfig, TrainReport};
use crate::stats;

const AUX_PRIOR_STREAM: u64 = 0xE95;
const AUX_PBAR_STREAM: u64 = 0xE9B;
const TRAIN_DATA_STREAM: u64 = 0x7A1;
const TRAIN_STREAM: u64 = 0x7A2;
const PROFILE_STREAM: u64 = 0x9F0;

pub enum ScoreModel {
    Exact,
    Learned(MlpScore),
    Analytic(LinearScore),
}

/// The resolved data law, forward process and score of a configuration.
pub struct Setting {
    pub data: GaussianMixture,
    pub sde: Arc<dyn LinearSde + Send>,
    pub score: ScoreModel,
    /// Present when the score is the linear Gauss–Markov model.
    pub analytic: Option<AnalyticConfig>,
    /// Present for EDM/VE/VP settings.
    pub process: Option<ForwardProcess>,
}

impl Setting {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        if let Some(a) = cfg.analytic_setting() {
            if matches!(cfg.schedule, GammaSchedule::Interval { .. }) {
                return Err(Error::InvalidParams(
                    "the analytic score needs a constant gamma schedule".into(),
                ));
            }
            return Ok(Self {
                data: GaussianMixture::gaussian(vec![a.mu0], a.sigma0)?,
                sde: Arc::new(a.process()),
                score: ScoreModel::Analytic(a.score()),
                analytic: Some(a),
                process: None,
            });
        }
        let process = cfg.process.build()?;
        let data = cfg.dataset.build();
        let score = match &cfg.score {
            ScoreConfig::Learned { checkpoint } => {
                let m = MlpScore::load(checkpoint)
                    .map_err(|e| e.context(format!("loading {}", checkpoint.display())))?;
                if m.state_dim() != data.dim() {
                    return Err(Error::InvalidParams(format!(
                        "checkpoint dimension {} does not match dataset dimension {}",
                        m.state_dim(),
                        data.dim()
                    )));
                }
                ScoreModel::Learned(m)
            }
            _ => ScoreModel::Exact,
        };
        Ok(Self {
            data,
            sde: Arc::new(process),
            score,
            analytic: None,
            process: Some(process),
        })
    }

    pub fn sde(&self) -> &dyn LinearSde {
        self.sde.as_ref()
    }

    pub fn field(&self) -> Box<dyn ScoreField + '_> {
        match &self.score {
            ScoreModel::Exact => Box::new(ExactMixtureScore::new(&self.data, self.sde.as_ref())),
            ScoreModel::Learned(m) => Box::new(m),
            ScoreModel::Analytic(s) => Box::new(*s),
        }
    }

    /// Karras grid for EDM/VE/VP; variance-geometric grid through the
    /// checkpoints for the analytic example.
    pub fn grid(&self, cfg: &ExperimentConfig, n_steps: usize) -> Result<TimeGrid> {
        match (&self.analytic, &self.process) {
            (Some(a), _) => a.variance_geometric_grid_through(n_steps, &cfg.checkpoint_times()),
            (None, Some(p)) => {
                let mut g = cfg.grid;
                g.n_steps = n_steps;
                g.karras(p)
            }
            (None, None) => unreachable!("a setting has a process or an analytic model"),
        }
    }

    /// Law of the sampler's starting population at forward time `t`.
    pub fn prior_law(&self, cfg: &ExperimentConfig, t: f64) -> Result<GaussianMixture> {
        match (cfg.prior, &self.analytic) {
            (PriorKind::Exact, _) => Ok(self.data.diffuse(self.sde(), t)),
            (PriorKind::Gaussian, Some(a)) => {
                GaussianMixture::gaussian(vec![a.mu_t], (a.beta_t * a.forward_var(t)).sqrt())
            }
            (PriorKind::Gaussian, None) => {
                let sde = self.sde();
                GaussianMixture::gaussian(vec![0.0; self.data.dim()], sde.scale(t) * sde.sigma(t))
            }
        }
    }

    pub fn prior(&self, cfg: &ExperimentConfig, t: f64, count: usize, seed: u64) -> Result<ParticlePopulation> {
        let mut p = self.prior_law(cfg, t)?.sample(count, seed)?;
        p.forward_time = t;
        Ok(p)
    }

    /// `(H(p̃_t | p_t), H(p_t | p̃_t))` of the prior, when computable without sampling.
    pub fn initial_kl(&self, cfg: &ExperimentConfig, t: f64) -> Result<Option<(f64, f64)>> {
        if cfg.prior == PriorKind::Exact {
            return Ok(Some((0.0, 0.0)));
        }
        if self.data.dim() != 1 {
            return Ok(None);
        }
        let prior = self.prior_law(cfg, t)?;
        let truth = self.data.diffuse(self.sde(), t);
        let fwd = entropy::kl_mixtures_1d(&prior, &truth, 1e-10)?.value;
        let rev = entropy::kl_mixtures_1d(&truth, &prior, 1e-10)?.value;
        Ok(Some((fwd, rev)))
    }

    pub fn lsi(&self, cfg: &ExperimentConfig) -> LsiProfile {
        if let Some(a) = &self.analytic {
            return a.lsi_profile();
        }
        match cfg.bounds.lsi {
            LsiChoice::Mixture => LsiProfile::Mixture {
                data: self.data.clone(),
                sde: self.sde.clone(),
            },
            LsiChoice::CompactSupport { radius } => LsiProfile::CompactSupport {
                radius,
                sde: self.sde.clone(),
            },
            LsiChoice::None => LsiProfile::None,
        }
    }

    /// Integrates from the grid node `start` and measures `H(p̃ | p)` at each
    /// recorded time (always including `t = 0`).
    pub fn run_curve(
        &self,
        cfg: &ExperimentConfig,
        schedule: &GammaSchedule,
        grid: &TimeGrid,
        start: usize,
        record_at: &[f64],
    ) -> Result<(Vec<ParticlePopulation>, Vec<CurvePoint>)> {
        let t0 = grid.nodes()[start];
        let prior = self.prior(cfg, t0, cfg.samples, cfg.seed)?;
        let mut at = record_at.to_vec();
        at.push(0.0);
        let field = self.field();
        let records = sampler::integrate(&prior, self.sde(), &*field, schedule, grid, &at)?;
        let curve = entropy::entropy_evolution(
            &records,
            &self.data,
            self.sde(),
            Direction::SamplerVsTrue,
            cfg.reference_samples,
            &cfg.histogram,
        )?;
        Ok((records, curve))
    }

    /// Final `H(p̃₀ | p₀)` of a run started at grid node `start`.
    pub fn final_kl(&self, cfg: &ExperimentConfig, schedule: &GammaSchedule, grid: &TimeGrid, start: usize) -> Result<f64> {
        let (_, curve) = self.run_curve(cfg, schedule, grid, start, &[])?;
        Ok(curve.last().expect("final point").estimate.value)
    }
}

/// Everything computed by a sampling run, before anything is written.
#[derive(Debug, Clone)]
pub struct SamplingRun {
    pub grid: TimeGrid,
    /// Populations at the checkpoints, by decreasing forward time.
    pub records: Vec<ParticlePopulation>,
    pub sampler_vs_true: Vec<CurvePoint>,
    pub true_vs_sampler: Vec<CurvePoint>,
    /// `H(p̃_T | p_T)`, by quadrature when available.
    pub h_init: f64,
    /// `H(p_T | p̃_T)`.
    pub h_init_rev: f64,
    pub traces: Vec<BoundTrace>,
    /// Closed-form `(t, H(p̃_t | p_t))` for the analytic example.
    pub analytic_kl: Option<Vec<(f64, f64)>>,
    /// Bounds that could not be formed, with the reason.
    pub skipped: Vec<String>,
}

impl SamplingRun {
    pub fn final_population(&self) -> &ParticlePopulation {
        self.records.last().expect("at least the final record")
    }

    pub fn initial_kl(&self) -> f64 {
        self.sampler_vs_true[0].estimate.value
    }

    pub fn final_kl(&self) -> f64 {
        self.sampler_vs_true.last().expect("final point").estimate.value
    }
}

/// Runs the sampler, both entropy directions and the applicable bounds.
pub fn simulate(cfg: &ExperimentConfig) -> Result<SamplingRun> {
    let setting = Setting::from_config(cfg)?;
    let grid = setting.grid(cfg, cfg.grid.n_steps)?;
    let (records, sampler_vs_true) = setting
        .run_curve(cfg, &cfg.schedule, &grid, 0, &cfg.checkpoint_times())
        .map_err(|e| e.context("sampling run"))?;
    let true_vs_sampler = entropy::entropy_evolution(
        &records,
        &setting.data,
        setting.sde(),
        Direction::TrueVsSampler,
        cfg.reference_samples,
        &cfg.histogram,
    )
    .map_err(|e| e.context("reverse-direction entropy"))?;
    let (h_init, h_init_rev) = match setting.initial_kl(cfg, grid.t_end())? {
        Some(v) => v,
        None => (sampler_vs_true[0].estimate.value, true_vs_sampler[0].estimate.value),
    };

    let mut traces = Vec::new();
    let mut skipped = Vec::new();
    let mut analytic_kl = None;
    let lsi = setting.lsi(cfg);
    match &setting.score {
        ScoreModel::Exact => {
            traces.push(bounds::thm2_bound(h_init, &lsi, &cfg.schedule, setting.sde(), &grid));
        }
        ScoreModel::Analytic(_) => {
            let a = setting.analytic.expect("analytic setting");
            let AnalyticTraces {
                times,
                kl,
                general,
                delta,
            } = a.bound_traces(&grid)?;
            analytic_kl = Some(times.into_iter().zip(kl).collect());
            traces.push(general);
            match delta {
                Some(d) => traces.push(d),
                None => skipped.push("thm4-eq2: needs gamma > 0".into()),
            }
        }
        ScoreModel::Learned(model) => {
            let (e_ptilde, e_pbar) = learned_error_moments(cfg, &setting, model, &grid)?;
            match bounds::thm4_bound_delta_best(
                h_init,
                &lsi,
                &cfg.schedule,
                setting.sde(),
                &grid,
                &e_ptilde,
                cfg.bounds.delta_ratios,
            ) {
                Ok(t) => traces.push(t),
                Err(e) => skipped.push(format!("thm4-eq2: {e}")),
            }
            match bounds::cor2_bound(h_init_rev, &cfg.schedule, setting.sde(), &grid, &e_pbar) {
                Ok(t) => traces.push(t),
                Err(e) => skipped.push(format!("cor2: {e}")),
            }
        }
    }

    Ok(SamplingRun {
        grid,
        records,
        sampler_vs_true,
        true_vs_sampler,
        h_init,
        h_init_rev,
        traces,
        analytic_kl,
        skipped,
    })
}

/// `(E_p̃[|ε|²], E_p̄[|ε|²])` at every grid node. The first comes from an
/// auxiliary run of `eps_samples` particles, the second from fresh draws of
/// the true marginals.
fn learned_error_moments(
    cfg: &ExperimentConfig,
    setting: &Setting,
    model: &MlpScore,
    grid: &TimeGrid,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = cfg.bounds.eps_samples;
    let aux_seed = derive_key(&[cfg.seed, AUX_PRIOR_STREAM]);
    let prior = setting.prior(cfg, grid.t_end(), n, aux_seed)?;
    let all = sampler::integrate(&prior, setting.sde(), model, &cfg.schedule, grid, grid.nodes())
        .map_err(|e| e.context("auxiliary score-error run"))?;
    let e_ptilde: Vec<f64> = all
        .par_iter()
        .map(|pop| score_net::score_error_moment(model, &setting.data, setting.sde(), pop))
        .collect();
    let e_pbar = score_net::score_error_profile(
        model,
        &setting.data,
        setting.sde(),
        grid.nodes(),
        n,
        derive_key(&[cfg.seed, AUX_PBAR_STREAM]),
    )?;
    Ok((e_ptilde, e_pbar))
}

#[derive(Debug, Clone)]
pub struct SamplingReport {
    pub run: SamplingRun,
    pub artifacts: Vec<PathBuf>,
}

pub const SAMPLES_FILE: &str = "samples_final.csv";
pub const ENTROPY_FWD_FILE: &str = "entropy_sampler_vs_true.csv";
pub const ENTROPY_REV_FILE: &str = "entropy_true_vs_sampler.csv";
pub const BOUNDS_FILE: &str = "bounds.csv";
pub const ANALYTIC_KL_FILE: &str = "analytic_kl.csv";

/// [`simulate`] plus CSV, plot and manifest output in `cfg.out_dir`.
pub fn run_sampling(cfg: &ExperimentConfig) -> Result<SamplingReport> {
    let run = simulate(cfg)?;
    let dir = prepare_dir(&cfg.out_dir)?;
    let mut written = Vec::new();
    run.final_population().write_csv(&dir.join(SAMPLES_FILE))?;
    written.push(SAMPLES_FILE.into());
    entropy::write_curve_csv(&dir.join(ENTROPY_FWD_FILE), &run.sampler_vs_true)?;
    entropy::write_curve_csv(&dir.join(ENTROPY_REV_FILE), &run.true_vs_sampler)?;
    written.push(ENTROPY_FWD_FILE.into());
    written.push(ENTROPY_REV_FILE.into());
    if !run.traces.is_empty() {
        let refs: Vec<&BoundTrace> = run.traces.iter().collect();
        bounds::write_traces_csv(&dir.join(BOUNDS_FILE), &refs)?;
        written.push(BOUNDS_FILE.into());
    }
    if let Some(kl) = &run.analytic_kl {
        write_rows(&dir.join(ANALYTIC_KL_FILE), "forward_time,kl_exact", kl.iter().map(|(t, v)| format!("{t},{v}")))?;
        written.push(ANALYTIC_KL_FILE.into());
    }
    let artifacts = finish(cfg, "sample", &dir, written)?;
    Ok(SamplingReport { run, artifacts })
}

fn prepare_dir(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::from(e).context(format!("creating {}", dir.display())))?;
    Ok(dir.to_path_buf())
}

fn write_rows<I: IntoIterator<Item = String>>(path: &Path, header: &str, rows: I) -> Result<()> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{header}")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    w.flush()?;
    Ok(())
}

/// Renders plots for the CSVs in `dir` and writes the manifest.
fn finish(cfg: &ExperimentConfig, command: &str, dir: &Path, mut written: Vec<PathBuf>) -> Result<Vec<PathBuf>> {
    for p in emit_plots(dir)? {
        if let Ok(rel) = p.strip_prefix(dir) {
            written.push(rel.to_path_buf());
        }
    }
    Manifest::new(command, cfg, written.clone()).write(dir)?;
    written.push(super::manifest::MANIFEST_FILE.into());
    Ok(written.into_iter().map(|p| dir.join(p)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaStepsCell {
    pub gamma: f64,
    pub n_steps: usize,
    pub final_kl: f64,
}

impl GammaStepsCell {
    /// `γ / n_steps`, the quantity the large-γ degradation collapses onto.
    pub fn ratio(&self) -> f64 {
        self.gamma / self.n_steps as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaStepsTable {
    pub cells: Vec<GammaStepsCell>,
}

impl GammaStepsTable {
    /// Cells sorted by `γ / n_steps`.
    pub fn by_ratio(&self) -> Vec<GammaStepsCell> {
        let mut v = self.cells.clone();
        v.sort_by(|a, b| a.ratio().total_cmp(&b.ratio()));
        v
    }

    /// The stochastic (`γ > 0`) cells with the larger half of `γ / n_steps`.
    pub fn degraded_half(&self) -> Vec<GammaStepsCell> {
        let v: Vec<GammaStepsCell> = self.by_ratio().into_iter().filter(|c| c.gamma > 0.0).collect();
        let skip = v.len() / 2;
        v[skip..].to_vec()
    }

    /// Spearman correlation of final KL against `γ / n_steps` on [`Self::degraded_half`].
    pub fn degraded_spearman(&self) -> f64 {
        let v = self.degraded_half();
        let x: Vec<f64> = v.iter().map(|c| c.ratio()).collect();
        let y: Vec<f64> = v.iter().map(|c| c.final_kl).collect();
        stats::spearman(&x, &y)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_rows(
            path,
            "gamma,n_steps,gamma_over_steps,final_kl",
            self.cells
                .iter()
                .map(|c| format!("{},{},{},{}", c.gamma, c.n_steps, c.ratio(), c.final_kl)),
        )
    }
}

/// Final KL for every `(γ, n_steps)` with a constant schedule.
pub fn sweep_gamma_steps(cfg: &ExperimentConfig, gammas: &[f64], steps: &[usize]) -> Result<GammaStepsTable> {
    let setting = Setting::from_config(cfg)?;
    if !matches!(setting.score, ScoreModel::Exact) {
        return Err(Error::InvalidParams("the gamma sweep uses the exact score".into()));
    }
    let grids = steps
        .iter()
        .map(|&n| setting.grid(cfg, n))
        .collect::<Result<Vec<_>>>()?;
    let mut jobs = Vec::new();
    for &g in gammas {
        for (k, &n) in steps.iter().enumerate() {
            jobs.push((g, n, k));
        }
    }
    let cells = jobs
        .into_par_iter()
        .map(|(gamma, n_steps, k)| {
            let sched = GammaSchedule::constant(gamma)?;
            let final_kl = setting
                .final_kl(cfg, &sched, &grids[k], 0)
                .map_err(|e| e.context(format!("gamma = {gamma}, n_steps = {n_steps}")))?;
            Ok(GammaStepsCell {
                gamma,
                n_steps,
                final_kl,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GammaStepsTable { cells })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSweepRow {
    pub t_requested: f64,
    /// Grid node nearest to the requested time.
    pub t_start: f64,
    pub initial_kl: f64,
    pub final_kl_sde: f64,
    pub final_kl_ode: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSweepTable {
    pub gamma: f64,
    pub rows: Vec<TimeSweepRow>,
}

impl TimeSweepTable {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_rows(
            path,
            "t_requested,t_start,initial_kl,final_kl_sde,final_kl_ode",
            self.rows.iter().map(|r| {
                format!(
                    "{},{},{},{},{}",
                    r.t_requested, r.t_start, r.initial_kl, r.final_kl_sde, r.final_kl_ode
                )
            }),
        )
    }
}

/// Starts the sampler at the grid node nearest to each requested time, on the
/// fixed grid of `cfg`, with `γ = time_sweep.gamma` and with the ODE.
pub fn sweep_initial_time(cfg: &ExperimentConfig, t_list: &[f64]) -> Result<TimeSweepTable> {
    let setting = Setting::from_config(cfg)?;
    let grid = setting.grid(cfg, cfg.grid.n_steps)?;
    let gamma = cfg.time_sweep.gamma;
    let sde_sched = GammaSchedule::constant(gamma)?;
    let ode = GammaSchedule::ode();
    let rows = t_list
        .par_iter()
        .map(|&t| {
            let start = grid.nearest_node(t);
            let t0 = grid.nodes()[start];
            let (_, sde_curve) = setting.run_curve(cfg, &sde_sched, &grid, start, &[t0])?;
            let final_kl_ode = setting.final_kl(cfg, &ode, &grid, start)?;
            Ok(TimeSweepRow {
                t_requested: t,
                t_start: t0,
                initial_kl: sde_curve[0].estimate.value,
                final_kl_sde: sde_curve.last().expect("final").estimate.value,
                final_kl_ode,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeSweepTable { gamma, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalCell {
    pub i: usize,
    pub j: usize,
    pub s_min: f64,
    pub s_max: f64,
    pub final_kl: f64,
}

impl IntervalCell {
    pub fn is_ode(&self) -> bool {
        self.i == self.j
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalGrid {
    pub nodes: Vec<f64>,
    pub gamma: f64,
    /// Upper-triangular cells `i ≤ j`, row-major.
    pub cells: Vec<IntervalCell>,
    /// Separate pure-ODE run.
    pub ode_curve: Vec<CurvePoint>,
    /// Separate constant-γ run.
    pub sde_curve: Vec<CurvePoint>,
    /// Rerun of the optimal cell with checkpoints.
    pub optimal_curve: Vec<CurvePoint>,
}

fn last_value(c: &[CurvePoint]) -> f64 {
    c.last().expect("non-empty curve").estimate.value
}

impl IntervalGrid {
    pub fn ode_kl(&self) -> f64 {
        last_value(&self.ode_curve)
    }

    pub fn sde_kl(&self) -> f64 {
        last_value(&self.sde_curve)
    }

    pub fn cell(&self, i: usize, j: usize) -> Option<&IntervalCell> {
        self.cells.iter().find(|c| c.i == i && c.j == j)
    }

    /// Lowest final KL over all cells.
    pub fn optimal(&self) -> &IntervalCell {
        self.cells
            .iter()
            .min_by(|a, b| a.final_kl.total_cmp(&b.final_kl))
            .expect("non-empty grid")
    }

    /// Lowest final KL over the cells with a non-empty interval.
    pub fn best_stochastic(&self) -> Option<&IntervalCell> {
        self.cells
            .iter()
            .filter(|c| !c.is_ode())
            .min_by(|a, b| a.final_kl.total_cmp(&b.final_kl))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_rows(
            path,
            "i,j,s_min,s_max,final_kl",
            self.cells
                .iter()
                .map(|c| format!("{},{},{},{},{}", c.i, c.j, c.s_min, c.s_max, c.final_kl)),
        )
    }
}

/// Final KL with `γ(t) = interval.gamma` on `[S_min, S_max]` for every pair
/// of nodes `S_min ≤ S_max`.
pub fn grid_search_interval(cfg: &ExperimentConfig, s_grid: &[f64]) -> Result<IntervalGrid> {
    let t_end = cfg.grid.t_end;
    if s_grid.len() < 2 || s_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParams("interval nodes must be strictly increasing, at least two".into()));
    }
    if s_grid[0] < 0.0 || s_grid[s_grid.len() - 1] > t_end {
        return Err(Error::InvalidParams(format!("interval nodes must lie in [0, {t_end}]")));
    }
    let setting = Setting::from_config(cfg)?;
    let grid = setting.grid(cfg, cfg.grid.n_steps)?;
    let gamma = cfg.interval.gamma;
    let mut jobs = Vec::new();
    for i in 0..s_grid.len() {
        for j in i..s_grid.len() {
            jobs.push((i, j));
        }
    }
    let cells = jobs
        .into_par_iter()
        .map(|(i, j)| {
            let sched = GammaSchedule::interval(gamma, s_grid[i], s_grid[j])?;
            let final_kl = setting
                .final_kl(cfg, &sched, &grid, 0)
                .map_err(|e| e.context(format!("interval [{}, {}]", s_grid[i], s_grid[j])))?;
            Ok(IntervalCell {
                i,
                j,
                s_min: s_grid[i],
                s_max: s_grid[j],
                final_kl,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let checkpoints = cfg.checkpoint_times();
    let (_, ode_curve) = setting.run_curve(cfg, &GammaSchedule::ode(), &grid, 0, &checkpoints)?;
    let (_, sde_curve) = setting.run_curve(cfg, &GammaSchedule::constant(gamma)?, &grid, 0, &checkpoints)?;
    let mut out = IntervalGrid {
        nodes: s_grid.to_vec(),
        gamma,
        cells,
        ode_curve,
        sde_curve,
        optimal_curve: Vec::new(),
    };
    let best = *out.optimal();
    let sched = GammaSchedule::interval(gamma, best.s_min, best.s_max)?;
    out.optimal_curve = setting.run_curve(cfg, &sched, &grid, 0, &checkpoints)?.1;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSweepReport {
    pub table: SweepTable,
    /// `(γ, traces)` for the imperfect trace model.
    pub traces: Vec<(f64, AnalyticTraces)>,
}

impl AnalyticSweepReport {
    pub fn write_traces_csv(&self, path: &Path) -> Result<()> {
        let mut rows = Vec::new();
        for (g, tr) in &self.traces {
            for (k, t) in tr.times.iter().enumerate() {
                let delta = tr.delta.as_ref().map(|d| d.values[k].to_string()).unwrap_or_default();
                rows.push(format!("{g},{t},{},{},{delta}", tr.kl[k], tr.general.values[k]));
            }
        }
        write_rows(path, "gamma,forward_time,kl_exact,thm4_eq1,thm4_eq2", rows)
    }
}

/// Closed-form final KL over the parameter grid, plus exact KL and both
/// perturbed-score bounds along time for each trace `γ`.
pub fn analytic_sweep(cfg: &ExperimentConfig) -> Result<AnalyticSweepReport> {
    let a = &cfg.analytic;
    a.base.validate()?;
    a.trace_base.validate()?;
    let table = analytic::sweep(&a.base, &a.grid)?;
    let traces = a
        .trace_gammas
        .iter()
        .map(|&g| {
            let c = a.trace_base.with_gamma(g);
            let grid = c.variance_geometric_grid(a.n_steps)?;
            Ok((g, c.bound_traces(&grid)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnalyticSweepReport { table, traces })
}

pub struct TrainOutcome {
    pub model: MlpScore,
    pub report: TrainReport,
    /// `(t, E_{p_t}[|ε_t|²])`.
    pub profile: Vec<(f64, f64)>,
}

/// The optimiser settings actually used: `t_end` follows the grid and the
/// seed is derived from the master seed.
pub fn effective_train_config(cfg: &ExperimentConfig) -> TrainConfig {
    TrainConfig {
        t_end: cfg.grid.t_end,
        seed: derive_key(&[cfg.seed, TRAIN_STREAM]),
        ..cfg.train.optim
    }
}

/// Trains the MLP score on a fixed draw from the data law and reports its
/// score-error profile.
pub fn train_score(cfg: &ExperimentConfig) -> Result<TrainOutcome> {
    let process = cfg.process.build()?;
    let data = cfg.dataset.build();
    let t = &cfg.train;
    let set = data.sample(t.dataset_size, derive_key(&[cfg.seed, TRAIN_DATA_STREAM]))?;
    let mut model = MlpScore::new(data.dim(), &t.hidden, t.activation, cfg.seed)?;
    let report = score_net::train(&mut model, &set, &process, &effective_train_config(cfg))
        .map_err(|e| e.context("training"))?;
    let errs = score_net::score_error_profile(
        &model,
        &data,
        &process,
        &t.profile_times,
        t.profile_samples,
        derive_key(&[cfg.seed, PROFILE_STREAM]),
    )?;
    let profile = t.profile_times.iter().copied().zip(errs).collect();
    Ok(TrainOutcome {
        model,
        report,
        profile,
    })
}

pub const CHECKPOINT_FILE: &str = "score.json";
pub const LOSS_FILE: &str = "train_loss.csv";
pub const PROFILE_FILE: &str = "score_error_profile.csv";
pub const SWEEP_GAMMA_FILE: &str = "sweep_gamma.csv";
pub const SWEEP_TIME_FILE: &str = "sweep_time.csv";
pub const INTERVAL_FILE: &str = "interval_matrix.csv";
pub const ANALYTIC_SWEEP_FILE: &str = "analytic_sweep.csv";
pub const ANALYTIC_TRACES_FILE: &str = "analytic_traces.csv";

/// `sweep-gamma`: table CSV, plot and manifest.
pub fn run_sweep_gamma(cfg: &ExperimentConfig) -> Result<(GammaStepsTable, Vec<PathBuf>)> {
    let table = sweep_gamma_steps(cfg, &cfg.sweep.gammas, &cfg.sweep.steps)?;
    let dir = prepare_dir(&cfg.out_dir)?;
    table.write_csv(&dir.join(SWEEP_GAMMA_FILE))?;
    let files = finish(cfg, "sweep-gamma", &dir, vec![SWEEP_GAMMA_FILE.into()])?;
    Ok((table, files))
}

/// `sweep-time`.
pub fn run_sweep_time(cfg: &ExperimentConfig) -> Result<(TimeSweepTable, Vec<PathBuf>)> {
    let table = sweep_initial_time(cfg, &cfg.time_sweep.t_list)?;
    let dir = prepare_dir(&cfg.out_dir)?;
    table.write_csv(&dir.join(SWEEP_TIME_FILE))?;
    let files = finish(cfg, "sweep-time", &dir, vec![SWEEP_TIME_FILE.into()])?;
    Ok((table, files))
}

/// `grid-interval`: matrix CSV, the ODE/SDE/optimal entropy curves, heatmap.
pub fn run_grid_interval(cfg: &ExperimentConfig) -> Result<(IntervalGrid, Vec<PathBuf>)> {
    let nodes = cfg.interval.nodes(cfg.grid.t_end);
    let g = grid_search_interval(cfg, &nodes)?;
    let dir = prepare_dir(&cfg.out_dir)?;
    g.write_csv(&dir.join(INTERVAL_FILE))?;
    let mut written: Vec<PathBuf> = vec![INTERVAL_FILE.into()];
    for (name, curve) in [
        ("entropy_ode.csv", &g.ode_curve),
        ("entropy_sde.csv", &g.sde_curve),
        ("entropy_optimal.csv", &g.optimal_curve),
    ] {
        entropy::write_curve_csv(&dir.join(name), curve)?;
        written.push(name.into());
    }
    let files = finish(cfg, "grid-interval", &dir, written)?;
    Ok((g, files))
}

/// `analytic-sweep`.
pub fn run_analytic_sweep(cfg: &ExperimentConfig) -> Result<(AnalyticSweepReport, Vec<PathBuf>)> {
    let r = analytic_sweep(cfg)?;
    let dir = prepare_dir(&cfg.out_dir)?;
    r.table.write_csv(&dir.join(ANALYTIC_SWEEP_FILE))?;
    r.write_traces_csv(&dir.join(ANALYTIC_TRACES_FILE))?;
    let files = finish(
        cfg,
        "analytic-sweep",
        &dir,
        vec![ANALYTIC_SWEEP_FILE.into(), ANALYTIC_TRACES_FILE.into()],
    )?;
    Ok((r, files))
}

/// `train-score`: checkpoint, loss curve and score-error profile.
pub fn run_train_score(cfg: &ExperimentConfig) -> Result<(TrainOutcome, Vec<PathBuf>)> {
    let out = train_score(cfg)?;
    let dir = prepare_dir(&cfg.out_dir)?;
    out.model.save(&dir.join(CHECKPOINT_FILE))?;
    let smooth = out.report.smoothed(100);
    write_rows(
        &dir.join(LOSS_FILE),
        "step,loss,smoothed",
        out.report
            .losses
            .iter()
            .zip(&smooth)
            .enumerate()
            .map(|(i, (l, s))| format!("{i},{l},{s}")),
    )?;
    write_rows(
        &dir.join(PROFILE_FILE),
        "forward_time,score_mse",
        out.profile.iter().map(|(t, e)| format!("{t},{e}")),
    )?;
    let files = finish(
        cfg,
        "train-score",
        &dir,
        vec![CHECKPOINT_FILE.into(), LOSS_FILE.into(), PROFILE_FILE.into()],
    )?;
    Ok((out, files))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::HistogramConfig;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            samples: 10_000,
            reference_samples: 10_000,
            grid: super::super::config::GridConfig {
                n_steps: 40,
                ..Default::default()
            },
            histogram: HistogramConfig::default(),
            ..Default::default()
        }
    }

    #[test]
    fn exact_score_run_has_thm2_trace() {
        let run = simulate(&small()).unwrap();
        assert_eq!(run.records.len(), 5);
        assert_eq!(run.traces.len(), 1);
        assert_eq!(run.traces[0].kind, bounds::BoundKind::Thm2);
        assert!(run.h_init > 0.0);
        assert_eq!(run.final_population().forward_time, 0.0);
    }

    #[test]
    fn analytic_score_run_traces_closed_form() {
        let mut cfg = small();
        cfg.score = ScoreConfig::Analytic {
            mu_theta: 2.5,
            alpha_theta: 1.25,
        };
        cfg.grid.t_end = 1.0;
        let run = simulate(&cfg).unwrap();
        assert_eq!(run.traces.len(), 2);
        let kl = run.analytic_kl.as_ref().unwrap();
        assert_eq!(kl.len(), run.grid.nodes().len());
        assert!((run.h_init - kl[0].1).abs() < 1e-8);
    }

    #[test]
    fn analytic_score_rejects_interval_schedule() {
        let mut cfg = small();
        cfg.score = ScoreConfig::Analytic {
            mu_theta: 2.0,
            alpha_theta: 1.0,
        };
        cfg.schedule = GammaSchedule::Interval {
            gamma: 1.0,
            s_min: 0.1,
            s_max: 0.2,
        };
        assert!(Setting::from_config(&cfg).is_err());
    }

    #[test]
    fn degraded_half_picks_large_ratios() {
        let mut cells = Vec::new();
        for (g, n) in [(0.0, 10), (1.0, 10), (2.0, 10), (1.0, 100), (2.0, 100)] {
            cells.push(GammaStepsCell {
                gamma: g,
                n_steps: n,
                final_kl: g / n as f64,
            });
        }
        let t = GammaStepsTable { cells };
        let d = t.degraded_half();
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|c| c.n_steps == 10));
        assert_eq!(t.degraded_spearman(), 1.0);
    }
}
