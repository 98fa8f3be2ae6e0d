//! TOML experiment configuration. Every field has a default, so an empty file
//! is a valid configuration (EDM, default mixture, Gaussian prior, exact
//! score, `γ ≡ 1`, `T = 0.75`, 500 Karras steps, 10⁵ samples).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytic::{AnalyticConfig, SweepGrid};
use crate::entropy::{HistogramConfig, DEFAULT_REFERENCE_COUNT};
use crate::error::{Error, Result};
use crate::mixture::GaussianMixture;
use crate::process::{ForwardProcess, ProcessKind, VpParams, VP_BETA1, VP_BETA2};
use crate::sampler::{GammaSchedule, TimeGrid, DEFAULT_RHO, DEFAULT_SIGMA_MIN};
use crate::score_net::{Activation, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub process: ProcessConfig,
    pub dataset: DatasetConfig,
    pub prior: PriorKind,
    pub score: ScoreConfig,
    pub schedule: GammaSchedule,
    pub grid: GridConfig,
    /// Number of sampler particles.
    pub samples: usize,
    /// Fresh draws of the true marginal per entropy checkpoint.
    pub reference_samples: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Forward times at which entropy is measured; defaults to `T, ¾T, ½T, ¼T, 0`.
    pub checkpoints: Option<Vec<f64>>,
    pub histogram: HistogramConfig,
    pub bounds: BoundsConfig,
    pub sweep: SweepConfig,
    pub time_sweep: TimeSweepConfig,
    pub interval: IntervalConfig,
    pub train: TrainSection,
    pub analytic: AnalyticSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            process: ProcessConfig::default(),
            dataset: DatasetConfig::default(),
            prior: PriorKind::Gaussian,
            score: ScoreConfig::Exact,
            schedule: GammaSchedule::Constant { gamma: 1.0 },
            grid: GridConfig::default(),
            samples: 100_000,
            reference_samples: DEFAULT_REFERENCE_COUNT,
            seed: 0,
            out_dir: PathBuf::from("out"),
            checkpoints: None,
            histogram: HistogramConfig::default(),
            bounds: BoundsConfig::default(),
            sweep: SweepConfig::default(),
            time_sweep: TimeSweepConfig::default(),
            interval: IntervalConfig::default(),
            train: TrainSection::default(),
            analytic: AnalyticSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProcessConfig {
    pub kind: ProcessKind,
    /// VP only.
    pub beta1: f64,
    /// VP only.
    pub beta2: f64,
}

impl Default for ProcessConfig {
    fn default() -> Self {
        Self {
            kind: ProcessKind::Edm,
            beta1: VP_BETA1,
            beta2: VP_BETA2,
        }
    }
}

impl ProcessConfig {
    pub fn build(&self) -> Result<ForwardProcess> {
        let params = (self.kind == ProcessKind::Vp).then_some(VpParams {
            beta1: self.beta1,
            beta2: self.beta2,
        });
        ForwardProcess::new(self.kind, params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetPreset {
    /// `0.1·N(−1, 0.2²) + 0.9·N(0.1, 0.1²)` in one dimension.
    Default,
    TwoD,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetConfig {
    Preset { preset: DatasetPreset },
    Mixture { components: GaussianMixture },
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig::Preset {
            preset: DatasetPreset::Default,
        }
    }
}

impl DatasetConfig {
    pub fn build(&self) -> GaussianMixture {
        match self {
            DatasetConfig::Preset {
                preset: DatasetPreset::Default,
            } => GaussianMixture::default_dataset(),
            DatasetConfig::Preset {
                preset: DatasetPreset::TwoD,
            } => GaussianMixture::two_d_preset(),
            DatasetConfig::Mixture { components } => components.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorKind {
    /// Draws of the true marginal `p_T`.
    Exact,
    /// Isotropic Gaussian matched to the noise level at `T`.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScoreConfig {
    Exact,
    Learned {
        checkpoint: PathBuf,
    },
    /// The linear score of the Gauss–Markov example. The data law, forward
    /// process and prior then come from the `[analytic.base]` section.
    Analytic {
        mu_theta: f64,
        alpha_theta: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub t_end: f64,
    pub n_steps: usize,
    pub sigma_min: f64,
    pub rho: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            t_end: 0.75,
            n_steps: 500,
            sigma_min: DEFAULT_SIGMA_MIN,
            rho: DEFAULT_RHO,
        }
    }
}

impl GridConfig {
    pub fn karras(&self, process: &ForwardProcess) -> Result<TimeGrid> {
        TimeGrid::karras_for(process, self.t_end, self.n_steps, self.sigma_min, self.rho)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LsiChoice {
    /// Two-component mixture formula on the diffused data law.
    Mixture,
    CompactSupport { radius: f64 },
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    pub lsi: LsiChoice,
    /// Particles used for the score-error moments of learned scores.
    pub eps_samples: usize,
    /// Number of constant `δ/γ` ratios scanned by the δ-form bound.
    pub delta_ratios: usize,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            lsi: LsiChoice::Mixture,
            eps_samples: 2000,
            delta_ratios: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub gammas: Vec<f64>,
    pub steps: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            gammas: vec![0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0],
            steps: vec![125, 250, 500, 1000],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSweepConfig {
    pub t_list: Vec<f64>,
    /// `γ` of the SDE column.
    pub gamma: f64,
}

impl Default for TimeSweepConfig {
    fn default() -> Self {
        Self {
            t_list: vec![0.75, 0.5, 0.3, 0.2, 0.1, 0.05],
            gamma: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntervalConfig {
    pub gamma: f64,
    /// Nodes of the uniform `[0, T]` grid for `S_min, S_max`.
    pub n_nodes: usize,
    /// Explicit node list; overrides `n_nodes`.
    pub nodes: Option<Vec<f64>>,
}

impl Default for IntervalConfig {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            n_nodes: 6,
            nodes: None,
        }
    }
}

impl IntervalConfig {
    pub fn nodes(&self, t_end: f64) -> Vec<f64> {
        match &self.nodes {
            Some(v) => v.clone(),
            None => {
                let n = self.n_nodes.max(2);
                (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    /// Size of the fixed training set drawn from the data law.
    pub dataset_size: usize,
    /// Times at which the score-error profile is reported.
    pub profile_times: Vec<f64>,
    pub profile_samples: usize,
    pub optim: TrainConfig,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            hidden: vec![100, 100, 100],
            activation: Activation::Silu,
            dataset_size: 100_000,
            profile_times: vec![0.001, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.75],
            profile_samples: 10_000,
            optim: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticSection {
    /// Data law, forward noise and the prior `N(μ_T, β_T σ(T)²)`.
    pub base: AnalyticConfig,
    pub grid: SweepGrid,
    /// Steps of the variance-geometric grid used for bound traces.
    pub n_steps: usize,
    /// Imperfect model whose exact KL and bounds are traced per `γ`.
    pub trace_base: AnalyticConfig,
    pub trace_gammas: Vec<f64>,
}

impl Default for AnalyticSection {
    fn default() -> Self {
        Self {
            base: AnalyticConfig::default(),
            grid: SweepGrid::default(),
            n_steps: 2000,
            trace_base: AnalyticConfig {
                mu_theta: 2.5,
                alpha_theta: 1.25,
                mu_t: 4.0,
                beta_t: 2.0,
                ..AnalyticConfig::default()
            },
            trace_gammas: vec![1.0, 5.0, 20.0],
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| e.context(format!("parsing {}", path.display())))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn checkpoint_times(&self) -> Vec<f64> {
        let t = self.grid.t_end;
        self.checkpoints
            .clone()
            .unwrap_or_else(|| vec![t, 0.75 * t, 0.5 * t, 0.25 * t, 0.0])
    }

    /// The analytic configuration used when the score is the linear model.
    pub fn analytic_setting(&self) -> Option<AnalyticConfig> {
        match self.score {
            ScoreConfig::Analytic {
                mu_theta,
                alpha_theta,
            } => Some(AnalyticConfig {
                mu_theta,
                alpha_theta,
                t_end: self.grid.t_end,
                gamma: self.schedule.gamma(),
                ..self.analytic.base
            }),
            _ => None,
        }
    }

    /// Structural checks that do not need any computation.
    pub fn validate(&self) -> Result<()> {
        let t = self.grid.t_end;
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParams(format!("grid.t_end must be positive, got {t}")));
        }
        if self.grid.n_steps == 0 {
            return Err(Error::InvalidParams("grid.n_steps must be positive".into()));
        }
        if self.samples == 0 || self.reference_samples == 0 {
            return Err(Error::InvalidParams("sample counts must be positive".into()));
        }
        self.schedule.validate(t)?;
        for &c in &self.checkpoint_times() {
            if !(0.0..=t).contains(&c) {
                return Err(Error::InvalidParams(format!(
                    "checkpoint {c} lies outside [0, {t}]"
                )));
            }
        }
        if let ScoreConfig::Learned { checkpoint } = &self.score {
            if !checkpoint.is_file() {
                return Err(Error::MissingInput(format!(
                    "score checkpoint {} does not exist",
                    checkpoint.display()
                )));
            }
        }
        if let Some(a) = self.analytic_setting() {
            a.validate()?;
        }
        self.process.build()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn toml_roundtrip() {
        let mut cfg = ExperimentConfig::default();
        cfg.score = ScoreConfig::Analytic {
            mu_theta: 1.5,
            alpha_theta: 0.8,
        };
        cfg.schedule = GammaSchedule::Interval {
            gamma: 2.0,
            s_min: 0.1,
            s_max: 0.5,
        };
        cfg.dataset = DatasetConfig::Preset {
            preset: DatasetPreset::TwoD,
        };
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn parses_documented_sections() {
        let text = r#"
            seed = 7
            prior = "exact"
            [process]
            kind = "vp"
            [schedule]
            kind = "constant"
            gamma = 0.0
            [grid]
            t_end = 0.5
            n_steps = 100
            [[dataset.components]]
            weight = 1.0
            mean = [0.0]
            std = 1.0
            [bounds.lsi]
            kind = "compact-support"
            radius = 1.0
        "#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.prior, PriorKind::Exact);
        assert_eq!(cfg.process.kind, ProcessKind::Vp);
        assert_eq!(cfg.dataset.build().components().len(), 1);
        assert_eq!(cfg.bounds.lsi, LsiChoice::CompactSupport { radius: 1.0 });
        assert_eq!(cfg.checkpoint_times(), vec![0.5, 0.375, 0.25, 0.125, 0.0]);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_keys_and_missing_checkpoint() {
        assert!(ExperimentConfig::from_toml_str("sampels = 3").is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.score = ScoreConfig::Learned {
            checkpoint: PathBuf::from("/nonexistent/score.json"),
        };
        assert!(matches!(cfg.validate(), Err(Error::MissingInput(_))));
        cfg.score = ScoreConfig::Exact;
        cfg.checkpoints = Some(vec![1.0]);
        assert!(cfg.validate().is_err());
    }
}
