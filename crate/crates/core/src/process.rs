//! Linear forward SDEs `dX = a(t) X dt + g(t) dW` and their marginal scale/noise.
//!
//! For a linear process the marginal at time `t` is the data law scaled by
//! `s(t) = exp(∫₀ᵗ a)` and convolved with `N(0, s(t)² σ(t)² I)` where
//! `σ(t)² = ∫₀ᵗ g(r)² / s(r)² dr`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default VP slopes (`β(t) = β₁ t + β₂`).
pub const VP_BETA1: f64 = 19.9;
pub const VP_BETA2: f64 = 0.1;
/// Default upper end of the time domain.
pub const DEFAULT_T_MAX: f64 = 80.0;

/// Coefficients of a linear SDE with additive noise, plus its marginal transform.
pub trait LinearSde: Sync {
    /// Drift coefficient `a(t)` in `f(x, t) = a(t) x`.
    fn drift_coeff(&self, t: f64) -> f64;
    /// Diffusion magnitude `g(t)`.
    fn diffusion(&self, t: f64) -> f64;
    /// Scale `s(t)`.
    fn scale(&self, t: f64) -> f64;
    /// Noise level `σ(t)` (before scaling by `s(t)`).
    fn sigma(&self, t: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessKind {
    Edm,
    Ve,
    Vp,
}

impl std::fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProcessKind::Edm => "edm",
            ProcessKind::Ve => "ve",
            ProcessKind::Vp => "vp",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VpParams {
    pub beta1: f64,
    pub beta2: f64,
}

impl Default for VpParams {
    fn default() -> Self {
        Self {
            beta1: VP_BETA1,
            beta2: VP_BETA2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coeffs {
    pub a: f64,
    pub g: f64,
    pub s: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardProcess {
    kind: ProcessKind,
    beta1: f64,
    beta2: f64,
    t_max: f64,
}

impl ForwardProcess {
    pub fn new(kind: ProcessKind, params: Option<VpParams>) -> Result<Self> {
        let (beta1, beta2) = match (kind, params) {
            (ProcessKind::Vp, p) => {
                let p = p.unwrap_or_default();
                if !(p.beta1 >= 0.0 && p.beta1.is_finite()) || !(p.beta2 > 0.0 && p.beta2.is_finite())
                {
                    return Err(Error::InvalidParams(format!(
                        "VP requires beta1 >= 0 and beta2 > 0, got ({}, {})",
                        p.beta1, p.beta2
                    )));
                }
                (p.beta1, p.beta2)
            }
            (_, Some(_)) => {
                return Err(Error::InvalidParams(format!(
                    "{kind} takes no parameters"
                )))
            }
            (_, None) => (0.0, 0.0),
        };
        Ok(Self {
            kind,
            beta1,
            beta2,
            t_max: DEFAULT_T_MAX,
        })
    }

    pub fn edm() -> Self {
        Self::new(ProcessKind::Edm, None).expect("valid")
    }

    pub fn ve() -> Self {
        Self::new(ProcessKind::Ve, None).expect("valid")
    }

    pub fn vp(beta1: f64, beta2: f64) -> Result<Self> {
        Self::new(ProcessKind::Vp, Some(VpParams { beta1, beta2 }))
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn kind(&self) -> ProcessKind {
        self.kind
    }

    pub fn vp_params(&self) -> Option<VpParams> {
        (self.kind == ProcessKind::Vp).then_some(VpParams {
            beta1: self.beta1,
            beta2: self.beta2,
        })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// All four coefficients at `t`, checked against the time domain.
    pub fn eval(&self, t: f64) -> Result<Coeffs> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("time must be >= 0, got {t}")));
        }
        if t > self.t_max {
            return Err(Error::Domain(format!(
                "time {t} exceeds t_max = {}",
                self.t_max
            )));
        }
        Ok(Coeffs {
            a: self.drift_coeff(t),
            g: self.diffusion(t),
            s: self.scale(t),
            sigma: self.sigma(t),
        })
    }

    fn vp_exponent(&self, t: f64) -> f64 {
        0.5 * self.beta1 * t * t + self.beta2 * t
    }

    /// Inverse of `σ(t)`: the forward time at which the noise level equals `sigma`.
    pub fn time_for_sigma(&self, sigma: f64) -> f64 {
        match self.kind {
            ProcessKind::Edm => sigma,
            ProcessKind::Ve => sigma * sigma,
            ProcessKind::Vp => {
                // β₁t²/2 + β₂t = ln(1 + σ²)
                let c = (sigma * sigma).ln_1p();
                if self.beta1 == 0.0 {
                    c / self.beta2
                } else {
                    let disc = self.beta2 * self.beta2 + 2.0 * self.beta1 * c;
                    // numerically stable root of the quadratic
                    2.0 * c / (self.beta2 + disc.sqrt())
                }
            }
        }
    }
}

impl LinearSde for ForwardProcess {
    fn drift_coeff(&self, t: f64) -> f64 {
        match self.kind {
            ProcessKind::Edm | ProcessKind::Ve => 0.0,
            ProcessKind::Vp => -0.5 * (self.beta1 * t + self.beta2),
        }
    }

    fn diffusion(&self, t: f64) -> f64 {
        match self.kind {
            ProcessKind::Edm => (2.0 * t).sqrt(),
            ProcessKind::Ve => 1.0,
            ProcessKind::Vp => (self.beta1 * t + self.beta2).sqrt(),
        }
    }

    fn scale(&self, t: f64) -> f64 {
        match self.kind {
            ProcessKind::Edm | ProcessKind::Ve => 1.0,
            ProcessKind::Vp => (-0.5 * self.vp_exponent(t)).exp(),
        }
    }

    fn sigma(&self, t: f64) -> f64 {
        match self.kind {
            ProcessKind::Edm => t,
            ProcessKind::Ve => t.sqrt(),
            ProcessKind::Vp => self.vp_exponent(t).exp_m1().sqrt(),
        }
    }
}
