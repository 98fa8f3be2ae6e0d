//! Log-Sobolev constants and KL bound curves along a sampling run.
//!
//! All bound traces share one accumulator. With reverse time `τ = T − t`, a
//! rate `α(τ)` and a source `f(τ)`, it evaluates
//!
//! ```text
//! B(τ) = e^{−∫₀^τ α} B₀ + ∫₀^τ e^{−∫_s^τ α} f(s) ds
//! ```
//!
//! on the sampler grid with the trapezoid rule.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::GaussianMixture;
use crate::process::LinearSde;
use crate::quadrature;
use crate::sampler::{GammaSchedule, TimeGrid};

/// `χ²(N(m0, v0 I) ‖ N(m1, v1 I))`. Finite only when `2 v1 > v0`.
pub fn chi2_spherical(m0: &[f64], v0: f64, m1: &[f64], v1: f64) -> Result<f64> {
    check_pair(m0, v0, m1, v1)?;
    let denom = 2.0 * v1 - v0;
    if !(denom > 0.0) {
        return Err(Error::DivergenceUndefined(format!(
            "needs 2·var1 > var0, got var0 = {v0}, var1 = {v1}"
        )));
    }
    let n = m0.len() as f64;
    let d2: f64 = m0.iter().zip(m1).map(|(a, b)| (a - b).powi(2)).sum();
    // log of (v1 / sqrt(v0 (2 v1 − v0)))^n · exp(|Δm|² / (2 v1 − v0))
    let log1 = n * (v1.ln() - 0.5 * (v0.ln() + denom.ln())) + d2 / denom;
    Ok(log1.exp_m1())
}

/// The closed form as it is commonly printed,
/// `(2 v0 / (v1 (v0 + v1/2)))^{n/2} exp(|Δm|² / (2 v0 + v1)) − 1`.
///
/// Kept for comparison only: it is not zero for identical Gaussians and
/// disagrees with direct integration. Use [`chi2_spherical`].
pub fn chi2_spherical_printed(m0: &[f64], v0: f64, m1: &[f64], v1: f64) -> Result<f64> {
    check_pair(m0, v0, m1, v1)?;
    let n = m0.len() as f64;
    let d2: f64 = m0.iter().zip(m1).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((2.0 * v0 / (v1 * (v0 + 0.5 * v1))).powf(0.5 * n) * (d2 / (2.0 * v0 + v1)).exp() - 1.0)
}

/// `χ²` by adaptive quadrature of `∫ p0²/p1 − 1`, one axis at a time.
pub fn chi2_quadrature(m0: &[f64], v0: f64, m1: &[f64], v1: f64, tol: f64) -> Result<f64> {
    check_pair(m0, v0, m1, v1)?;
    if !(2.0 * v1 > v0) {
        return Err(Error::DivergenceUndefined(format!(
            "∫ p0²/p1 diverges for var0 = {v0}, var1 = {v1}"
        )));
    }
    let mut log_prod = 0.0;
    for (&a, &b) in m0.iter().zip(m1) {
        // p0²/p1 is an unnormalised Gaussian in x; integrate around its peak
        let prec = 2.0 / v0 - 1.0 / v1;
        let centre = (2.0 * a / v0 - b / v1) / prec;
        let half = 40.0 / prec.sqrt();
        let lp = |x: f64, m: f64, v: f64| {
            -0.5 * (2.0 * std::f64::consts::PI * v).ln() - (x - m).powi(2) / (2.0 * v)
        };
        let integrand = |x: f64| (2.0 * lp(x, a, v0) - lp(x, b, v1)).exp();
        let peak = integrand(centre);
        let v = quadrature::integrate(
            |x| integrand(x) / peak,
            centre - half,
            centre + half,
            tol,
        )?;
        log_prod += v.ln() + peak.ln();
    }
    Ok(log_prod.exp_m1())
}

fn check_pair(m0: &[f64], v0: f64, m1: &[f64], v1: f64) -> Result<()> {
    if !(v0 > 0.0 && v1 > 0.0) {
        return Err(Error::Domain(format!("variances must be positive, got {v0}, {v1}")));
    }
    if m0.len() != m1.len() || m0.is_empty() {
        return Err(Error::InvalidParams("mean vectors must share a nonzero dimension".into()));
    }
    Ok(())
}

/// `λ_p = (log p − log(1−p)) / (2p − 1)`, continuous at `p = ½` where it is 2.
pub fn lambda_p(p: f64) -> f64 {
    // with u = 2p − 1 the ratio is 2·atanh(u)/u
    let u = 2.0 * p - 1.0;
    if u.abs() < 1e-4 {
        let u2 = u * u;
        2.0 * (1.0 + u2 / 3.0 + u2 * u2 / 5.0)
    } else {
        2.0 * u.atanh() / u
    }
}

/// A spherical Gaussian component `(mean, std)`.
pub type SphericalComponent<'a> = (&'a [f64], f64);

/// Upper bound `min{C₀, C₁}` on the LSI constant of `p·μ₀ + (1−p)·μ₁`.
///
/// A candidate whose `χ²` term diverges is dropped; the call fails only when
/// both do.
pub fn lsi_two_component(
    p: f64,
    comp0: SphericalComponent<'_>,
    comp1: SphericalComponent<'_>,
) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParams(format!("weight must lie in (0, 1), got {p}")));
    }
    let (m0, s0) = comp0;
    let (m1, s1) = comp1;
    let (v0, v1) = (s0 * s0, s1 * s1);
    let lam = lambda_p(p);
    let c0 = chi2_spherical(m1, v1, m0, v0)
        .map(|c| (v0 * (1.0 + (1.0 - p) * lam)).max(v1 * (1.0 + p * lam * (c + 1.0))));
    let c1 = chi2_spherical(m0, v0, m1, v1)
        .map(|c| (v1 * (1.0 + p * lam)).max(v0 * (1.0 + (1.0 - p) * lam * (c + 1.0))));
    match (c0, c1) {
        (Ok(a), Ok(b)) => Ok(a.min(b)),
        (Ok(a), Err(_)) | (Err(_), Ok(a)) => Ok(a),
        (Err(e), Err(_)) => Err(e),
    }
}

/// LSI bound for a mixture with one or two components.
pub fn lsi_mixture(m: &GaussianMixture) -> Result<f64> {
    match m.components() {
        [c] => Ok(c.std * c.std),
        [a, b] => lsi_two_component(a.weight, (&a.mean, a.std), (&b.mean, b.std)),
        cs => Err(Error::InvalidParams(format!(
            "mixture LSI formula needs at most two components, got {}",
            cs.len()
        ))),
    }
}

/// `6 s² (4R² + σ²) e^{4R²/σ²}` for data supported in a ball of radius `R`.
pub fn lsi_compact_support(radius: f64, sde: &dyn LinearSde, t: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParams(format!("radius must be positive, got {radius}")));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("compact-support constant needs t > 0, got {t}")));
    }
    let (s, sig) = (sde.scale(t), sde.sigma(t));
    let r2 = 4.0 * radius * radius;
    let v = sig * sig;
    Ok(6.0 * s * s * (r2 + v) * (r2 / v).exp())
}

/// Source of the LSI constant `C_LSI(t)` of the true marginal.
#[derive(Clone)]
pub enum LsiProfile {
    /// Two-component mixture formula applied to the diffused data law.
    Mixture {
        data: GaussianMixture,
        sde: Arc<dyn LinearSde + Send>,
    },
    CompactSupport {
        radius: f64,
        sde: Arc<dyn LinearSde + Send>,
    },
    Constant(f64),
    Custom(Arc<dyn Fn(f64) -> Option<f64> + Send + Sync>),
    /// No inequality known: `C(t) = 0`.
    None,
}

impl fmt::Debug for LsiProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LsiProfile::Mixture { data, .. } => f.debug_struct("Mixture").field("data", data).finish(),
            LsiProfile::CompactSupport { radius, .. } => {
                f.debug_struct("CompactSupport").field("radius", radius).finish()
            }
            LsiProfile::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            LsiProfile::Custom(_) => f.write_str("Custom"),
            LsiProfile::None => f.write_str("None"),
        }
    }
}

impl LsiProfile {
    pub fn source(&self) -> &'static str {
        match self {
            LsiProfile::Mixture { .. } => "mixture-two-component",
            LsiProfile::CompactSupport { .. } => "compact-support",
            LsiProfile::Constant(_) | LsiProfile::Custom(_) => "user-supplied",
            LsiProfile::None => "none",
        }
    }

    /// `C_LSI(t)`, or `None` where no finite constant is available.
    pub fn c_lsi(&self, t: f64) -> Option<f64> {
        let v = match self {
            LsiProfile::Mixture { data, sde } => lsi_mixture(&data.diffuse(sde.as_ref(), t)).ok(),
            LsiProfile::CompactSupport { radius, sde } => {
                lsi_compact_support(*radius, sde.as_ref(), t).ok()
            }
            LsiProfile::Constant(c) => Some(*c),
            LsiProfile::Custom(f) => f(t),
            LsiProfile::None => None,
        };
        v.filter(|c| *c > 0.0 && c.is_finite())
    }

    /// `C(t) = 1/C_LSI(t)`, zero where undefined.
    pub fn inverse(&self, t: f64) -> f64 {
        self.c_lsi(t).map_or(0.0, |c| 1.0 / c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Thm2,
    Thm4Eq1,
    Thm4Eq2,
    Cor2,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundKind::Thm2 => "thm2",
            BoundKind::Thm4Eq1 => "thm4-eq1",
            BoundKind::Thm4Eq2 => "thm4-eq2",
            BoundKind::Cor2 => "cor2",
        })
    }
}

/// A KL bound on the grid nodes, ordered by decreasing forward time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTrace {
    pub kind: BoundKind,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `e^{−∫α}` at each node.
    pub decay: Vec<f64>,
    /// Constant ratio `δ/γ` for the δ form.
    pub delta_ratio: Option<f64>,
}

impl BoundTrace {
    /// Bound value at the node nearest to `t`.
    pub fn at(&self, t: f64) -> f64 {
        let mut best = 0;
        for (i, &v) in self.times.iter().enumerate() {
            if (v - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        self.values[best]
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("non-empty trace")
    }
}

/// Per-node inputs of the accumulator.
fn accumulate(times: &[f64], start: f64, rate: &[f64], source: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = times.len();
    let mut values = Vec::with_capacity(n);
    let mut decay = Vec::with_capacity(n);
    let mut big_a = 0.0;
    let mut j = 0.0;
    values.push(start + j);
    decay.push(1.0);
    for k in 0..n - 1 {
        let dtau = times[k] - times[k + 1];
        let da = 0.5 * dtau * (rate[k] + rate[k + 1]);
        let e = (-da).exp();
        big_a += da;
        j = j * e + 0.5 * dtau * (source[k] * e + source[k + 1]);
        let d = (-big_a).exp();
        decay.push(d);
        values.push(d * start + j);
    }
    (values, decay)
}

fn g2(sde: &dyn LinearSde, t: f64) -> f64 {
    let g = sde.diffusion(t);
    g * g
}

fn check_per_node(name: &str, v: &[f64], grid: &TimeGrid) -> Result<()> {
    if v.len() != grid.nodes().len() {
        return Err(Error::InvalidParams(format!(
            "{name} has {} values for {} grid nodes",
            v.len(),
            grid.nodes().len()
        )));
    }
    Ok(())
}

/// `H(p̃_τ | p̄_τ) ≤ e^{−∫₀^τ C γ ḡ²} H_init`.
pub fn thm2_bound(
    h_init: f64,
    lsi: &LsiProfile,
    schedule: &GammaSchedule,
    sde: &dyn LinearSde,
    grid: &TimeGrid,
) -> BoundTrace {
    let zeros = vec![0.0; grid.nodes().len()];
    thm4_general_unchecked(h_init, lsi, schedule, sde, grid, &zeros, BoundKind::Thm2)
}

/// First form with the cross term `E_p̃[ε · ∇log h]` given per grid node.
pub fn thm4_bound_general(
    h_init: f64,
    lsi: &LsiProfile,
    schedule: &GammaSchedule,
    sde: &dyn LinearSde,
    grid: &TimeGrid,
    cross_term: &[f64],
) -> Result<BoundTrace> {
    check_per_node("cross term", cross_term, grid)?;
    Ok(thm4_general_unchecked(
        h_init,
        lsi,
        schedule,
        sde,
        grid,
        cross_term,
        BoundKind::Thm4Eq1,
    ))
}

fn thm4_general_unchecked(
    h_init: f64,
    lsi: &LsiProfile,
    schedule: &GammaSchedule,
    sde: &dyn LinearSde,
    grid: &TimeGrid,
    cross_term: &[f64],
    kind: BoundKind,
) -> BoundTrace {
    let times = grid.nodes();
    let mut rate = Vec::with_capacity(times.len());
    let mut source = Vec::with_capacity(times.len());
    for (&t, &c) in times.iter().zip(cross_term) {
        let gamma = schedule.evaluate(t);
        let gg = g2(sde, t);
        rate.push(if gamma > 0.0 { lsi.inverse(t) * gamma * gg } else { 0.0 });
        source.push(0.5 * gg * (1.0 + gamma) * c);
    }
    let (values, decay) = accumulate(times, h_init, &rate, &source);
    BoundTrace {
        kind,
        times: times.to_vec(),
        values,
        decay,
        delta_ratio: None,
    }
}

/// Second form with `δ = d·γ` for a constant ratio `d ∈ (0, 1]` and
/// `E_p̃[|ε|²]` given per grid node.
pub fn thm4_bound_delta(
    h_init: f64,
    lsi: &LsiProfile,
    schedule: &GammaSchedule,
    sde: &dyn LinearSde,
    grid: &TimeGrid,
    eps_second_moment: &[f64],
    ratio: f64,
) -> Result<BoundTrace> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidDelta(format!("delta/gamma must lie in (0, 1], got {ratio}")));
    }
    thm4_bound_delta_fn(h_init, lsi, schedule, sde, grid, eps_second_moment, |t| {
        ratio * schedule.evaluate(t)
    })
    .map(|mut tr| {
        tr.delta_ratio = Some(ratio);
        tr
    })
}

/// Second form with an arbitrary `δ(t)`, which must satisfy `0 < δ ≤ γ`.
pub fn thm4_bound_delta_fn<D: Fn(f64) -> f64>(
    h_init: f64,
    lsi: &LsiProfile,
    schedule: &GammaSchedule,
    sde: &dyn LinearSde,
    grid: &TimeGrid,
    eps_second_moment: &[f64],
    delta: D,
) -> Result<BoundTrace> {
    check_per_node("score-error moment", eps_second_moment, grid)?;
    let times = grid.nodes();
    let mut rate = Vec::with_capacity(times.len());
    let mut source = Vec::with_capacity(times.len());
    for (&t, &e2) in times.iter().zip(eps_second_moment) {
        let gamma = schedule.evaluate(t);
        let d = delta(t);
        if !(d > 0.0 && d <= gamma * (1.0 + 1e-12)) {
            return Err(Error::InvalidDelta(format!(
                "need 0 < delta <= gamma, got delta = {d}, gamma = {gamma} at t = {t}"
            )));
        }
        let gg = g2(sde, t);
        rate.push(lsi.inverse(t) * gg * (gamma - d).max(0.0));
        source.push((1.0 + gamma).powi(2) * gg * e2 / (8.0 * d));
    }
    let (values, decay) = accumulate(times, h_init, &rate, &source);
    Ok(BoundTrace {
        kind: BoundKind::Thm4Eq2,
        times: times.to_vec(),
        values,
        decay,
        delta_ratio: None,
    })
}

/// Scans constant ratios `d = δ/γ` on `(0, 1]` and keeps the one with the
/// smallest final bound.
#[allow(clippy::too_many_arguments)]
pub fn thm4_bound_delta_best(
    h_init: f64,
    lsi: &LsiProfile,
    schedule: &GammaSchedule,
    sde: &dyn LinearSde,
    grid: &TimeGrid,
    eps_second_moment: &[f64],
    n_ratios: usize,
) -> Result<BoundTrace> {
    let n = n_ratios.max(1);
    let mut best: Option<BoundTrace> = None;
    for i in 1..=n {
        let d = i as f64 / n as f64;
        let tr = thm4_bound_delta(h_init, lsi, schedule, sde, grid, eps_second_moment, d)?;
        if best.as_ref().is_none_or(|b| tr.last() < b.last()) {
            best = Some(tr);
        }
    }
    Ok(best.expect("at least one ratio"))
}

/// `H(p̄_τ | p̃_τ) ≤ H(p̄₀ | p̃₀) + ⅛ ∫ ḡ² (1+γ)²/γ · E_p̄[|ε|²]`.
pub fn cor2_bound(
    h_init_rev: f64,
    schedule: &GammaSchedule,
    sde: &dyn LinearSde,
    grid: &TimeGrid,
    eps_second_moment_pbar: &[f64],
) -> Result<BoundTrace> {
    check_per_node("score-error moment", eps_second_moment_pbar, grid)?;
    let times = grid.nodes();
    let mut source = Vec::with_capacity(times.len());
    // the integral runs over the open window, so the terminal node may have γ = 0
    let last = times.len() - 1;
    for (i, (&t, &e2)) in times.iter().zip(eps_second_moment_pbar).enumerate() {
        let gamma = schedule.evaluate(t);
        if !(gamma > 0.0) {
            if i == last || e2 == 0.0 {
                source.push(0.0);
                continue;
            }
            return Err(Error::InvalidSchedule(format!(
                "gamma must be positive inside the window, got {gamma} at t = {t}"
            )));
        }
        source.push(g2(sde, t) * (1.0 + gamma).powi(2) / gamma * e2 / 8.0);
    }
    let zeros = vec![0.0; times.len()];
    let (values, decay) = accumulate(times, h_init_rev, &zeros, &source);
    Ok(BoundTrace {
        kind: BoundKind::Cor2,
        times: times.to_vec(),
        values,
        decay,
        delta_ratio: None,
    })
}

/// Writes `forward_time, bound_value, kind, delta_ratio` rows for each trace.
pub fn write_traces_csv(path: &Path, traces: &[&BoundTrace]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "forward_time,bound_value,kind,delta_ratio")?;
    for tr in traces {
        let d = tr.delta_ratio.map(|d| d.to_string()).unwrap_or_default();
        for (t, v) in tr.times.iter().zip(&tr.values) {
            writeln!(w, "{t},{v},{},{d}", tr.kind)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::ForwardProcess;

    #[test]
    fn chi2_identical_is_zero() {
        assert_eq!(chi2_spherical(&[0.3, -1.0], 0.7, &[0.3, -1.0], 0.7).unwrap(), 0.0);
    }

    #[test]
    fn chi2_matches_quadrature() {
        // quadrature oracle values: exp(0.25) − 1 and 4/√7 − 1
        let a = chi2_spherical(&[0.0], 1.0, &[0.5], 1.0).unwrap();
        assert!((a - 0.284_025_416_687_741_5).abs() < 1e-12, "{a}");
        let b = chi2_spherical(&[0.0], 1.0, &[0.0], 4.0).unwrap();
        assert!((b - 0.511_857_892_036_909_8).abs() < 1e-12, "{b}");
        for (m0, v0, m1, v1) in [(0.0, 1.0, 0.5, 1.0), (0.0, 1.0, 0.0, 4.0), (0.3, 0.5, -0.2, 0.4)] {
            let q = chi2_quadrature(&[m0], v0, &[m1], v1, 1e-13).unwrap();
            let c = chi2_spherical(&[m0], v0, &[m1], v1).unwrap();
            assert!((q - c).abs() <= 1e-9 * c.abs().max(1e-3), "{q} {c}");
        }
    }

    #[test]
    fn printed_form_fails_identity() {
        let p = chi2_spherical_printed(&[0.0], 1.0, &[0.0], 1.0).unwrap();
        assert!(p.abs() > 0.1, "{p}");
    }

    #[test]
    fn chi2_undefined() {
        assert!(matches!(
            chi2_spherical(&[0.0], 3.0, &[0.0], 1.0),
            Err(Error::DivergenceUndefined(_))
        ));
    }

    #[test]
    fn lambda_limit() {
        assert_eq!(lambda_p(0.5), 2.0);
        for p in [0.5 + 1e-7, 0.5 - 1e-7] {
            assert!((lambda_p(p) - 2.0).abs() < 1e-9);
        }
        let p: f64 = 0.3;
        let direct = (p.ln() - (1.0 - p).ln()) / (2.0 * p - 1.0);
        assert!((lambda_p(p) - direct).abs() < 1e-14);
        // both branches agree at the switch
        let a = lambda_p(0.5 + 0.5e-4 * (1.0 - 1e-9));
        let b = lambda_p(0.5 + 0.5e-4 * (1.0 + 1e-9));
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn lsi_symmetric_identical_components() {
        // p = ½, χ = 1, λ = 2: max{σ²(1 + ½·2), σ²(1 + ½·2·1)} = 2σ²
        let c = lsi_two_component(0.5, (&[0.0], 1.0), (&[0.0], 1.0)).unwrap();
        assert!((c - 2.0).abs() < 1e-15);
        let c = lsi_two_component(0.5, (&[1.0], 0.5), (&[1.0], 0.5)).unwrap();
        assert!((c - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lsi_default_dataset_positive() {
        let d = GaussianMixture::default_dataset();
        let edm = ForwardProcess::edm();
        let c = lsi_mixture(&d.diffuse(&edm, 0.75)).unwrap();
        assert!(c > 0.0 && c.is_finite());
        // near t = 0 one χ² diverges; the other candidate still applies
        let c0 = lsi_mixture(&d.diffuse(&edm, 0.01)).unwrap();
        assert!(c0 > 0.0 && c0.is_finite());
    }

    #[test]
    fn compact_support_values() {
        let edm = ForwardProcess::edm();
        let c = lsi_compact_support(1.0, &edm, 1.0).unwrap();
        assert_eq!(c, 30.0 * 4f64.exp());
        let ve = ForwardProcess::ve();
        let c = lsi_compact_support(2.0, &ve, 0.56).unwrap();
        let want = 6.0 * (16.0 + 0.56) * (16.0f64 / 0.56).exp();
        assert!((c - want).abs() < 1e-12 * want);
        assert!(matches!(lsi_compact_support(1.0, &edm, 0.0), Err(Error::Domain(_))));
        let mut prev = 0.0;
        for t in [1.0, 0.5, 0.2, 0.1, 0.05] {
            let c = lsi_compact_support(1.0, &edm, t).unwrap();
            assert!(c > prev);
            prev = c;
        }
    }

    #[test]
    fn thm2_constant_coefficients() {
        let ve = ForwardProcess::ve();
        let grid = TimeGrid::uniform(1.0, 1000).unwrap();
        let sched = GammaSchedule::Constant { gamma: 1.0 };
        let tr = thm2_bound(0.7, &LsiProfile::Constant(0.5), &sched, &ve, &grid);
        for (t, v) in tr.times.iter().zip(&tr.values) {
            let tau = 1.0 - t;
            assert!((v - 0.7 * (-2.0 * tau).exp()).abs() < 1e-12);
        }
        let flat = thm2_bound(0.7, &LsiProfile::Constant(0.5), &GammaSchedule::ode(), &ve, &grid);
        assert!(flat.values.iter().all(|&v| v == 0.7));
    }

    #[test]
    fn cor2_linear_growth() {
        let ve = ForwardProcess::ve();
        let grid = TimeGrid::uniform(1.0, 50).unwrap();
        let sched = GammaSchedule::Constant { gamma: 1.0 };
        let e = vec![0.3; grid.nodes().len()];
        let tr = cor2_bound(0.1, &sched, &ve, &grid, &e).unwrap();
        for (t, v) in tr.times.iter().zip(&tr.values) {
            assert!((v - (0.1 + 0.5 * 0.3 * (1.0 - t))).abs() < 1e-12);
        }
        let ode = cor2_bound(0.1, &GammaSchedule::ode(), &ve, &grid, &e);
        assert!(matches!(ode, Err(Error::InvalidSchedule(_))));
    }

    #[test]
    fn invalid_delta() {
        let ve = ForwardProcess::ve();
        let grid = TimeGrid::uniform(1.0, 5).unwrap();
        let sched = GammaSchedule::Constant { gamma: 1.0 };
        let e = vec![0.0; 6];
        for d in [0.0, 1.5] {
            let r = thm4_bound_delta(0.1, &LsiProfile::None, &sched, &ve, &grid, &e, d);
            assert!(matches!(r, Err(Error::InvalidDelta(_))));
        }
    }
}
