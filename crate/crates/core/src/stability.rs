//! Sampled smoothness diagnostics around a known solution `u†`.
//!
//! All infima over the level set `M_{α_max}(ρ₁)` are replaced by minima over a
//! finite sample containing `u†`, so every estimate here describes the sample.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::ForwardOperator;
use crate::penalties::{Penalty, SubgradientSelection};
use crate::spaces::{dual_pair, Element, NormKind};
use crate::tikhonov::LevelSetSpec;

/// Operator, penalty and truth with the subgradient `ζ ∈ ∂R(u†)` in use.
#[derive(Debug, Clone)]
pub struct StabilityContext {
    forward: Arc<dyn ForwardOperator>,
    penalty: Penalty,
    truth: Element,
    exact_data: Element,
    selection: SubgradientSelection,
    misfit_exponent: f64,
}

impl StabilityContext {
    pub fn new(
        forward: Arc<dyn ForwardOperator>,
        penalty: Penalty,
        truth: Element,
        misfit_exponent: f64,
    ) -> Result<Self> {
        let exact_data = forward.apply(&truth)?;
        let selection = penalty.subgradient(&truth)?;
        Ok(Self {
            forward,
            penalty,
            truth,
            exact_data,
            selection,
            misfit_exponent,
        })
    }

    /// Replaces the default subgradient selection at `u†`.
    pub fn with_zeta(mut self, zeta: Element) -> Result<Self> {
        crate::error::ensure_dim(self.truth.len(), zeta.len())?;
        self.selection.zeta = zeta;
        Ok(self)
    }

    pub fn forward(&self) -> &Arc<dyn ForwardOperator> {
        &self.forward
    }

    pub fn penalty(&self) -> &Penalty {
        &self.penalty
    }

    pub fn truth(&self) -> &Element {
        &self.truth
    }

    pub fn exact_data(&self) -> &Element {
        &self.exact_data
    }

    pub fn zeta(&self) -> &Element {
        &self.selection.zeta
    }

    pub fn misfit_exponent(&self) -> f64 {
        self.misfit_exponent
    }

    /// `T_{α_max}(u, 0)`.
    pub fn noiseless_value(&self, u: &Element, alpha_max: f64) -> Result<f64> {
        let r = (&self.forward.apply(u)? - &self.exact_data).norm(NormKind::Data);
        Ok(r.powf(self.misfit_exponent) + alpha_max * self.penalty.value(u)?)
    }

    pub fn bregman(&self, u: &Element) -> Result<f64> {
        self.penalty.bregman(u, &self.truth, &self.selection)
    }

    pub fn evaluate(&self, u: Element) -> Result<SamplePoint> {
        let residual = (&self.forward.apply(&u)? - &self.exact_data).norm(NormKind::Data);
        let diff = &u - &self.truth;
        Ok(SamplePoint {
            bregman: self.bregman(&u)?,
            pairing: dual_pair(&self.selection.zeta, &diff)?,
            weak_distance: diff.norm(NormKind::Weak),
            penalty: self.penalty.value(&u)?,
            residual,
            u,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SamplePoint {
    pub u: Element,
    /// `‖F(u) − F(u†)‖`.
    pub residual: f64,
    /// `D_ζ(u, u†)`.
    pub bregman: f64,
    /// `⟨ζ, u − u†⟩`.
    pub pairing: f64,
    pub weak_distance: f64,
    pub penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generation {
    /// Tensor grid with `points_per_axis` nodes per coordinate on a box.
    Grid {
        points_per_axis: usize,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// Uniform draws on a box, filtered by level-set membership.
    Random { lower: Vec<f64>, upper: Vec<f64> },
    /// `u† + r·e` with uniform directions `e` and log-uniform radii,
    /// measured relative to `max(‖u†‖_weak, 1)`.
    Radial { min_radius: f64, max_radius: f64 },
}

#[derive(Debug, Clone)]
pub struct LevelSetSample {
    /// The truth comes first.
    pub points: Vec<SamplePoint>,
    pub spec: LevelSetSpec,
    pub generation: Generation,
    pub attempts: usize,
    pub seed: u64,
}

impl LevelSetSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.points.len().saturating_sub(1) as f64 / self.attempts.max(1) as f64
    }

    /// Adds an arbitrary point, e.g. a regularized solution.
    pub fn push(&mut self, ctx: &StabilityContext, u: Element) -> Result<()> {
        self.points.push(ctx.evaluate(u)?);
        Ok(())
    }
}

/// Largest grid accepted by [`Generation::Grid`].
pub const MAX_GRID_DIMENSION: usize = 6;

/// Draws `count` members of `M_{α_max}(ρ₁)`, `u†` included, within
/// `max_attempts` candidates.
pub fn sample_level_set(
    ctx: &StabilityContext,
    spec: &LevelSetSpec,
    count: usize,
    seed: u64,
    generation: &Generation,
    max_attempts: usize,
) -> Result<LevelSetSample> {
    if count < 2 {
        return Err(Error::InvalidParameter(format!(
            "level-set sample needs at least 2 points, got {count}"
        )));
    }
    let n = ctx.truth.len();
    let candidates: Vec<Vec<f64>> = match generation {
        Generation::Grid {
            points_per_axis,
            lower,
            upper,
        } => {
            if n > MAX_GRID_DIMENSION {
                return Err(Error::InvalidParameter(format!(
                    "grid sampling supports at most {MAX_GRID_DIMENSION} dimensions, got {n}"
                )));
            }
            check_box(n, lower, upper)?;
            if *points_per_axis < 2 {
                return Err(Error::InvalidParameter("grid needs 2 points per axis".into()));
            }
            tensor_grid(*points_per_axis, lower, upper)
        }
        Generation::Random { lower, upper } => {
            check_box(n, lower, upper)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..max_attempts)
                .map(|_| {
                    lower
                        .iter()
                        .zip(upper)
                        .map(|(a, b)| rng.random_range(*a..=*b))
                        .collect()
                })
                .collect()
        }
        Generation::Radial {
            min_radius,
            max_radius,
        } => {
            if !(*min_radius > 0.0 && min_radius < max_radius) {
                return Err(Error::InvalidParameter(format!(
                    "radial sampling needs 0 < min_radius < max_radius, got {min_radius}, {max_radius}"
                )));
            }
            let scale = ctx.truth.norm(NormKind::Weak).max(1.0);
            let (la, lb) = (min_radius.ln(), max_radius.ln());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..max_attempts)
                .map(|_| {
                    let dir: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
                    let r = scale * rng.random_range(la..lb).exp();
                    ctx.truth
                        .as_slice()
                        .iter()
                        .zip(&dir)
                        .map(|(t, d)| t + r * d / norm)
                        .collect()
                })
                .collect()
        }
    };

    let alpha_max = spec.alpha_max;
    let accepted: Vec<Option<SamplePoint>> = candidates
        .par_iter()
        .map(|c| -> Result<Option<SamplePoint>> {
            let u = ctx.truth.with_coords(c.clone().into())?;
            if !ctx.forward.in_domain(&u) {
                return Ok(None);
            }
            if ctx.noiseless_value(&u, alpha_max)? > spec.rho1 {
                return Ok(None);
            }
            ctx.evaluate(u).map(Some)
        })
        .collect::<Result<_>>()?;

    let mut points = vec![ctx.evaluate(ctx.truth.clone())?];
    let mut attempts = 0;
    let is_grid = matches!(generation, Generation::Grid { .. });
    for p in accepted {
        if !is_grid && points.len() >= count {
            break;
        }
        attempts += 1;
        if let Some(p) = p {
            points.push(p);
        }
    }
    if points.len() < count {
        let accepted = points.len() - 1;
        return Err(Error::SamplingBudget {
            requested: count,
            accepted,
            attempts,
            rate: accepted as f64 / attempts.max(1) as f64,
        });
    }
    Ok(LevelSetSample {
        points,
        spec: *spec,
        generation: generation.clone(),
        attempts,
        seed,
    })
}

fn check_box(n: usize, lower: &[f64], upper: &[f64]) -> Result<()> {
    crate::error::ensure_dim(n, lower.len())?;
    crate::error::ensure_dim(n, upper.len())?;
    if lower.iter().zip(upper).any(|(a, b)| !(a < b)) {
        return Err(Error::InvalidParameter("sampling box has empty sides".into()));
    }
    Ok(())
}

fn tensor_grid(m: usize, lower: &[f64], upper: &[f64]) -> Vec<Vec<f64>> {
    let n = lower.len();
    let total = m.pow(n as u32);
    (0..total)
        .map(|mut idx| {
            (0..n)
                .map(|d| {
                    let i = idx % m;
                    idx /= m;
                    lower[d] + (upper[d] - lower[d]) * i as f64 / (m - 1) as f64
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    /// `D(s)` of approximate Hölder stability.
    ApproxHolderD,
    /// `d(r)` of the approximate variational inequality.
    ApproxViD,
}

impl DistanceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DistanceKind::ApproxHolderD => "approx_holder_D",
            DistanceKind::ApproxViD => "approx_vi_d",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceFunctionTable {
    pub kind: DistanceKind,
    /// `k` for `D(s)`, `t` for `d(r)`.
    pub exponent: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub sample_count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TableProperties {
    pub nonnegative: bool,
    pub nonincreasing: bool,
    /// Strict decrease between neighbours whenever both values are positive.
    pub strict_where_positive: bool,
}

impl TableProperties {
    pub fn all(&self) -> bool {
        self.nonnegative && self.nonincreasing && self.strict_where_positive
    }
}

/// Result of inverting `ψ(s) = (D(s)/s)^{1/t}` on a table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsiInverse {
    pub s: f64,
    /// The target fell outside the tabulated range of `ψ`.
    pub clamped: bool,
}

impl DistanceFunctionTable {
    pub fn properties(&self) -> TableProperties {
        let nonnegative = self.values.iter().all(|v| v.is_finite() && *v >= 0.0);
        let nonincreasing = self.values.windows(2).all(|w| w[1] <= w[0]);
        let strict_where_positive = self
            .values
            .windows(2)
            .all(|w| !(w[0] > 0.0 && w[1] > 0.0) || w[1] < w[0]);
        TableProperties {
            nonnegative,
            nonincreasing,
            strict_where_positive,
        }
    }

    /// Value at `s`, log-linear between grid points and clamped outside.
    pub fn value_at(&self, s: f64) -> f64 {
        let g = &self.grid;
        if s <= g[0] {
            return self.values[0];
        }
        let last = g.len() - 1;
        if s >= g[last] {
            return self.values[last];
        }
        let i = g.partition_point(|x| *x <= s) - 1;
        let (a, b) = (self.values[i], self.values[i + 1]);
        let w = (s.ln() - g[i].ln()) / (g[i + 1].ln() - g[i].ln());
        if a > 0.0 && b > 0.0 {
            (a.ln() + w * (b.ln() - a.ln())).exp()
        } else {
            a + w * (b - a)
        }
    }

    /// `ψ^{-1}(δ)` with `ψ(s) = (D(s)/s)^{1/t}`, by monotone inversion with
    /// linear interpolation of `ln s` against `ln ψ`.
    pub fn psi_inverse(&self, delta: f64, t: f64) -> Result<PsiInverse> {
        if !(delta > 0.0 && t > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "psi inversion needs delta > 0 and t > 0, got {delta}, {t}"
            )));
        }
        let psi: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.values)
            .map(|(s, d)| (d / s).powf(1.0 / t))
            .collect();
        if delta >= psi[0] {
            return Ok(PsiInverse {
                s: self.grid[0],
                clamped: delta > psi[0],
            });
        }
        for i in 0..psi.len() - 1 {
            let (a, b) = (psi[i], psi[i + 1]);
            if a >= delta && delta >= b {
                let (sa, sb) = (self.grid[i], self.grid[i + 1]);
                let s = if b > 0.0 && a > b {
                    let w = (delta.ln() - a.ln()) / (b.ln() - a.ln());
                    (sa.ln() + w * (sb.ln() - sa.ln())).exp()
                } else if a > b {
                    sa + (a - delta) / (a - b) * (sb - sa)
                } else {
                    sa
                };
                return Ok(PsiInverse { s, clamped: false });
            }
        }
        Ok(PsiInverse {
            s: *self.grid.last().expect("nonempty grid"),
            clamped: true,
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kind", "multiplier", "value", "sample_count", "seed"])?;
        for (m, v) in self.grid.iter().zip(&self.values) {
            w.write_record([
                self.kind.as_str().to_string(),
                crate::harness::export::fmt_f64(*m),
                crate::harness::export::fmt_f64(*v),
                self.sample_count.to_string(),
                self.seed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_csv(file).map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::InvalidParameter(
            "multiplier grid must be nonempty and positive".into(),
        ));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "multiplier grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `D̂(s) = −min_u (s‖F(u) − F(u†)‖^k − D_ζ(u, u†))` over the sample.
pub fn estimate_holder_distance(
    sample: &LevelSetSample,
    k: f64,
    s_grid: &[f64],
) -> Result<DistanceFunctionTable> {
    if !(k > 0.0 && k <= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "Hölder exponent must lie in (0, 2], got {k}"
        )));
    }
    check_grid(s_grid)?;
    if sample.is_empty() {
        return Err(Error::InsufficientData("empty level-set sample".into()));
    }
    let values = s_grid
        .iter()
        .map(|s| {
            sample
                .points
                .iter()
                .map(|p| p.bregman - s * p.residual.powf(k))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    Ok(DistanceFunctionTable {
        kind: DistanceKind::ApproxHolderD,
        exponent: k,
        grid: s_grid.to_vec(),
        values,
        sample_count: sample.len(),
        seed: sample.seed,
    })
}

/// `d̂(r) = −min_u (⟨ζ, u − u†⟩ + β₁ D_ζ(u, u†) + r‖F(u) − F(u†)‖^t)`.
pub fn estimate_vi_distance(
    sample: &LevelSetSample,
    beta1: f64,
    t: f64,
    r_grid: &[f64],
) -> Result<DistanceFunctionTable> {
    if !(0.0..1.0).contains(&beta1) || !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need beta1 in [0, 1) and t > 0, got {beta1}, {t}"
        )));
    }
    check_grid(r_grid)?;
    if sample.is_empty() {
        return Err(Error::InsufficientData("empty level-set sample".into()));
    }
    let values = r_grid
        .iter()
        .map(|r| {
            -sample
                .points
                .iter()
                .map(|p| p.pairing + beta1 * p.bregman + r * p.residual.powf(t))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(DistanceFunctionTable {
        kind: DistanceKind::ApproxViD,
        exponent: t,
        grid: r_grid.to_vec(),
        values,
        sample_count: sample.len(),
        seed: sample.seed,
    })
}

/// Error measure in a stability estimate `metric(u) ≤ C‖F(u) − F(u†)‖^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityMetric {
    Bregman,
    WeakNorm,
}

impl StabilityMetric {
    fn of(&self, p: &SamplePoint) -> f64 {
        match self {
            StabilityMetric::Bregman => p.bregman,
            StabilityMetric::WeakNorm => p.weak_distance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderScan {
    pub c_est: f64,
    /// Index into the sample of the maximizing point.
    pub attained_at: Option<usize>,
}

/// `C = max metric(u)/‖F(u) − F(u†)‖^k`, skipping points with `metric = 0`.
pub fn holder_constant_scan(
    sample: &LevelSetSample,
    k: f64,
    metric: StabilityMetric,
) -> HolderScan {
    let mut best = HolderScan {
        c_est: 0.0,
        attained_at: None,
    };
    for (i, p) in sample.points.iter().enumerate() {
        let m = metric.of(p);
        if m <= 0.0 {
            continue;
        }
        let ratio = if p.residual == 0.0 {
            f64::INFINITY
        } else {
            m / p.residual.powf(k)
        };
        if ratio > best.c_est {
            best = HolderScan {
                c_est: ratio,
                attained_at: Some(i),
            };
        }
    }
    best
}

/// Exponent `κ` at which the scanned constant on the small-residual half of
/// the sample equals the one on the large-residual half.
///
/// `ln C_inner(κ) − ln C_outer(κ)` is nondecreasing in `κ`; the crossing is
/// located by bisection on `[lo, hi]`.
pub fn holder_exponent_scan(
    sample: &LevelSetSample,
    metric: StabilityMetric,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let mut pts: Vec<(f64, f64)> = sample
        .points
        .iter()
        .filter(|p| p.residual > 0.0 && metric.of(p) > 0.0)
        .map(|p| (p.residual.ln(), metric.of(p).ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "exponent scan needs at least 4 informative points, got {}",
            pts.len()
        )));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (inner, outer) = pts.split_at(pts.len() / 2);
    let log_c = |set: &[(f64, f64)], kappa: f64| {
        set.iter()
            .map(|(lr, lm)| lm - kappa * lr)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let gap = |kappa: f64| log_c(inner, kappa) - log_c(outer, kappa);
    let (mut a, mut b) = (lo, hi);
    let (ga, gb) = (gap(a), gap(b));
    if ga > 0.0 || gb < 0.0 {
        return Err(Error::InsufficientData(format!(
            "no exponent crossing in [{lo}, {hi}] (gaps {ga:.3e}, {gb:.3e})"
        )));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if gap(m) > 0.0 {
            b = m;
        } else {
            a = m;
        }
        if b - a < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViOutcome {
    /// `β₁ D_ζ(u, u†) + β₂‖F(u) − F(u†)‖^t`.
    pub lhs: f64,
    /// `⟨ζ, u† − u⟩`.
    pub rhs: f64,
    pub holds: bool,
}

/// Variational inequality at a single point.
pub fn vi_check(
    ctx: &StabilityContext,
    u: &Element,
    beta1: f64,
    beta2: f64,
    t: f64,
) -> Result<ViOutcome> {
    if !(0.0..1.0).contains(&beta1) || beta2 < 0.0 || !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need beta1 in [0, 1), beta2 >= 0, t > 0; got {beta1}, {beta2}, {t}"
        )));
    }
    Ok(vi_at(&ctx.evaluate(u.clone())?, beta1, beta2, t))
}

fn vi_at(p: &SamplePoint, beta1: f64, beta2: f64, t: f64) -> ViOutcome {
    let lhs = beta1 * p.bregman + beta2 * p.residual.powf(t);
    let rhs = -p.pairing;
    ViOutcome {
        lhs,
        rhs,
        holds: lhs >= rhs,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainReport {
    pub checked: usize,
    /// Points where the variational inequality holds and `R(u) ≤ R(u†)`.
    pub hypotheses_met: usize,
    pub violations: usize,
    pub constant: f64,
}

/// Variational inequality plus `R(u) ≤ R(u†)` implies the conditional
/// estimate `D_ζ(u, u†) ≤ β₂/(1 − β₁)·‖F(u) − F(u†)‖^t`; checked pointwise.
pub fn vi_implies_stability(
    ctx: &StabilityContext,
    sample: &LevelSetSample,
    beta1: f64,
    beta2: f64,
    t: f64,
) -> Result<ChainReport> {
    if !(0.0..1.0).contains(&beta1) || beta2 < 0.0 || !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need beta1 in [0, 1), beta2 >= 0, t > 0; got {beta1}, {beta2}, {t}"
        )));
    }
    let r_truth = ctx.penalty.value(&ctx.truth)?;
    let constant = beta2 / (1.0 - beta1);
    let mut report = ChainReport {
        checked: sample.len(),
        hypotheses_met: 0,
        violations: 0,
        constant,
    };
    for p in &sample.points {
        if !(vi_at(p, beta1, beta2, t).holds && p.penalty <= r_truth) {
            continue;
        }
        report.hypotheses_met += 1;
        let bound = constant * p.residual.powf(t);
        if p.bregman > bound + 1e-12 * (1.0 + bound.abs()) {
            report.violations += 1;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterplayReport {
    pub penalty_not_above_truth: bool,
    pub residual_at_least_delta: bool,
    /// Hypotheses of the variational-inequality-to-stability implication met.
    pub vi_to_stability_applicable: bool,
}

pub fn interplay_report(
    ctx: &StabilityContext,
    u_sol: &Element,
    noisy_data: &Element,
    delta: f64,
) -> Result<InterplayReport> {
    let residual = (&ctx.forward.apply(u_sol)? - noisy_data).norm(NormKind::Data);
    let penalty_not_above_truth =
        ctx.penalty.value(u_sol)? <= ctx.penalty.value(&ctx.truth)? + 1e-12;
    let residual_at_least_delta = residual >= delta;
    Ok(InterplayReport {
        penalty_not_above_truth,
        residual_at_least_delta,
        vi_to_stability_applicable: (delta == 0.0 || residual_at_least_delta)
            && penalty_not_above_truth,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma31Report {
    pub c1: f64,
    pub c2: f64,
    /// `bound(s) − D_ζ(u_α^δ, u†)` per grid point.
    pub slack: Vec<f64>,
    pub holds: bool,
}

/// Parameters of the a-priori bound on the Bregman error of a minimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParameters {
    pub delta: f64,
    pub alpha: f64,
    pub k: f64,
    pub p: f64,
    pub c: f64,
}

/// Checks `D_ζ(u_α^δ, u†) ≤ C₁sδ^k + C₂sα^{k/p} + D̂(s) + 1e−9` at every `s` of
/// `table`, with `C₁ = 2^k` and `C₂ = C₁(c/2 + ρ/α_max)^{k/p}`.
pub fn lemma31_bound_check(
    params: &BoundParameters,
    spec: &LevelSetSpec,
    observed: f64,
    table: &DistanceFunctionTable,
) -> Lemma31Report {
    let BoundParameters {
        delta,
        alpha,
        k,
        p,
        c,
    } = *params;
    let c1 = 2f64.powf(k);
    let c2 = c1 * (c / 2.0 + spec.rho / spec.alpha_max).powf(k / p);
    let slack: Vec<f64> = table
        .grid
        .iter()
        .zip(&table.values)
        .map(|(s, d)| c1 * s * delta.powf(k) + c2 * s * alpha.powf(k / p) + d + 1e-9 - observed)
        .collect();
    let holds = slack.iter().all(|x| *x >= 0.0);
    Lemma31Report {
        c1,
        c2,
        slack,
        holds,
    }
}

/// `m` log-spaced values from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..m)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (m - 1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{DiagonalMap, ReactionDiffusionMap};
    use proptest::prelude::*;

    fn diag_ctx(sigma: Vec<f64>, truth: Vec<f64>) -> StabilityContext {
        let f: Arc<dyn ForwardOperator> = Arc::new(DiagonalMap::new(sigma).unwrap());
        let s = f.domain().clone();
        let pen = Penalty::squared_norm(Element::zeros(s.clone()));
        StabilityContext::new(f, pen, Element::new(s, truth).unwrap(), 2.0).unwrap()
    }

    fn box2(ctx: &StabilityContext) -> (Vec<f64>, Vec<f64>) {
        let _ = ctx;
        (vec![-3.0, -3.0], vec![3.0, 3.0])
    }

    fn random_sample(ctx: &StabilityContext, spec: &LevelSetSpec, count: usize) -> LevelSetSample {
        let (lower, upper) = box2(ctx);
        sample_level_set(ctx, spec, count, 3, &Generation::Random { lower, upper }, 1_000_000)
            .unwrap()
    }

    fn loose_spec() -> LevelSetSpec {
        LevelSetSpec::from_rho(1.0, 1e6, 2.0)
    }

    #[test]
    fn vacuous_level_set_accepts_everything() {
        let ctx = diag_ctx(vec![1.0, 0.5], vec![1.0, -0.5]);
        let s = random_sample(&ctx, &loose_spec(), 500);
        assert_eq!(s.len(), 500);
        assert_eq!(s.attempts, 499);
        assert!((s.acceptance_rate() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tight_level_set_rejects_and_reports() {
        let ctx = diag_ctx(vec![1.0, 0.5], vec![1.0, -0.5]);
        let at_truth = ctx.noiseless_value(ctx.truth(), 0.1).unwrap();
        let spec = LevelSetSpec {
            alpha_max: 0.1,
            rho: at_truth,
            rho1: at_truth,
        };
        let (lower, upper) = box2(&ctx);
        let err = sample_level_set(&ctx, &spec, 10, 1, &Generation::Random { lower, upper }, 2000)
            .unwrap_err();
        match err {
            Error::SamplingBudget { accepted, attempts, .. } => {
                assert!(accepted < 9);
                assert_eq!(attempts, 2000);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn sample_members_satisfy_level_bound() {
        let ctx = diag_ctx(vec![1.0, 0.5], vec![1.0, -0.5]);
        let spec = LevelSetSpec::from_rho(0.5, 0.5, 2.0);
        let s = random_sample(&ctx, &spec, 200);
        for p in &s.points {
            assert!(ctx.noiseless_value(&p.u, spec.alpha_max).unwrap() <= spec.rho1);
        }
        assert_eq!(s.points[0].u, *ctx.truth());
    }

    #[test]
    fn grid_rejects_high_dimension() {
        let ctx = diag_ctx(vec![1.0; 7], vec![0.0; 7]);
        let g = Generation::Grid {
            points_per_axis: 2,
            lower: vec![-1.0; 7],
            upper: vec![1.0; 7],
        };
        assert!(sample_level_set(&ctx, &loose_spec(), 2, 0, &g, 10).is_err());
    }

    #[test]
    fn truth_only_sample_gives_zero_tables() {
        let ctx = diag_ctx(vec![1.0, 0.5], vec![1.0, -0.5]);
        let mut s = random_sample(&ctx, &loose_spec(), 2);
        s.points.truncate(1);
        let grid = log_grid(0.1, 100.0, 5);
        let d = estimate_holder_distance(&s, 2.0, &grid).unwrap();
        assert!(d.values.iter().all(|v| *v == 0.0));
        let e = estimate_vi_distance(&s, 0.3, 1.0, &grid).unwrap();
        assert!(e.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_zeta_and_beta_gives_zero_small_d() {
        let ctx = diag_ctx(vec![1.0, 0.5], vec![1.0, -0.5])
            .with_zeta(Element::zeros(Arc::new(crate::SpaceDescriptor::sequence(2).unwrap())))
            .unwrap();
        let s = random_sample(&ctx, &loose_spec(), 100);
        let e = estimate_vi_distance(&s, 0.0, 1.0, &log_grid(0.1, 10.0, 4)).unwrap();
        assert!(e.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn diagonal_holder_constant_bound() {
        let ctx = diag_ctx(vec![1.0, 0.5], vec![1.0, -0.5]);
        let s = random_sample(&ctx, &loose_spec(), 2000);
        let scan = holder_constant_scan(&s, 2.0, StabilityMetric::Bregman);
        assert!(scan.c_est <= 1.0 / (2.0 * 0.25) * (1.0 + 1e-12));
        let grid = log_grid(scan.c_est / 10.0, scan.c_est * 10.0, 20);
        let d = estimate_holder_distance(&s, 2.0, &grid).unwrap();
        assert!(d.properties().all());
        for (sv, v) in grid.iter().zip(&d.values) {
            if *sv >= scan.c_est {
                assert!(*v <= 1e-15, "D({sv}) = {v}");
            }
        }
    }

    #[test]
    fn ray_ratio_is_constant_for_linear_map() {
        let ctx = diag_ctx(vec![1.0, 0.3], vec![0.2, 0.4]);
        let dir = Element::new(ctx.truth().space().clone(), vec![0.6, -0.8]).unwrap();
        let ratios: Vec<f64> = [0.01, 0.1, 1.0]
            .iter()
            .map(|r| {
                let p = ctx.evaluate(ctx.truth().axpy(*r, &dir).unwrap()).unwrap();
                p.bregman / p.residual.powi(2)
            })
            .collect();
        for r in &ratios {
            assert!((r / ratios[0] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_residual_with_distance_is_infinite() {
        let f = Arc::new(ReactionDiffusionMap::new(4, 1.0, 1.0, None).unwrap());
        let s = f.domain().clone();
        let truth = Element::constant(s.clone(), 1.0).unwrap();
        let pen = Penalty::squared_norm(Element::zeros(s));
        let z = f.null_direction();
        let ctx = StabilityContext::new(f, pen, truth.clone(), 2.0).unwrap();
        let mut sample = LevelSetSample {
            points: vec![ctx.evaluate(truth.clone()).unwrap()],
            spec: loose_spec(),
            generation: Generation::Radial {
                min_radius: 0.1,
                max_radius: 1.0,
            },
            attempts: 1,
            seed: 0,
        };
        sample.push(&ctx, truth.axpy(0.5, &z).unwrap()).unwrap();
        let scan = holder_constant_scan(&sample, 1.0, StabilityMetric::Bregman);
        assert!(scan.c_est.is_infinite());
    }

    #[test]
    fn exponent_scan_recovers_power_law() {
        // Bregman = ½‖Δu‖² and residual = ‖Δu‖ for σ ≡ 1: exponent 2.
        let ctx = diag_ctx(vec![1.0, 1.0], vec![0.5, 0.5]);
        let g = Generation::Radial {
            min_radius: 1e-4,
            max_radius: 1e-1,
        };
        let s = sample_level_set(&ctx, &loose_spec(), 400, 5, &g, 10_000).unwrap();
        let k = holder_exponent_scan(&s, StabilityMetric::Bregman, 0.1, 4.0).unwrap();
        assert!((k - 2.0).abs() < 1e-6, "{k}");
        let k = holder_exponent_scan(&s, StabilityMetric::WeakNorm, 0.1, 4.0).unwrap();
        assert!((k - 1.0).abs() < 1e-6, "{k}");
    }

    #[test]
    fn vi_examples() {
        let ctx = diag_ctx(vec![1.0, 0.5], vec![1.0, -0.5]);
        let at = vi_check(&ctx, &ctx.truth().clone(), 0.5, 1.0, 1.0).unwrap();
        assert!(at.holds && at.lhs == 0.0 && at.rhs == 0.0);
        let zero = ctx
            .clone()
            .with_zeta(Element::zeros(ctx.truth().space().clone()))
            .unwrap();
        let far = Element::new(ctx.truth().space().clone(), vec![-2.0, 3.0]).unwrap();
        assert!(vi_check(&zero, &far, 0.0, 0.0, 1.0).unwrap().holds);
        assert!(vi_check(&ctx, &far, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn vi_chain_has_no_counterexample() {
        let ctx = diag_ctx(vec![1.0, 0.5], vec![1.0, -0.5]);
        let s = random_sample(&ctx, &loose_spec(), 3000);
        for (b1, b2, t) in [(0.0, 1.0, 1.0), (0.5, 2.0, 1.0), (0.2, 0.5, 2.0)] {
            let rep = vi_implies_stability(&ctx, &s, b1, b2, t).unwrap();
            assert!(rep.hypotheses_met > 0);
            assert_eq!(rep.violations, 0);
        }
    }

    #[test]
    fn interplay_flags() {
        let ctx = diag_ctx(vec![1.0, 0.5], vec![1.0, -0.5]);
        let v = ctx.exact_data().clone();
        let shrunk = ctx.truth().scale(0.9);
        let r = interplay_report(&ctx, &shrunk, &v, 0.0).unwrap();
        assert!(r.penalty_not_above_truth && r.vi_to_stability_applicable);
        let r = interplay_report(&ctx, ctx.truth(), &v, 0.1).unwrap();
        assert!(!r.residual_at_least_delta && !r.vi_to_stability_applicable);
    }

    #[test]
    fn lemma31_trivial_and_linear_slack() {
        let table = DistanceFunctionTable {
            kind: DistanceKind::ApproxHolderD,
            exponent: 1.0,
            grid: vec![1.0, 10.0, 100.0],
            values: vec![0.0; 3],
            sample_count: 1,
            seed: 0,
        };
        let spec = LevelSetSpec::from_rho(1.0, 1.0, 2.0);
        let params = BoundParameters {
            delta: 0.0,
            alpha: 1e-3,
            k: 1.0,
            p: 2.0,
            c: 1.0,
        };
        let rep = lemma31_bound_check(&params, &spec, 0.0, &table);
        assert!(rep.holds);
        assert_eq!(rep.c1, 2.0);
        let g = (rep.slack[2] - rep.slack[1]) / (rep.slack[1] - rep.slack[0]);
        assert!((g - 10.0).abs() < 1e-9);
    }

    #[test]
    fn psi_inverse_on_power_table() {
        // D(s) = s^{-1} gives ψ(s) = s^{-2/t}.
        let grid = log_grid(1.0, 1e4, 41);
        let table = DistanceFunctionTable {
            kind: DistanceKind::ApproxHolderD,
            exponent: 1.0,
            values: grid.iter().map(|s| 1.0 / s).collect(),
            grid,
            sample_count: 0,
            seed: 0,
        };
        let t = 0.5;
        let delta = 100f64.powf(-2.0 / t);
        let inv = table.psi_inverse(delta, t).unwrap();
        assert!(!inv.clamped);
        assert!((inv.s / 100.0 - 1.0).abs() < 1e-9);
        assert!(table.psi_inverse(10.0, t).unwrap().clamped);
    }

    #[test]
    fn csv_layout() {
        let table = DistanceFunctionTable {
            kind: DistanceKind::ApproxViD,
            exponent: 1.0,
            grid: vec![0.5],
            values: vec![0.25],
            sample_count: 3,
            seed: 9,
        };
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("kind,multiplier,value,sample_count,seed"));
        assert_eq!(lines.next(), Some("approx_vi_d,5.0000000000000000e-1,2.5000000000000000e-1,3,9"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn big_d_monotone_in_sample(seed in 0u64..1000, extra in 1usize..50) {
            let ctx = diag_ctx(vec![1.0, 0.5], vec![1.0, -0.5]);
            let (lower, upper) = box2(&ctx);
            let g = Generation::Random { lower, upper };
            let small = sample_level_set(&ctx, &loose_spec(), 20, seed, &g, 1000).unwrap();
            let big = sample_level_set(&ctx, &loose_spec(), 20 + extra, seed, &g, 1000).unwrap();
            let grid = log_grid(0.01, 10.0, 10);
            let a = estimate_holder_distance(&small, 1.0, &grid).unwrap();
            let b = estimate_holder_distance(&big, 1.0, &grid).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!(y >= x);
            }
            prop_assert!(b.properties().all());
            let d = estimate_vi_distance(&big, 0.3, 1.0, &grid).unwrap();
            prop_assert!(d.values.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}
