//! Experiment configuration: a single JSON document, unknown keys rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::NormKind;
use crate::stability::Generation;
use crate::tikhonov::{AlphaRule, SolverConfig};

/// Environment variable that overrides `base_seed`.
pub const SEED_ENV: &str = "REGRATE_BASE_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub penalty: PenaltyConfig,
    /// Misfit exponent `p`.
    #[serde(default = "default_p")]
    pub p: f64,
    pub alpha_rule: RuleConfig,
    /// Standing constant `c` of the condition `2δ^p/α ≤ c`.
    pub c: f64,
    /// Constant `c₁` of the condition `δ^{k−t} ≤ c₁`.
    #[serde(default = "default_c1")]
    pub c1: f64,
    pub alpha_max: f64,
    /// Strictly decreasing noise levels.
    #[serde(default = "default_delta_grid")]
    pub delta_grid: Vec<f64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_metric")]
    pub metric: MetricName,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Constant starting value for the solver; defaults to 1 for
    /// reaction–diffusion and 0 for diagonal problems.
    #[serde(default)]
    pub init: Option<f64>,
    #[serde(default)]
    pub distance: Option<DistanceConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    ReactionDiffusion {
        n: usize,
        #[serde(default = "default_length")]
        length: f64,
        #[serde(default = "default_f0")]
        f0: f64,
        #[serde(default = "default_theta")]
        theta: f64,
        /// Upper bound on the strong norm of the generated truth.
        #[serde(default)]
        truth_bound: Option<f64>,
    },
    Diagonal {
        n: usize,
        /// `σ_j = j^{−a}`.
        a: f64,
        truth: SparseTruth,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseTruth {
    pub support: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PenaltyConfig {
    SquaredNorm {
        #[serde(default)]
        center: f64,
    },
    PowerNorm {
        #[serde(default)]
        center: f64,
        exponent: f64,
        norm: NormKind,
    },
    Sparsity {
        q: f64,
        /// Defaults to all ones.
        #[serde(default)]
        weights: Option<Vec<f64>>,
        #[serde(default = "default_floor")]
        floor: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleConfig {
    Holder { epsilon: f64, c_scale: f64 },
    Approx { t: f64, k: f64 },
}

impl RuleConfig {
    pub fn with_p(&self, p: f64) -> AlphaRule {
        match *self {
            RuleConfig::Holder { epsilon, c_scale } => AlphaRule::Holder { p, epsilon, c_scale },
            RuleConfig::Approx { t, k } => AlphaRule::Approx { p, t, k },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    Bregman,
    WeakNorm,
    StrongNorm,
    Residual,
}

/// Level-set sampling and multiplier grids for the distance-function tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceConfig {
    /// Hölder exponent `k` of `D(s)`.
    pub k: f64,
    /// Exponent `t` of `d(r)` and of `ψ`.
    pub t: f64,
    #[serde(default)]
    pub beta1: f64,
    pub s_grid: GridSpec,
    pub r_grid: GridSpec,
    pub count: usize,
    pub max_attempts: usize,
    pub generation: Generation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        crate::stability::log_grid(self.min, self.max, self.points)
    }
}

fn default_p() -> f64 {
    2.0
}
fn default_c1() -> f64 {
    1.0
}
fn default_replications() -> usize {
    5
}
fn default_metric() -> MetricName {
    MetricName::Bregman
}
fn default_length() -> f64 {
    1.0
}
fn default_f0() -> f64 {
    1.0
}
fn default_theta() -> f64 {
    0.9
}
fn default_floor() -> f64 {
    1.0
}

/// Eight log-spaced levels from `1e−1` down to `1e−4`.
pub fn default_delta_grid() -> Vec<f64> {
    let mut g = crate::stability::log_grid(1e-4, 1e-1, 8);
    g.reverse();
    g
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("cannot parse configuration: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a file and applies the seed override from the environment.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_json(&text)?;
        cfg.apply_seed_override(std::env::var(SEED_ENV).ok().as_deref())?;
        Ok(cfg)
    }

    pub fn apply_seed_override(&mut self, value: Option<&str>) -> Result<()> {
        if let Some(v) = value {
            self.base_seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV} must be an unsigned integer, got {v:?}")))?;
        }
        Ok(())
    }

    /// Theoretical Hölder exponent of the reaction–diffusion problem,
    /// `k = 2θ/(θ + 1)`; `None` for other problems.
    pub fn example_exponent(&self) -> Option<f64> {
        match self.problem {
            ProblemConfig::ReactionDiffusion { theta, .. } => Some(2.0 * theta / (theta + 1.0)),
            ProblemConfig::Diagonal { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.delta_grid.is_empty() {
            return bad("delta_grid is empty".into());
        }
        if self
            .delta_grid
            .iter()
            .any(|d| !(d.is_finite() && *d >= 0.0))
        {
            return bad("delta_grid entries must be finite and nonnegative".into());
        }
        if self.delta_grid.windows(2).any(|w| w[1] >= w[0]) {
            return bad("delta_grid must be strictly decreasing".into());
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if !(self.p >= 1.0) {
            return bad(format!("p must be >= 1, got {}", self.p));
        }
        if !(self.c > 0.0 && self.c1 > 0.0 && self.alpha_max > 0.0) {
            return bad("c, c1 and alpha_max must be positive".into());
        }
        match &self.problem {
            ProblemConfig::ReactionDiffusion {
                n,
                length,
                f0,
                theta,
                ..
            } => {
                if *n < 2 || !(*length > 0.0) || !(*f0 > 0.0) || !(*theta >= 0.0) {
                    return bad("reaction_diffusion needs n >= 2, length > 0, f0 > 0, theta >= 0".into());
                }
            }
            ProblemConfig::Diagonal { n, truth, .. } => {
                if truth.support.len() != truth.values.len() {
                    return bad("truth support and values differ in length".into());
                }
                if truth.support.iter().any(|j| j >= n) {
                    return bad("truth support index out of range".into());
                }
            }
        }
        self.solver
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}
