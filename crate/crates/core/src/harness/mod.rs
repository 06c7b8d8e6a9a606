//! Experiment driver: seeded noise, δ-sweeps, rate fits and table export.

pub mod config;
pub mod distance;
pub mod export;
pub mod fit;
pub mod sweep;

use std::f64::consts::PI;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::operators::{DiagonalMap, ForwardOperator, ReactionDiffusionMap};
use crate::penalties::Penalty;
use crate::spaces::{Element, NormKind};
use crate::stability::StabilityContext;
use crate::tikhonov::LevelSetSpec;

pub use config::{ExperimentConfig, MetricName, PenaltyConfig, ProblemConfig, RuleConfig};
pub use fit::{fit_rate, median_by_delta, RateFit};
pub use sweep::{run_sweep, CellDiagnostics, SweepOutcome, SweepRow, SweepTable};

/// `v^δ = v + δ·e/‖e‖_data` with `e` a seeded standard-normal draw, so that
/// `‖v^δ − v‖_data = δ`.
pub fn make_noisy(v: &Element, delta: f64, seed: u64) -> Result<Element> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise level must be nonnegative, got {delta}"
        )));
    }
    if delta == 0.0 {
        return Ok(v.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let e: Vec<f64> = (0..v.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let e = v.with_coords(e.into())?;
        let norm = e.norm(NormKind::Data);
        if norm > 0.0 {
            return v.axpy(delta / norm, &e);
        }
    }
}

/// Seed of replication `rep`; the same noise direction is reused across the
/// δ grid.
pub fn replication_seed(base_seed: u64, rep: usize) -> u64 {
    base_seed ^ (rep as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Regularization weight used for exact data, where the rules give zero.
pub const NOISELESS_ALPHA: f64 = 1e-12;

/// Everything a run needs, assembled from an [`ExperimentConfig`].
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub forward: Arc<dyn ForwardOperator>,
    pub penalty: Penalty,
    pub truth: Element,
    pub exact_data: Element,
    pub level_set: LevelSetSpec,
    pub init: Element,
}

impl Experiment {
    pub fn build(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let (forward, raw_truth, default_init): (Arc<dyn ForwardOperator>, Element, f64) =
            match &config.problem {
                ProblemConfig::ReactionDiffusion {
                    n,
                    length,
                    f0,
                    theta,
                    truth_bound,
                } => {
                    let f = ReactionDiffusionMap::new(*n, *length, *f0, Some(*theta))?;
                    let mut g = Element::from_fn(f.domain().clone(), |t| {
                        1.0 + (PI * t / length).sin().powi(2)
                    })?;
                    if let Some(bound) = truth_bound {
                        let norm = g.norm(NormKind::Strong);
                        if norm > *bound {
                            g = g.scale(bound / norm);
                        }
                    }
                    (Arc::new(f), g, 1.0)
                }
                ProblemConfig::Diagonal { n, a, truth } => {
                    let f = DiagonalMap::power_decay(*n, *a)?;
                    let mut coords = vec![0.0; *n];
                    for (j, v) in truth.support.iter().zip(&truth.values) {
                        coords[*j] = *v;
                    }
                    let u = Element::new(f.domain().clone(), coords)?;
                    (Arc::new(f), u, 0.0)
                }
            };
        let space = forward.domain().clone();
        let penalty = match &config.penalty {
            PenaltyConfig::SquaredNorm { center } => {
                Penalty::squared_norm(Element::constant(space.clone(), *center)?)
            }
            PenaltyConfig::PowerNorm {
                center,
                exponent,
                norm,
            } => Penalty::power_norm(Element::constant(space.clone(), *center)?, *exponent, *norm)?,
            PenaltyConfig::Sparsity { q, weights, floor } => {
                let w = weights
                    .clone()
                    .unwrap_or_else(|| vec![1.0; space.dimension()]);
                Penalty::sparsity(space.clone(), w, *q, *floor)?
            }
        };
        let truth = penalty_minimal_representative(forward.as_ref(), &penalty, raw_truth)?;
        let exact_data = forward.apply(&truth)?;
        let level_set =
            LevelSetSpec::new(config.alpha_max, config.c, penalty.value(&truth)?, config.p)?;
        let init = forward.project(&Element::constant(
            space,
            config.init.unwrap_or(default_init),
        )?);
        Ok(Self {
            config: config.clone(),
            forward,
            penalty,
            truth,
            exact_data,
            level_set,
            init,
        })
    }

    pub fn stability_context(&self) -> Result<StabilityContext> {
        StabilityContext::new(
            self.forward.clone(),
            self.penalty.clone(),
            self.truth.clone(),
            self.config.p,
        )
    }
}

/// Among all `u + s·z` with `z` an invariant direction of `F` (same data),
/// picks the one with the smallest penalty.
pub fn penalty_minimal_representative(
    forward: &dyn ForwardOperator,
    penalty: &Penalty,
    u: Element,
) -> Result<Element> {
    let mut u = u;
    for dir in forward.invariant_directions() {
        let (lo, hi) = forward.feasible_interval(&u, &dir);
        let s = penalty.line_minimizer(&u, &dir, lo, hi)?;
        u = forward.project(&u.axpy(s, &dir)?);
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{SpaceDescriptor, SpaceKind};

    fn data_element() -> Element {
        let s = Arc::new(SpaceDescriptor::uniform(SpaceKind::Data, 21, 1.0, None).unwrap());
        Element::from_fn(s, |t| (-t).exp()).unwrap()
    }

    #[test]
    fn zero_noise_is_identity() {
        let v = data_element();
        assert_eq!(make_noisy(&v, 0.0, 3).unwrap(), v);
    }

    #[test]
    fn noise_has_exact_level() {
        let v = data_element();
        for (delta, seed) in [(1e-4, 1), (0.3, 2), (7.0, 3)] {
            let vd = make_noisy(&v, delta, seed).unwrap();
            assert!(((&vd - &v).norm(NormKind::Data) - delta).abs() <= 1e-12 * delta.max(1.0));
        }
    }

    #[test]
    fn noise_is_seed_deterministic() {
        let v = data_element();
        let a = make_noisy(&v, 0.1, 5).unwrap();
        let b = make_noisy(&v, 0.1, 5).unwrap();
        let c = make_noisy(&v, 0.1, 6).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
        assert_ne!(a.as_slice(), c.as_slice());
        assert!(make_noisy(&v, -1.0, 0).is_err());
    }

    #[test]
    fn replication_seeds_differ() {
        let s: Vec<u64> = (0..5).map(|r| replication_seed(42, r)).collect();
        for i in 0..5 {
            for j in 0..i {
                assert_ne!(s[i], s[j]);
            }
        }
    }

    #[test]
    fn reaction_diffusion_truth_is_penalty_minimal_and_feasible() {
        let cfg = ExperimentConfig::from_json(
            r#"{"problem": {"kind": "reaction_diffusion", "n": 8, "f0": 10.0},
                "penalty": {"kind": "squared_norm"},
                "alpha_rule": {"kind": "holder", "epsilon": 0.1, "c_scale": 0.01},
                "c": 200.0, "alpha_max": 0.001}"#,
        )
        .unwrap();
        let exp = Experiment::build(&cfg).unwrap();
        assert!(exp.forward.in_domain(&exp.truth));
        let z = exp.forward.invariant_directions().remove(0);
        let r0 = exp.penalty.value(&exp.truth).unwrap();
        for s in [-1e-3, 1e-3] {
            let moved = exp.truth.axpy(s, &z).unwrap();
            assert!(exp.penalty.value(&moved).unwrap() >= r0);
        }
        let at_truth = crate::tikhonov::noiseless_value(
            &crate::tikhonov::TikhonovProblem::new(
                exp.forward.clone(),
                exp.penalty.clone(),
                exp.exact_data.clone(),
                1.0,
                2.0,
            )
            .unwrap(),
            &exp.truth,
            &exp.exact_data,
            exp.level_set.alpha_max,
        )
        .unwrap();
        assert!(at_truth <= exp.level_set.rho);
    }
}
