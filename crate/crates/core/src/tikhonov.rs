//! The Tikhonov functional `T_α(u, δ) = ‖F(u) − v^δ‖^p + α·R(u)`, its
//! minimization, a-priori parameter choices and the per-solution certificates.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::operators::ForwardOperator;
use crate::penalties::Penalty;
use crate::spaces::{dual_pair, Element, NormKind};

/// Slack granted to every certificate inequality.
pub const CERTIFICATE_SLACK: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct TikhonovProblem {
    forward: Arc<dyn ForwardOperator>,
    penalty: Penalty,
    data: Element,
    alpha: f64,
    misfit_exponent: f64,
}

impl TikhonovProblem {
    pub fn new(
        forward: Arc<dyn ForwardOperator>,
        penalty: Penalty,
        data: Element,
        alpha: f64,
        misfit_exponent: f64,
    ) -> Result<Self> {
        ensure_dim(forward.codomain().dimension(), data.len())?;
        ensure_dim(forward.domain().dimension(), penalty.space().dimension())?;
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "regularization weight must be positive, got {alpha}"
            )));
        }
        if !(misfit_exponent.is_finite() && misfit_exponent >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "misfit exponent must be >= 1, got {misfit_exponent}"
            )));
        }
        Ok(Self {
            forward,
            penalty,
            data,
            alpha,
            misfit_exponent,
        })
    }

    /// Same operator and penalty with new data and weight.
    pub fn rebind(&self, data: Element, alpha: f64) -> Result<Self> {
        Self::new(
            self.forward.clone(),
            self.penalty.clone(),
            data,
            alpha,
            self.misfit_exponent,
        )
    }

    pub fn forward(&self) -> &Arc<dyn ForwardOperator> {
        &self.forward
    }

    pub fn penalty(&self) -> &Penalty {
        &self.penalty
    }

    pub fn data(&self) -> &Element {
        &self.data
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn misfit_exponent(&self) -> f64 {
        self.misfit_exponent
    }

    /// `‖F(u) − v^δ‖_data`.
    pub fn residual(&self, u: &Element) -> Result<f64> {
        Ok((&self.forward.apply(u)? - &self.data).norm(NormKind::Data))
    }

    /// `‖F(u) − v^δ‖^p`, the `α → 0` limit of the objective.
    pub fn misfit(&self, u: &Element) -> Result<f64> {
        Ok(self.residual(u)?.powf(self.misfit_exponent))
    }

    pub fn objective(&self, u: &Element) -> Result<f64> {
        Ok(self.misfit(u)? + self.alpha * self.penalty.value(u)?)
    }

    /// Misfit value and its weak-pairing gradient `p‖r‖^{p−2} F′(u)* r`.
    fn misfit_with_gradient(&self, u: &Element) -> Result<(f64, Element)> {
        let r = &self.forward.apply(u)? - &self.data;
        let norm = r.norm(NormKind::Data);
        let p = self.misfit_exponent;
        if norm == 0.0 {
            return Ok((0.0, Element::zeros(u.space().clone())));
        }
        let grad = self.forward.adjoint(u, &r)?.scale(p * norm.powf(p - 2.0));
        Ok((norm.powf(p), grad))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub initial_step: f64,
    /// Halvings allowed per backtracking search.
    pub max_backtracks: usize,
    /// Perturbed starts in addition to the supplied one.
    pub restarts: usize,
    pub spread: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            gradient_tolerance: 1e-10,
            initial_step: 1.0,
            max_backtracks: 60,
            restarts: 3,
            spread: 0.1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iterations > 0
            && self.gradient_tolerance.is_finite()
            && self.gradient_tolerance > 0.0
            && self.initial_step.is_finite()
            && self.initial_step > 0.0
            && self.spread.is_finite()
            && self.spread >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "solver settings out of range: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Element,
    pub iterations: usize,
    pub initial_objective: f64,
    pub objective: f64,
    /// Norm of the proximal gradient mapping at the returned point.
    pub stationarity: f64,
    pub converged: bool,
    /// Whether the objective sequence was nonincreasing.
    pub monotone: bool,
}

struct Iterate {
    x: Element,
    misfit: f64,
    grad: Element,
    objective: f64,
}

impl Iterate {
    fn at(prob: &TikhonovProblem, x: Element) -> Result<Self> {
        let (misfit, grad) = prob.misfit_with_gradient(&x)?;
        let objective = misfit + prob.alpha * prob.penalty.value(&x)?;
        Ok(Self {
            x,
            misfit,
            grad,
            objective,
        })
    }
}

/// Exact penalty minimization along directions invisible to the operator.
fn kernel_correction(prob: &TikhonovProblem, x: Element) -> Result<Element> {
    let mut x = x;
    for dir in prob.forward.invariant_directions() {
        let (lo, hi) = prob.forward.feasible_interval(&x, &dir);
        if !(lo <= 0.0 && 0.0 <= hi) {
            continue;
        }
        let s = prob.penalty.line_minimizer(&x, &dir, lo, hi)?;
        let moved = prob.forward.project(&x.axpy(s, &dir)?);
        if prob.penalty.value(&moved)? <= prob.penalty.value(&x)? {
            x = moved;
        }
    }
    Ok(x)
}

fn forward_step(prob: &TikhonovProblem, it: &Iterate, tau: f64) -> Result<Element> {
    let z = it.x.axpy(-tau, &it.grad)?;
    Ok(prob
        .forward
        .project(&prob.penalty.prox(&z, tau * prob.alpha)?))
}

/// Projected proximal gradient with a Barzilai–Borwein trial step and halving
/// backtracking on both the quadratic upper model and the full objective.
pub fn solve(prob: &TikhonovProblem, init: &Element, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    ensure_dim(prob.forward.domain().dimension(), init.len())?;
    if !prob.forward.in_domain(init) {
        return Err(Error::Domain("initial point outside the domain".into()));
    }
    let initial_objective = prob.objective(init)?;
    let mut it = Iterate::at(prob, kernel_correction(prob, init.clone())?)?;
    if it.objective > initial_objective {
        it = Iterate::at(prob, init.clone())?;
    }
    let mut tau = cfg.initial_step;
    let mut stationarity = f64::INFINITY;
    let mut monotone = true;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iterations {
        iterations += 1;
        let mut accepted = None;
        let mut trial = tau;
        for _ in 0..=cfg.max_backtracks {
            let x_new = forward_step(prob, &it, trial)?;
            let d = &x_new - &it.x;
            let model = it.misfit
                + dual_pair(&it.grad, &d)?
                + d.norm(NormKind::Weak).powi(2) / (2.0 * trial);
            let cand = Iterate::at(prob, x_new)?;
            let slack = 1e-15 * it.misfit.abs().max(1e-300);
            if cand.misfit <= model + slack && cand.objective <= it.objective {
                accepted = Some((cand, d, trial));
                break;
            }
            trial *= 0.5;
        }
        let Some((cand, d, step)) = accepted else {
            // No representable decrease left; report where we stand.
            let probe = forward_step(prob, &it, tau)?;
            stationarity = (&probe - &it.x).norm(NormKind::Weak) / tau;
            converged = stationarity <= cfg.gradient_tolerance;
            break;
        };
        stationarity = d.norm(NormKind::Weak) / step;
        let corrected = kernel_correction(prob, cand.x.clone())?;
        let cand = if corrected != cand.x {
            let c = Iterate::at(prob, corrected)?;
            if c.objective <= cand.objective {
                c
            } else {
                cand
            }
        } else {
            cand
        };
        if cand.objective > it.objective {
            monotone = false;
        }
        // Barzilai–Borwein step from the gradient change.
        let s = &cand.x - &it.x;
        let y = &cand.grad - &it.grad;
        let sy = dual_pair(&s, &y)?;
        let ss = s.norm(NormKind::Weak).powi(2);
        tau = if sy > 0.0 && ss > 0.0 {
            (ss / sy).clamp(1e-12, 1e12)
        } else {
            (step * 2.0).min(1e12)
        };
        it = cand;
        if stationarity <= cfg.gradient_tolerance {
            converged = true;
            break;
        }
    }

    Ok(SolveReport {
        objective: it.objective,
        solution: it.x,
        iterations,
        initial_objective,
        stationarity,
        converged,
        monotone,
    })
}

/// Runs [`solve`] from `init` and from `cfg.restarts` seeded perturbations of
/// it, keeping the lowest objective and breaking ties by the lowest penalty.
pub fn solve_multistart(
    prob: &TikhonovProblem,
    init: &Element,
    cfg: &SolverConfig,
    seed: u64,
) -> Result<SolveReport> {
    let mut best = solve(prob, init, cfg)?;
    let mut best_r = prob.penalty.value(&best.solution)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = cfg.spread
        * init
            .as_slice()
            .iter()
            .fold(1.0_f64, |m, x| m.max(x.abs()));
    for _ in 0..cfg.restarts {
        let noise: Vec<f64> = (0..init.len())
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut rng);
                scale * e
            })
            .collect();
        let start = prob
            .forward
            .project(&init.try_add(&init.with_coords(noise.into())?)?);
        let report = solve(prob, &start, cfg)?;
        let r = prob.penalty.value(&report.solution)?;
        let better = report.objective < best.objective
            || (report.objective == best.objective && r < best_r);
        if better {
            best = report;
            best_r = r;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlphaRule {
    /// `α = c_scale·δ^{p−ε}`.
    Holder { p: f64, epsilon: f64, c_scale: f64 },
    /// `α = δ^{pt/k}`.
    Approx { p: f64, t: f64, k: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaChoice {
    pub alpha: f64,
    /// `2δ^p/α` for the Hölder rule, `δ^{k−t}` for the approximate rule.
    pub condition_value: f64,
    pub condition_bound: f64,
    pub condition_holds: bool,
}

/// A-priori choice `δ ↦ α(δ)` with the standing condition of the matching
/// rate statement checked against `bound` (`c` or `c₁`).
pub fn alpha_rule(delta: f64, rule: &AlphaRule, bound: f64) -> Result<AlphaChoice> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise level must be positive, got {delta}"
        )));
    }
    let (alpha, condition_value) = match *rule {
        AlphaRule::Holder { p, epsilon, c_scale } => {
            if !(p >= 1.0 && epsilon > 0.0 && epsilon < p && c_scale > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "holder rule needs p >= 1, 0 < epsilon < p, c_scale > 0; got {rule:?}"
                )));
            }
            let alpha = c_scale * delta.powf(p - epsilon);
            (alpha, 2.0 * delta.powf(p) / alpha)
        }
        AlphaRule::Approx { p, t, k } => {
            if !(p >= 1.0 && t > 0.0 && t < k && k <= 2.0) {
                return Err(Error::InvalidParameter(format!(
                    "approximate rule needs p >= 1, 0 < t < k <= 2; got {rule:?}"
                )));
            }
            (delta.powf(p * t / k), delta.powf(k - t))
        }
    };
    Ok(AlphaChoice {
        alpha,
        condition_value,
        condition_bound: bound,
        condition_holds: condition_value <= bound,
    })
}

/// The level set `M_{α_max}(ρ)` and its enlargement `ρ₁ = 2^{p−1}ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSetSpec {
    pub alpha_max: f64,
    pub rho: f64,
    pub rho1: f64,
}

impl LevelSetSpec {
    /// `ρ = α_max(c + R(u†))`.
    pub fn new(alpha_max: f64, c: f64, penalty_at_truth: f64, p: f64) -> Result<Self> {
        if !(alpha_max > 0.0 && c > 0.0 && penalty_at_truth >= 0.0 && p >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "level set needs alpha_max > 0, c > 0, R(u†) >= 0, p >= 1 \
                 (got {alpha_max}, {c}, {penalty_at_truth}, {p})"
            )));
        }
        Ok(Self::from_rho(alpha_max, alpha_max * (c + penalty_at_truth), p))
    }

    pub fn from_rho(alpha_max: f64, rho: f64, p: f64) -> Self {
        Self {
            alpha_max,
            rho,
            rho1: 2f64.powf(p - 1.0) * rho,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelSetReport {
    /// `T_{α_max}(u, 0)`.
    pub value: f64,
    pub member_of_rho: bool,
    pub member_of_rho1: bool,
}

/// Noiseless functional `T_{α_max}(u, 0) = ‖F(u) − v‖^p + α_max R(u)`.
pub fn noiseless_value(
    prob: &TikhonovProblem,
    u: &Element,
    exact_data: &Element,
    alpha_max: f64,
) -> Result<f64> {
    let r = (&prob.forward.apply(u)? - exact_data).norm(NormKind::Data);
    Ok(r.powf(prob.misfit_exponent) + alpha_max * prob.penalty.value(u)?)
}

pub fn level_set_check(
    prob: &TikhonovProblem,
    u: &Element,
    spec: &LevelSetSpec,
    exact_data: &Element,
) -> Result<LevelSetReport> {
    let value = noiseless_value(prob, u, exact_data, spec.alpha_max)?;
    Ok(LevelSetReport {
        value,
        member_of_rho: value <= spec.rho,
        member_of_rho1: value <= spec.rho1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimizerCertificates {
    pub residual: f64,
    pub penalty: f64,
    pub penalty_at_truth: f64,
    /// `α R(u) ≤ δ^p + α R(u†)`.
    pub penalty_bound: bool,
    /// `‖F(u) − v^δ‖^p ≤ δ^p + α R(u†)`.
    pub residual_bound: bool,
    /// `‖F(u) − v^δ‖ ≥ δ`.
    pub residual_at_least_delta: bool,
}

pub fn minimizer_certificates(
    prob: &TikhonovProblem,
    u_sol: &Element,
    u_dagger: &Element,
    delta: f64,
) -> Result<MinimizerCertificates> {
    let p = prob.misfit_exponent;
    let residual = prob.residual(u_sol)?;
    let penalty = prob.penalty.value(u_sol)?;
    let penalty_at_truth = prob.penalty.value(u_dagger)?;
    let budget = delta.powf(p) + prob.alpha * penalty_at_truth + CERTIFICATE_SLACK;
    Ok(MinimizerCertificates {
        residual,
        penalty,
        penalty_at_truth,
        penalty_bound: prob.alpha * penalty <= budget,
        residual_bound: residual.powf(p) <= budget,
        residual_at_least_delta: residual >= delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{DiagonalMap, ReactionDiffusionMap};
    use crate::spaces::SpaceDescriptor;

    fn diagonal(sigma: Vec<f64>) -> Arc<dyn ForwardOperator> {
        Arc::new(DiagonalMap::new(sigma).unwrap())
    }

    fn el(space: &Arc<SpaceDescriptor>, c: Vec<f64>) -> Element {
        Element::new(space.clone(), c).unwrap()
    }

    #[test]
    fn objective_arithmetic() {
        let f = diagonal(vec![1.0, 0.5]);
        let s = f.domain().clone();
        let pen = Penalty::squared_norm(Element::zeros(s.clone()));
        let prob = TikhonovProblem::new(f, pen, el(&s, vec![1.0, 1.0]), 1.0, 2.0).unwrap();
        let u = el(&s, vec![1.0, 1.0]);
        assert!((prob.objective(&u).unwrap() - 1.25).abs() < 1e-15);
        assert!((prob.misfit(&u).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn objective_at_truth_with_exact_data() {
        let f = diagonal(vec![1.0, 0.3, 0.1]);
        let s = f.domain().clone();
        let truth = el(&s, vec![0.5, -1.0, 2.0]);
        let pen = Penalty::squared_norm(Element::zeros(s.clone()));
        let v = f.apply(&truth).unwrap();
        let prob = TikhonovProblem::new(f, pen.clone(), v, 0.01, 2.0).unwrap();
        let expect = 0.01 * pen.value(&truth).unwrap();
        assert!((prob.objective(&truth).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        let f = diagonal(vec![1.0]);
        let s = f.domain().clone();
        let pen = Penalty::squared_norm(Element::zeros(s.clone()));
        let v = el(&s, vec![1.0]);
        assert!(TikhonovProblem::new(f.clone(), pen.clone(), v.clone(), 0.0, 2.0).is_err());
        assert!(TikhonovProblem::new(f, pen, v, 1.0, 0.5).is_err());
    }

    #[test]
    fn diagonal_closed_form() {
        let sigma: Vec<f64> = (1..=6).map(|j| 1.0 / j as f64).collect();
        let f = diagonal(sigma.clone());
        let s = f.domain().clone();
        let v = el(&s, vec![1.0, -0.3, 0.2, 0.05, -0.1, 0.4]);
        let alpha = 1e-3;
        let pen = Penalty::squared_norm(Element::zeros(s.clone()));
        let prob = TikhonovProblem::new(f, pen, v.clone(), alpha, 2.0).unwrap();
        let rep = solve(&prob, &Element::zeros(s), &SolverConfig::default()).unwrap();
        assert!(rep.converged && rep.monotone);
        for j in 0..6 {
            let expect = sigma[j] * v.as_slice()[j] / (sigma[j] * sigma[j] + alpha / 2.0);
            assert!((rep.solution.as_slice()[j] - expect).abs() < 1e-6);
        }
    }

    #[test]
    fn start_at_minimizer_stays_put() {
        let sigma = vec![1.0, 0.5, 0.25];
        let f = diagonal(sigma.clone());
        let s = f.domain().clone();
        let v = el(&s, vec![0.3, 0.2, -0.1]);
        let alpha = 0.05;
        let exact: Vec<f64> = (0..3)
            .map(|j| sigma[j] * v.as_slice()[j] / (sigma[j] * sigma[j] + alpha / 2.0))
            .collect();
        let pen = Penalty::squared_norm(Element::zeros(s.clone()));
        let prob = TikhonovProblem::new(f, pen, v, alpha, 2.0).unwrap();
        let start = el(&s, exact);
        let rep = solve(&prob, &start, &SolverConfig::default()).unwrap();
        assert!(rep.iterations <= 2);
        assert!((&rep.solution - &start).norm(NormKind::Weak) <= 1e-8);
    }

    #[test]
    fn soft_thresholding_solver_is_sparse() {
        let f = diagonal(vec![1.0, 1.0, 1.0]);
        let s = f.domain().clone();
        let pen = Penalty::sparsity(s.clone(), vec![1.0; 3], 1.0, 1.0).unwrap();
        let v = el(&s, vec![1.0, 0.01, -0.5]);
        // ‖u − v‖² + α‖u‖₁ is minimized by soft thresholding at α/2.
        let prob = TikhonovProblem::new(f, pen, v, 0.1, 2.0).unwrap();
        let rep = solve(&prob, &Element::zeros(s), &SolverConfig::default()).unwrap();
        let x = rep.solution.as_slice();
        assert!((x[0] - 0.95).abs() < 1e-9 && x[1] == 0.0 && (x[2] + 0.45).abs() < 1e-9);
    }

    #[test]
    fn reaction_diffusion_recovers_exact_data_and_descends() {
        let f = Arc::new(ReactionDiffusionMap::new(8, 1.0, 10.0, None).unwrap());
        let s = f.domain().clone();
        let truth = Element::from_fn(s.clone(), |t| 1.0 + (std::f64::consts::PI * t).sin().powi(2))
            .unwrap();
        let v = f.apply(&truth).unwrap();
        let pen = Penalty::squared_norm(Element::zeros(s.clone()));
        let prob = TikhonovProblem::new(f, pen, v, 1e-6, 2.0).unwrap();
        let init = Element::constant(s, 0.5).unwrap();
        let rep = solve_multistart(&prob, &init, &SolverConfig::default(), 7).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!(rep.monotone);
        assert!(rep.objective <= rep.initial_objective);
        assert!(rep.objective <= prob.objective(&truth).unwrap() + 1e-8);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let f = diagonal((1..=10).map(|j| 1.0 / (j * j) as f64).collect());
        let s = f.domain().clone();
        let pen = Penalty::squared_norm(Element::zeros(s.clone()));
        let prob = TikhonovProblem::new(f, pen, Element::constant(s.clone(), 1.0).unwrap(), 1e-9, 2.0)
            .unwrap();
        let cfg = SolverConfig {
            max_iterations: 2,
            ..SolverConfig::default()
        };
        let rep = solve(&prob, &Element::zeros(s), &cfg).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 2);
    }

    #[test]
    fn alpha_rule_examples() {
        let h = AlphaRule::Holder {
            p: 2.0,
            epsilon: 0.1,
            c_scale: 1.0,
        };
        let a = alpha_rule(1e-2, &h, 10.0).unwrap().alpha;
        assert!((a / 10f64.powf(-3.8) - 1.0).abs() < 1e-12);
        let r = AlphaRule::Approx {
            p: 2.0,
            t: 0.5,
            k: 1.0,
        };
        assert!((alpha_rule(1e-2, &r, 1.0).unwrap().alpha - 1e-2).abs() < 1e-15);
        let c = alpha_rule(0.1, &h, 10.0).unwrap();
        assert!((c.condition_value - 2.0 * 10f64.powf(-0.1)).abs() < 1e-12);
        assert!(c.condition_holds);
    }

    #[test]
    fn alpha_rule_ranges() {
        let bad = AlphaRule::Holder {
            p: 2.0,
            epsilon: 2.0,
            c_scale: 1.0,
        };
        assert!(alpha_rule(0.1, &bad, 1.0).is_err());
        let bad = AlphaRule::Approx {
            p: 2.0,
            t: 1.0,
            k: 1.0,
        };
        assert!(alpha_rule(0.1, &bad, 1.0).is_err());
        let ok = AlphaRule::Approx {
            p: 2.0,
            t: 0.5,
            k: 1.0,
        };
        assert!(alpha_rule(0.0, &ok, 1.0).is_err());
    }

    fn level_set_fixture() -> (TikhonovProblem, Element, Element, LevelSetSpec) {
        let f = diagonal(vec![1.0, 0.5]);
        let s = f.domain().clone();
        let truth = el(&s, vec![1.0, -1.0]);
        let pen = Penalty::squared_norm(Element::zeros(s.clone()));
        let v = f.apply(&truth).unwrap();
        let spec = LevelSetSpec::new(0.1, 1.0, pen.value(&truth).unwrap(), 2.0).unwrap();
        let prob = TikhonovProblem::new(f, pen, v.clone(), 0.01, 2.0).unwrap();
        (prob, truth, v, spec)
    }

    #[test]
    fn truth_lies_in_level_set() {
        let (prob, truth, v, spec) = level_set_fixture();
        assert_eq!(spec.rho1, 2.0 * spec.rho);
        let rep = level_set_check(&prob, &truth, &spec, &v).unwrap();
        assert!(rep.member_of_rho && rep.member_of_rho1);
    }

    #[test]
    fn large_penalty_leaves_level_set() {
        let (prob, _, _, spec) = level_set_fixture();
        // Zero residual against its own image, penalty far above ρ/α_max.
        let far = el(prob.penalty().space(), vec![30.0, 30.0]);
        let v_far = prob.forward().apply(&far).unwrap();
        let rep = level_set_check(&prob, &far, &spec, &v_far).unwrap();
        assert!(!rep.member_of_rho);
    }

    #[test]
    fn certificates_at_truth_with_noise() {
        let (prob, truth, v, _) = level_set_fixture();
        let delta = 0.05;
        let noisy = v.axpy(delta, &el(v.space(), vec![0.6, 0.8])).unwrap();
        let prob = prob.rebind(noisy, 0.01).unwrap();
        let c = minimizer_certificates(&prob, &truth, &truth, delta).unwrap();
        assert!(c.penalty_bound && c.residual_bound);
        assert!((c.residual - delta).abs() < 1e-15);
    }

    #[test]
    fn certificates_hold_for_exact_data_minimizer() {
        let (prob, truth, _, _) = level_set_fixture();
        let rep = solve(&prob, &Element::zeros(truth.space().clone()), &SolverConfig::default())
            .unwrap();
        let c = minimizer_certificates(&prob, &rep.solution, &truth, 0.0).unwrap();
        assert!(c.residual_bound && c.penalty_bound);
        assert!(c.penalty <= c.penalty_at_truth);
    }
}
