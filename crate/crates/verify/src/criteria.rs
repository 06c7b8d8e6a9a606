//! The acceptance criteria. Each returns an [`Outcome`]; none of them panics
//! on a numerical miss.

use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regrate_core::harness::distance::{approx_pipeline, level_set_sample};
use regrate_core::harness::export::write_table_csv;
use regrate_core::harness::{fit_rate, run_sweep, Experiment, ExperimentConfig, MetricName};
use regrate_core::stability::{
    estimate_holder_distance, holder_constant_scan, holder_exponent_scan, StabilityMetric,
};
use regrate_core::{
    solve_multistart, Element, ForwardOperator, NormKind, Penalty, ReactionDiffusionMap,
    SolverConfig, SpaceDescriptor, SpaceKind, TikhonovProblem,
};

use crate::oracles;

pub const RATES_BREGMAN: &str = include_str!("../../../configs/rates_bregman.json");
pub const RATES_WEAK_NORM: &str = include_str!("../../../configs/rates_weak_norm.json");
pub const SPARSITY: &str = include_str!("../../../configs/sparsity.json");
pub const DISTANCE_2D: &str = include_str!("../../../configs/distance_2d.json");
pub const APPROX_2D: &str = include_str!("../../../configs/approx_2d.json");

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    /// `None` when the runtime is shared with another criterion.
    pub budget: Option<Duration>,
}

impl Outcome {
    pub fn line(&self) -> String {
        let budget = match self.budget {
            Some(b) => format!("{:.0}s", b.as_secs_f64()),
            None => "shared".to_string(),
        };
        format!(
            "{} {:>2} {:<34} {:>7.2}s (budget {:>6}) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed.as_secs_f64(),
            budget,
            self.detail
        )
    }
}

type Check = std::result::Result<String, String>;

fn timed(id: u8, title: &'static str, budget: Option<f64>, f: impl FnOnce() -> Check) -> Outcome {
    let start = Instant::now();
    let result = f();
    finish(id, title, budget, start.elapsed(), result)
}

fn finish(
    id: u8,
    title: &'static str,
    budget: Option<f64>,
    elapsed: Duration,
    result: Check,
) -> Outcome {
    let budget = budget.map(Duration::from_secs_f64);
    let (mut passed, mut detail) = match result {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    if let Some(b) = budget {
        if elapsed > b {
            passed = false;
            detail = format!("over the runtime budget; {detail}");
        }
    }
    Outcome {
        id,
        title,
        passed,
        detail,
        elapsed,
        budget,
    }
}

fn err<E: std::fmt::Display>(what: &str) -> impl FnOnce(E) -> String + '_ {
    move |e| format!("{what}: {e}")
}

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn parameter_space(n: usize) -> Arc<SpaceDescriptor> {
    Arc::new(
        SpaceDescriptor::uniform(SpaceKind::Parameter, n, 1.0, Some(0.9)).expect("valid space"),
    )
}

fn random_element(space: &Arc<SpaceDescriptor>, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Element {
    let c: Vec<f64> = (0..space.dimension())
        .map(|_| rng.random_range(lo..hi))
        .collect();
    Element::new(space.clone(), c).expect("finite coordinates")
}

pub fn bregman_identity() -> Outcome {
    timed(1, "squared-norm Bregman identity", Some(1.0), || {
        let space = parameter_space(16);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pen = Penalty::squared_norm(random_element(&space, &mut rng, -1.0, 1.0));
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let u = random_element(&space, &mut rng, -2.0, 2.0);
            let us = random_element(&space, &mut rng, -2.0, 2.0);
            let sel = pen.subgradient(&u).map_err(err("subgradient"))?;
            let d = pen.bregman(&us, &u, &sel).map_err(err("bregman"))?;
            let expect: f64 = 0.5
                * us.as_slice()
                    .iter()
                    .zip(u.as_slice())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
            worst = worst.max((d - expect).abs());
        }
        verdict(
            worst <= 1e-12,
            format!("max |D - ½‖u*-u‖²| = {worst:.2e} over 100 pairs"),
        )
    })
}

pub fn norm_inequality() -> Outcome {
    timed(2, "power-sum norm inequality", Some(1.0), || {
        let space = parameter_space(12);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut violations = 0;
        let mut checks = 0;
        for _ in 0..200 {
            let u = random_element(&space, &mut rng, -3.0, 3.0);
            let us = random_element(&space, &mut rng, -3.0, 3.0);
            let sum = &u + &us;
            for p in [1.0, 1.5, 2.0, 3.0] {
                for kind in [NormKind::Strong, NormKind::Weak, NormKind::Data] {
                    let lhs = sum.norm(kind).powf(p);
                    let rhs = 2f64.powf(p - 1.0) * (u.norm(kind).powf(p) + us.norm(kind).powf(p));
                    checks += 1;
                    if lhs > rhs * (1.0 + 1e-12) {
                        violations += 1;
                    }
                }
            }
        }
        verdict(
            violations == 0,
            format!("{violations} violations in {checks} checks"),
        )
    })
}

pub fn prox_oracles() -> Outcome {
    timed(3, "sparsity prox vs brute force", Some(5.0), || {
        let space = Arc::new(SpaceDescriptor::sequence(1).map_err(err("space"))?);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut worst: f64 = 0.0;
        for q in [1.0, 1.3, 2.0] {
            for _ in 0..50 {
                let z = rng.random_range(-3.0..3.0);
                let step = 10f64.powf(rng.random_range(-2.0..1.0));
                let r = rng.random_range(1.0..3.0);
                let pen =
                    Penalty::sparsity(space.clone(), vec![r], q, 1.0).map_err(err("penalty"))?;
                let ze = Element::new(space.clone(), vec![z]).map_err(err("element"))?;
                let x = pen.prox(&ze, step).map_err(err("prox"))?.as_slice()[0];
                let oracle = oracles::scalar_prox_brute(z, step, r, q);
                worst = worst.max((x - oracle).abs());
            }
        }
        verdict(
            worst <= 1e-6,
            format!("max deviation {worst:.2e} over 150 cases"),
        )
    })
}

pub fn derivative_adjoint() -> Outcome {
    timed(4, "derivative and adjoint checks", Some(5.0), || {
        let f = ReactionDiffusionMap::new(50, 1.0, 1.0, None).map_err(err("operator"))?;
        let dom = f.domain().clone();
        let cod = f.codomain().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let eps = 1e-6;
        let mut worst_fd: f64 = 0.0;
        for _ in 0..20 {
            let g = random_element(&dom, &mut rng, 0.1, 2.0);
            let h = random_element(&dom, &mut rng, -1.0, 1.0);
            let lin = f.derivative(&g, &h).map_err(err("derivative"))?;
            let fd = (&f
                .apply(&g.axpy(eps, &h).map_err(err("axpy"))?)
                .map_err(err("apply"))?
                - &f.apply(&g).map_err(err("apply"))?)
                .scale(1.0 / eps);
            let rel = (&fd - &lin).norm(NormKind::Data) / lin.norm(NormKind::Data);
            worst_fd = worst_fd.max(rel);
        }
        let mut worst_adj: f64 = 0.0;
        for _ in 0..100 {
            let g = random_element(&dom, &mut rng, 0.0, 2.0);
            let h = random_element(&dom, &mut rng, -1.0, 1.0);
            let w = random_element(&cod, &mut rng, -1.0, 1.0);
            let lhs = f
                .derivative(&g, &h)
                .map_err(err("derivative"))?
                .inner(&w, NormKind::Data)
                .map_err(err("inner"))?;
            let rhs = h
                .inner(&f.adjoint(&g, &w).map_err(err("adjoint"))?, NormKind::Weak)
                .map_err(err("inner"))?;
            worst_adj = worst_adj.max((lhs - rhs).abs());
        }
        verdict(
            worst_fd < 1e-5 && worst_adj < 1e-10,
            format!(
                "finite-difference rel. error {worst_fd:.2e}, adjoint residual {worst_adj:.2e}"
            ),
        )
    })
}

pub fn forward_map_pde() -> Outcome {
    timed(5, "forward map vs PDE solve", Some(30.0), || {
        let f = ReactionDiffusionMap::new(401, 1.0, 1.0, None).map_err(err("operator"))?;
        let grid = f.domain().grid().to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut worst: f64 = 0.0;
        for _ in 0..5 {
            let a: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
            let phase: Vec<f64> = (0..4)
                .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
                .collect();
            let g = Element::from_fn(f.domain().clone(), |t| {
                (0..4)
                    .map(|m| a[m] * (1.0 + (m as f64 * std::f64::consts::PI * t + phase[m]).cos()))
                    .sum()
            })
            .map_err(err("element"))?;
            let fast = f.apply(&g).map_err(err("apply"))?;
            let pde = oracles::crank_nicolson_observation(
                &grid,
                g.as_slice(),
                |x| 1.0 + 0.5 * (std::f64::consts::PI * x).cos(),
                101,
                4,
            );
            let scale = pde.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let diff = fast
                .as_slice()
                .iter()
                .zip(&pde)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            worst = worst.max(diff / scale);
        }
        verdict(
            worst < 1e-3,
            format!("max relative error {worst:.2e} over 5 profiles"),
        )
    })
}

pub fn solver_oracles() -> Outcome {
    timed(6, "solver vs closed form and grid", Some(60.0), || {
        // (a) diagonal ridge problem over six noise levels.
        let cfg = ExperimentConfig::from_json(
            r#"{"problem": {"kind": "diagonal", "n": 10, "a": 1.0,
                            "truth": {"support": [0, 1, 2], "values": [1.0, -0.8, 0.6]}},
                "penalty": {"kind": "squared_norm"},
                "alpha_rule": {"kind": "holder", "epsilon": 0.1, "c_scale": 1.0},
                "c": 10.0, "alpha_max": 1.0,
                "delta_grid": [0.1, 0.0251188643150958, 0.00630957344480193,
                               0.00158489319246111, 0.000398107170553497, 0.0001],
                "replications": 1}"#,
        )
        .map_err(err("config"))?;
        let exp = Experiment::build(&cfg).map_err(err("experiment"))?;
        let out = run_sweep(&exp).map_err(err("sweep"))?;
        let sigma: Vec<f64> = (1..=10).map(|j| 1.0 / j as f64).collect();
        let mut worst_a: f64 = 0.0;
        for (row, u) in out.table.rows.iter().zip(&out.solutions) {
            let v = regrate_core::make_noisy(&exp.exact_data, row.delta, row.seed)
                .map_err(err("noise"))?;
            let expect = oracles::diagonal_ridge(&sigma, v.as_slice(), row.alpha);
            for (a, b) in u.as_slice().iter().zip(&expect) {
                worst_a = worst_a.max((a - b).abs());
            }
        }

        // (b) two-node reaction–diffusion problem against a 401×401 grid.
        let two = oracles::TwoNodeProblem {
            length: 1.0,
            f0: 1.0,
            data: [1.004, (-0.5f64 * (0.8 + 1.6)).exp() - 0.006],
            alpha: 0.01,
        };
        let f: Arc<dyn ForwardOperator> =
            Arc::new(ReactionDiffusionMap::new(2, 1.0, 1.0, None).map_err(err("operator"))?);
        let dom = f.domain().clone();
        let data = Element::new(f.codomain().clone(), two.data.to_vec()).map_err(err("data"))?;
        let prob = TikhonovProblem::new(
            f.clone(),
            Penalty::squared_norm(Element::zeros(dom.clone())),
            data,
            two.alpha,
            2.0,
        )
        .map_err(err("problem"))?;
        let init = Element::constant(dom, 1.0).map_err(err("init"))?;
        let rep =
            solve_multistart(&prob, &init, &SolverConfig::default(), 6).map_err(err("solve"))?;
        let s = rep.solution.as_slice();
        let by_hand = two.objective([s[0], s[1]]);
        let grid = oracles::grid_minimum(|g| two.objective(g), |g| two.gradient(g), 0.0, 3.0, 401);
        let consistent = (by_hand - rep.objective).abs() <= 1e-12 * by_hand.max(1.0);
        let ok_b = rep.objective <= grid.value + grid.slack && consistent;
        verdict(
            worst_a <= 1e-6 && ok_b,
            format!(
                "(a) max deviation {worst_a:.2e}; (b) objective {:.10e} vs grid {:.10e} + slack {:.2e}{}",
                rep.objective,
                grid.value,
                grid.slack,
                if consistent { "" } else { " (objective disagrees with hand formula)" }
            ),
        )
    })
}

/// The Bregman-metric reaction–diffusion sweep shared by criteria 7, 8, 13.
pub struct RatesRun {
    pub experiment: Experiment,
    pub outcome: regrate_core::harness::SweepOutcome,
    pub csv: Vec<u8>,
    pub elapsed: Duration,
}

fn rates_sweep(
    config: &ExperimentConfig,
) -> std::result::Result<(Experiment, regrate_core::harness::SweepOutcome, Vec<u8>), String> {
    let exp = Experiment::build(config).map_err(err("experiment"))?;
    let outcome = run_sweep(&exp).map_err(err("sweep"))?;
    let mut csv = Vec::new();
    write_table_csv(&outcome.table, &mut csv).map_err(err("csv"))?;
    Ok((exp, outcome, csv))
}

/// Lazily computed runs shared between criteria.
#[derive(Default)]
pub struct Suite {
    rates: OnceLock<std::result::Result<RatesRun, String>>,
}

impl Suite {
    pub fn new() -> Self {
        Self::default()
    }

    fn rates(&self) -> &std::result::Result<RatesRun, String> {
        self.rates.get_or_init(|| {
            let start = Instant::now();
            let cfg = ExperimentConfig::from_json(RATES_BREGMAN).map_err(err("config"))?;
            let (experiment, outcome, csv) = rates_sweep(&cfg)?;
            Ok(RatesRun {
                experiment,
                outcome,
                csv,
                elapsed: start.elapsed(),
            })
        })
    }

    pub fn bregman_rate(&self) -> Outcome {
        let start = Instant::now();
        let result = (|| {
            let run = self.rates().as_ref().map_err(Clone::clone)?;
            let cfg = &run.experiment.config;
            let k = cfg
                .example_exponent()
                .ok_or("not a reaction-diffusion run")?;
            let eps = match cfg.alpha_rule {
                regrate_core::harness::RuleConfig::Holder { epsilon, .. } => epsilon,
                _ => return Err("expected the Hölder rule".to_string()),
            };
            let target = k * (cfg.p - eps) / cfg.p - 0.15;
            let fit = fit_rate(&run.outcome.table, MetricName::Bregman).map_err(err("fit"))?;
            let cert_failures = run
                .outcome
                .table
                .rows
                .iter()
                .filter(|r| r.converged && !(r.cert_36 && r.cert_37 && r.cert_39))
                .count();
            let flagged = run.outcome.table.flagged_count();
            verdict(
                fit.slope >= target && fit.r_squared >= 0.95 && cert_failures == 0,
                format!(
                    "slope {:.3} (need >= {target:.3}), r² {:.4}, certificate failures {cert_failures}, flagged {flagged}/{}",
                    fit.slope,
                    fit.r_squared,
                    run.outcome.table.rows.len()
                ),
            )
        })();
        let elapsed = start
            .elapsed()
            .max(self.rates().as_ref().map(|r| r.elapsed).unwrap_or_default());
        finish(
            7,
            "Bregman rate, reaction-diffusion",
            Some(120.0),
            elapsed,
            result,
        )
    }

    pub fn residual_rate(&self) -> Outcome {
        timed(8, "residual rate", None, || {
            let run = self.rates().as_ref().map_err(Clone::clone)?;
            let cfg = &run.experiment.config;
            let eps = match cfg.alpha_rule {
                regrate_core::harness::RuleConfig::Holder { epsilon, .. } => epsilon,
                _ => return Err("expected the Hölder rule".to_string()),
            };
            let target = (cfg.p - eps) / cfg.p;
            let fit = fit_rate(&run.outcome.table, MetricName::Residual).map_err(err("fit"))?;
            verdict(
                (fit.slope - target).abs() <= 0.1,
                format!(
                    "slope {:.3} (need {target:.3} ± 0.1), r² {:.4}",
                    fit.slope, fit.r_squared
                ),
            )
        })
    }

    pub fn determinism(&self) -> Outcome {
        timed(13, "bit-identical rerun", None, || {
            let run = self.rates().as_ref().map_err(Clone::clone)?;
            let (_, _, again) = rates_sweep(&run.experiment.config)?;
            verdict(
                again == run.csv,
                format!(
                    "{} CSV bytes, identical: {}",
                    run.csv.len(),
                    again == run.csv
                ),
            )
        })
    }
}

pub fn weak_norm_rate() -> Outcome {
    timed(9, "weak-norm rate, power penalty", Some(120.0), || {
        let cfg = ExperimentConfig::from_json(RATES_WEAK_NORM).map_err(err("config"))?;
        let exp = Experiment::build(&cfg).map_err(err("experiment"))?;
        let out = run_sweep(&exp).map_err(err("sweep"))?;
        let fit = fit_rate(&out.table, MetricName::WeakNorm).map_err(err("fit"))?;
        let sample = level_set_sample(&exp).map_err(err("sample"))?;
        let kappa = holder_exponent_scan(&sample, StabilityMetric::WeakNorm, 0.05, 4.0)
            .map_err(err("exponent scan"))?;
        let eps = match cfg.alpha_rule {
            regrate_core::harness::RuleConfig::Holder { epsilon, .. } => epsilon,
            _ => return Err("expected the Hölder rule".to_string()),
        };
        let target = (1.0 - eps / cfg.p) * kappa - 0.15;
        verdict(
            fit.slope >= target,
            format!(
                "slope {:.3} (need >= {target:.3}; estimated exponent {kappa:.3} on {} points), r² {:.4}",
                fit.slope,
                sample.len(),
                fit.r_squared
            ),
        )
    })
}

pub fn distance_suite() -> Outcome {
    timed(10, "distance-function suite", Some(30.0), || {
        let cfg = ExperimentConfig::from_json(DISTANCE_2D).map_err(err("config"))?;
        let exp = Experiment::build(&cfg).map_err(err("experiment"))?;
        let dc = cfg.distance.clone().ok_or("missing distance section")?;
        let sample = level_set_sample(&exp).map_err(err("sample"))?;
        let s_grid = dc.s_grid.values();
        let table = estimate_holder_distance(&sample, dc.k, &s_grid).map_err(err("table"))?;
        let props = table.properties();
        let scan = holder_constant_scan(&sample, dc.k, StabilityMetric::Bregman);
        let zero_beyond = table
            .grid
            .iter()
            .zip(&table.values)
            .all(|(s, d)| *s < scan.c_est || *d == 0.0);

        let sigma = [1.0, 0.5];
        let truth = [exp.truth.as_slice()[0], exp.truth.as_slice()[1]];
        let analytic_c = 1.0 / (2.0 * 0.25);
        let dense = oracles::dense_distance(
            sigma,
            truth,
            exp.level_set.alpha_max,
            exp.level_set.rho1,
            cfg.p,
            dc.k,
            &s_grid,
            -3.0,
            3.0,
            601,
        );
        let pts: Vec<[f64; 2]> = sample
            .points
            .iter()
            .map(|p| [p.u.as_slice()[0], p.u.as_slice()[1]])
            .collect();
        let dist = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
        let nearest = |x: [f64; 2], set: &[[f64; 2]]| {
            set.iter()
                .copied()
                .min_by(|a, b| dist(x, *a).total_cmp(&dist(x, *b)))
                .unwrap_or(x)
        };
        let radius = dense
            .points
            .iter()
            .chain(&pts)
            .map(|u| dist(*u, truth))
            .fold(0.0, f64::max);
        let mut worst_excess = f64::NEG_INFINITY;
        let mut worst_diff: f64 = 0.0;
        for (i, s) in s_grid.iter().enumerate() {
            // Maximizer on the random sample, by the oracle's formula.
            let (best_v, best_u) = pts
                .iter()
                .map(|u| (oracles::phi(sigma, truth, *u, *s, dc.k), *u))
                .fold(
                    (f64::NEG_INFINITY, truth),
                    |a, b| if b.0 > a.0 { b } else { a },
                );
            if (best_v - table.values[i]).abs() > 1e-12 * best_v.abs().max(1.0) {
                return Err(format!(
                    "sample table disagrees with direct evaluation at s = {s}"
                ));
            }
            let to_grid = dist(best_u, nearest(best_u, &dense.points));
            let to_sample = dist(dense.argmax[i], nearest(dense.argmax[i], &pts));
            let bound =
                oracles::phi_lipschitz_k2(sigma, *s, radius) * to_grid.max(to_sample) + 1e-12;
            let diff = (table.values[i] - dense.values[i]).abs();
            worst_diff = worst_diff.max(diff);
            worst_excess = worst_excess.max(diff - bound);
        }
        let agree = worst_excess <= 0.0;
        verdict(
            props.nonnegative
                && props.nonincreasing
                && zero_beyond
                && agree
                && scan.c_est <= analytic_c * (1.0 + 1e-12),
            format!(
                "nonnegative {}, nonincreasing {}, zero beyond C_est={:.4} (<= {analytic_c}) {}, \
                 dense-grid max diff {worst_diff:.2e} within bound {}",
                props.nonnegative, props.nonincreasing, scan.c_est, zero_beyond, agree
            ),
        )
    })
}

pub fn lemma_bound() -> Outcome {
    timed(11, "a-priori bound, approximate rule", Some(60.0), || {
        let cfg = ExperimentConfig::from_json(APPROX_2D).map_err(err("config"))?;
        let exp = Experiment::build(&cfg).map_err(err("experiment"))?;
        let (t, k) = match cfg.alpha_rule {
            regrate_core::harness::RuleConfig::Approx { t, k } => (t, k),
            _ => return Err("expected the approximate rule".to_string()),
        };
        let sample = level_set_sample(&exp).map_err(err("sample"))?;
        let cells = approx_pipeline(&exp, &sample).map_err(err("pipeline"))?;
        let p = cfg.p;
        let truth = exp.truth.as_slice();
        let r_truth = 0.5 * truth.iter().map(|x| x * x).sum::<f64>();
        let rho = exp.level_set.alpha_max * (cfg.c + r_truth);
        let c1 = 2f64.powf(k);
        let c2 = c1 * (cfg.c / 2.0 + rho / exp.level_set.alpha_max).powf(k / p);
        let mut min_slack = f64::INFINITY;
        let mut evaluations = 0;
        let mut mismatches = 0;
        for cell in &cells {
            if (cell.alpha - cell.delta.powf(p * t / k)).abs() > 1e-15 * cell.alpha.max(1.0) {
                return Err(format!(
                    "alpha {} off the rule at delta {}",
                    cell.alpha, cell.delta
                ));
            }
            for ((s, d), core_slack) in cell
                .s_values
                .iter()
                .zip(&cell.d_values)
                .zip(&cell.lemma.slack)
            {
                let bound =
                    c1 * s * cell.delta.powf(k) + c2 * s * cell.alpha.powf(k / p) + d + 1e-9;
                let slack = bound - cell.bregman;
                if (slack - core_slack).abs() > 1e-9 * bound.max(1.0) {
                    mismatches += 1;
                }
                min_slack = min_slack.min(slack);
                evaluations += 1;
            }
        }
        verdict(
            min_slack >= 0.0 && mismatches == 0 && !cells.is_empty(),
            format!(
                "{} cells, {evaluations} (cell, s) checks, min slack {min_slack:.3e}, library/oracle mismatches {mismatches}",
                cells.len()
            ),
        )
    })
}

pub fn sparsity_rates() -> Outcome {
    timed(12, "sparsity rates", Some(60.0), || {
        let cfg = ExperimentConfig::from_json(SPARSITY).map_err(err("config"))?;
        let exp = Experiment::build(&cfg).map_err(err("experiment"))?;
        let out = run_sweep(&exp).map_err(err("sweep"))?;
        let eps = match cfg.alpha_rule {
            regrate_core::harness::RuleConfig::Holder { epsilon, .. } => epsilon,
            _ => return Err("expected the Hölder rule".to_string()),
        };
        let rate = (cfg.p - eps) / cfg.p;

        let support = |u: &[f64]| -> Vec<usize> {
            u.iter()
                .enumerate()
                .filter(|(_, x)| **x != 0.0)
                .map(|(j, _)| j)
                .collect()
        };
        let true_support = support(exp.truth.as_slice());
        let smallest = *cfg.delta_grid.last().ok_or("empty delta grid")?;
        let mut at_smallest = 0;
        let mut exact = 0;
        for (row, u) in out.table.rows.iter().zip(&out.solutions) {
            if row.delta == smallest {
                at_smallest += 1;
                if support(u.as_slice()) == true_support {
                    exact += 1;
                }
            }
        }
        let a = at_smallest > 0 && exact == at_smallest;

        let (b, b_detail) = match fit_rate(&out.table, MetricName::Bregman) {
            Ok(f) => (
                f.slope >= rate - 0.15,
                format!("slope {:.3} (need >= {:.3})", f.slope, rate - 0.15),
            ),
            Err(e) => (false, format!("no fit: {e}")),
        };

        // The diagonal operator is injective, so the norm estimate is
        // Lipschitz: exponent 1.
        let k = 1.0_f64;
        let c_target = rate * k.min(1.0) - 0.15;
        let (c, c_detail) = match fit_rate(&out.table, MetricName::WeakNorm) {
            Ok(f) => (
                f.slope >= c_target,
                format!("slope {:.3} (need >= {c_target:.3})", f.slope),
            ),
            Err(e) => (false, format!("no fit: {e}")),
        };
        let mark = |ok: bool| if ok { "pass" } else { "FAIL" };
        verdict(
            a && b && c,
            format!(
                "(a) {} exact support {exact}/{at_smallest} at delta={smallest:e}; (b) {} Bregman {b_detail}; (c) {} norm {c_detail}",
                mark(a),
                mark(b),
                mark(c)
            ),
        )
    })
}

/// Runs every criterion in order.
pub fn run_all() -> Vec<Outcome> {
    run_selected(&[])
}

/// Runs the criteria with the given numbers, in order; all of them when empty.
pub fn run_selected(ids: &[u8]) -> Vec<Outcome> {
    let suite = Suite::new();
    let checks: [(u8, &dyn Fn() -> Outcome); 13] = [
        (1, &bregman_identity),
        (2, &norm_inequality),
        (3, &prox_oracles),
        (4, &derivative_adjoint),
        (5, &forward_map_pde),
        (6, &solver_oracles),
        (7, &|| suite.bregman_rate()),
        (8, &|| suite.residual_rate()),
        (9, &weak_norm_rate),
        (10, &distance_suite),
        (11, &lemma_bound),
        (12, &sparsity_rates),
        (13, &|| suite.determinism()),
    ];
    checks
        .iter()
        .filter(|(id, _)| ids.is_empty() || ids.contains(id))
        .map(|(_, check)| check())
        .collect()
}
