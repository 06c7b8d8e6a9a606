//! δ-sweeps: one regularized solve per (noise level, replication) cell.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::MetricName;
use super::{make_noisy, replication_seed, Experiment, NOISELESS_ALPHA};
use crate::error::{Error, Result};
use crate::spaces::{Element, NormKind};
use crate::tikhonov::{
    alpha_rule, level_set_check, minimizer_certificates, solve_multistart, TikhonovProblem,
};

/// Largest tolerated share of flagged cells.
pub const MAX_FLAGGED_FRACTION: f64 = 0.2;

/// Slack of the "at least as good as the truth" minimizer check.
pub const MINIMIZER_SLACK: f64 = 1e-8;

/// One exported row; field order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub replication: usize,
    pub alpha: f64,
    pub metric: f64,
    pub bregman: f64,
    pub weak_norm: f64,
    pub strong_norm: f64,
    pub residual: f64,
    pub cert_36: bool,
    pub cert_37: bool,
    pub cert_39: bool,
    pub converged: bool,
    pub seed: u64,
}

pub const COLUMNS: [&str; 13] = [
    "delta",
    "replication",
    "alpha",
    "metric",
    "bregman",
    "weak_norm",
    "strong_norm",
    "residual",
    "cert_36",
    "cert_37",
    "cert_39",
    "converged",
    "seed",
];

impl SweepRow {
    pub fn value(&self, metric: MetricName) -> f64 {
        match metric {
            MetricName::Bregman => self.bregman,
            MetricName::WeakNorm => self.weak_norm,
            MetricName::StrongNorm => self.strong_norm,
            MetricName::Residual => self.residual,
        }
    }

    /// Rows failing a certificate or the solve are excluded from fits.
    pub fn flagged(&self) -> bool {
        !(self.cert_36 && self.cert_37 && self.cert_39 && self.converged)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn flagged_count(&self) -> usize {
        self.rows.iter().filter(|r| r.flagged()).count()
    }
}

/// Per-cell solver and parameter-choice details not part of the table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellDiagnostics {
    pub iterations: usize,
    pub objective: f64,
    pub objective_at_truth: f64,
    pub stationarity: f64,
    pub monotone: bool,
    pub alpha_condition_holds: bool,
    pub level_value: f64,
    pub residual_at_least_delta: bool,
    pub penalty_not_above_truth: bool,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub table: SweepTable,
    pub diagnostics: Vec<CellDiagnostics>,
    pub solutions: Vec<Element>,
}

struct Cell {
    row: SweepRow,
    diagnostics: CellDiagnostics,
    solution: Element,
}

fn run_cell(exp: &Experiment, delta_index: usize, rep: usize) -> Result<Cell> {
    let cfg = &exp.config;
    let delta = cfg.delta_grid[delta_index];
    let seed = replication_seed(cfg.base_seed, rep);
    let noisy = make_noisy(&exp.exact_data, delta, seed)?;
    let rule = cfg.alpha_rule.with_p(cfg.p);
    let bound = match rule {
        crate::tikhonov::AlphaRule::Holder { .. } => cfg.c,
        crate::tikhonov::AlphaRule::Approx { .. } => cfg.c1,
    };
    let (alpha, alpha_condition_holds) = if delta > 0.0 {
        let choice = alpha_rule(delta, &rule, bound)?;
        (choice.alpha, choice.condition_holds)
    } else {
        (NOISELESS_ALPHA, true)
    };
    let prob = TikhonovProblem::new(
        exp.forward.clone(),
        exp.penalty.clone(),
        noisy,
        alpha,
        cfg.p,
    )?;
    let solve_seed = seed ^ (delta_index as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    let report = solve_multistart(&prob, &exp.init, &cfg.solver, solve_seed)?;
    let u = report.solution;
    let objective_at_truth = prob.objective(&exp.truth)?;
    let converged = report.converged && report.objective <= objective_at_truth + MINIMIZER_SLACK;

    let certs = minimizer_certificates(&prob, &u, &exp.truth, delta)?;
    let level = level_set_check(&prob, &u, &exp.level_set, &exp.exact_data)?;
    let selection = exp.penalty.subgradient(&exp.truth)?;
    let bregman = exp.penalty.bregman(&u, &exp.truth, &selection)?;
    let diff = &u - &exp.truth;
    let mut row = SweepRow {
        delta,
        replication: rep,
        alpha,
        metric: 0.0,
        bregman,
        weak_norm: diff.norm(NormKind::Weak),
        strong_norm: diff.norm(NormKind::Strong),
        residual: certs.residual,
        cert_36: certs.penalty_bound,
        cert_37: level.member_of_rho1,
        cert_39: certs.residual_bound,
        converged,
        seed,
    };
    row.metric = row.value(cfg.metric);
    Ok(Cell {
        row,
        diagnostics: CellDiagnostics {
            iterations: report.iterations,
            objective: report.objective,
            objective_at_truth,
            stationarity: report.stationarity,
            monotone: report.monotone,
            alpha_condition_holds,
            level_value: level.value,
            residual_at_least_delta: certs.residual_at_least_delta,
            penalty_not_above_truth: certs.penalty <= certs.penalty_at_truth,
        },
        solution: u,
    })
}

/// Solves every (δ, replication) cell, in parallel, and gathers the rows in
/// (δ, replication) order.
///
/// Fails when more than a fifth of the cells are flagged.
pub fn run_sweep(exp: &Experiment) -> Result<SweepOutcome> {
    let cfg = &exp.config;
    let cells: Vec<(usize, usize)> = (0..cfg.delta_grid.len())
        .flat_map(|d| (0..cfg.replications).map(move |r| (d, r)))
        .collect();
    let results: Vec<Cell> = cells
        .par_iter()
        .map(|(d, r)| run_cell(exp, *d, *r))
        .collect::<Result<_>>()?;
    let mut outcome = SweepOutcome {
        table: SweepTable::default(),
        diagnostics: Vec::with_capacity(results.len()),
        solutions: Vec::with_capacity(results.len()),
    };
    for cell in results {
        outcome.table.rows.push(cell.row);
        outcome.diagnostics.push(cell.diagnostics);
        outcome.solutions.push(cell.solution);
    }
    let flagged = outcome.table.flagged_count();
    let total = outcome.table.rows.len();
    if flagged as f64 > MAX_FLAGGED_FRACTION * total as f64 {
        return Err(Error::TooManyFlagged { flagged, total });
    }
    Ok(outcome)
}
