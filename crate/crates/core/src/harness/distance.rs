//! Distance-function tables and the approximate-Hölder pipeline.

use rayon::prelude::*;
use serde::Serialize;

use super::config::DistanceConfig;
use super::{make_noisy, replication_seed, Experiment};
use crate::error::{Error, Result};
use crate::spaces::NormKind;
use crate::stability::{
    estimate_holder_distance, estimate_vi_distance, holder_constant_scan, lemma31_bound_check,
    sample_level_set, BoundParameters, DistanceFunctionTable, HolderScan, LevelSetSample,
    Lemma31Report, PsiInverse, StabilityMetric, TableProperties,
};
use crate::tikhonov::{alpha_rule, solve_multistart, AlphaRule, TikhonovProblem};

fn distance_config(exp: &Experiment) -> Result<&DistanceConfig> {
    exp.config
        .distance
        .as_ref()
        .ok_or_else(|| Error::Config("this pipeline needs a \"distance\" section".into()))
}

/// Level-set sample drawn as configured, seeded with `base_seed`.
pub fn level_set_sample(exp: &Experiment) -> Result<LevelSetSample> {
    let dc = distance_config(exp)?;
    sample_level_set(
        &exp.stability_context()?,
        &exp.level_set,
        dc.count,
        exp.config.base_seed,
        &dc.generation,
        dc.max_attempts,
    )
}

#[derive(Debug, Clone)]
pub struct DistanceRun {
    pub sample_len: usize,
    pub attempts: usize,
    pub holder: DistanceFunctionTable,
    pub vi: DistanceFunctionTable,
    pub holder_properties: TableProperties,
    pub vi_properties: TableProperties,
    pub scan: HolderScan,
}

pub fn distance_tables(exp: &Experiment) -> Result<DistanceRun> {
    let dc = distance_config(exp)?;
    let sample = level_set_sample(exp)?;
    let holder = estimate_holder_distance(&sample, dc.k, &dc.s_grid.values())?;
    let vi = estimate_vi_distance(&sample, dc.beta1, dc.t, &dc.r_grid.values())?;
    Ok(DistanceRun {
        sample_len: sample.len(),
        attempts: sample.attempts,
        holder_properties: holder.properties(),
        vi_properties: vi.properties(),
        scan: holder_constant_scan(&sample, dc.k, StabilityMetric::Bregman),
        holder,
        vi,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproxCell {
    pub delta: f64,
    pub replication: usize,
    pub alpha: f64,
    pub condition_holds: bool,
    pub converged: bool,
    pub bregman: f64,
    pub residual: f64,
    /// `ψ^{-1}(δ)` on the cell's table.
    pub psi_inverse: PsiInverse,
    /// `δ^t / D̂(ψ^{-1}(δ))`; infinite when `D̂` vanishes there.
    pub eta: f64,
    /// Bound check on the `s` grid with `ψ^{-1}(δ)` inserted.
    pub lemma: Lemma31Report,
    pub s_values: Vec<f64>,
    /// `D̂` at `s_values`.
    pub d_values: Vec<f64>,
}

/// Approximate-Hölder pipeline: for every positive δ and replication, solve
/// with the approximate rule, add the minimizer to the level-set sample, tabulate
/// `D̂`, invert `ψ` and check the a-priori bound.
pub fn approx_pipeline(exp: &Experiment, sample: &LevelSetSample) -> Result<Vec<ApproxCell>> {
    let cfg = &exp.config;
    let dc = distance_config(exp)?;
    let rule = cfg.alpha_rule.with_p(cfg.p);
    let AlphaRule::Approx { t, k, .. } = rule else {
        return Err(Error::Config(
            "the approximate pipeline needs an \"approx\" alpha rule".into(),
        ));
    };
    let ctx = exp.stability_context()?;
    let s_grid = dc.s_grid.values();
    let cells: Vec<(usize, usize)> = (0..cfg.delta_grid.len())
        .filter(|d| cfg.delta_grid[*d] > 0.0)
        .flat_map(|d| (0..cfg.replications).map(move |r| (d, r)))
        .collect();
    cells
        .par_iter()
        .map(|&(di, rep)| -> Result<ApproxCell> {
            let delta = cfg.delta_grid[di];
            let seed = replication_seed(cfg.base_seed, rep);
            let noisy = make_noisy(&exp.exact_data, delta, seed)?;
            let choice = alpha_rule(delta, &rule, cfg.c1)?;
            let prob = TikhonovProblem::new(
                exp.forward.clone(),
                exp.penalty.clone(),
                noisy.clone(),
                choice.alpha,
                cfg.p,
            )?;
            let solve_seed = seed ^ (di as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
            let report = solve_multistart(&prob, &exp.init, &cfg.solver, solve_seed)?;
            let u = report.solution;
            let bregman = ctx.bregman(&u)?;
            let residual = (&exp.forward.apply(&u)? - &noisy).norm(NormKind::Data);

            let mut local = sample.clone();
            local.push(&ctx, u)?;
            let coarse = estimate_holder_distance(&local, k, &s_grid)?;
            let psi_inverse = coarse.psi_inverse(delta, t)?;
            let mut s_values = s_grid.clone();
            if !s_values.contains(&psi_inverse.s) {
                s_values.push(psi_inverse.s);
                s_values.sort_by(f64::total_cmp);
            }
            let table = estimate_holder_distance(&local, k, &s_values)?;
            let d_star = table.value_at(psi_inverse.s);
            let eta = if d_star > 0.0 {
                delta.powf(t) / d_star
            } else {
                f64::INFINITY
            };
            let params = BoundParameters {
                delta,
                alpha: choice.alpha,
                k,
                p: cfg.p,
                c: cfg.c,
            };
            Ok(ApproxCell {
                delta,
                replication: rep,
                alpha: choice.alpha,
                condition_holds: choice.condition_holds,
                converged: report.converged,
                bregman,
                residual,
                psi_inverse,
                eta,
                lemma: lemma31_bound_check(&params, &exp.level_set, bregman, &table),
                s_values,
                d_values: table.values,
            })
        })
        .collect()
}
