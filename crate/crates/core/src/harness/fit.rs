//! Log–log least-squares rate fits.

use serde::{Deserialize, Serialize};

use super::config::MetricName;
use super::sweep::SweepTable;
use crate::error::{Error, Result};

pub const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
    /// Unflagged rows left out because the metric was not positive.
    pub excluded_zeros: usize,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

/// Median of the positive, unflagged metric values at each δ, in grid order.
/// Levels without such values are skipped.
pub fn median_by_delta(table: &SweepTable, metric: MetricName) -> Vec<(f64, f64)> {
    positive_medians(table, metric).0
}

fn positive_medians(table: &SweepTable, metric: MetricName) -> (Vec<(f64, f64)>, usize) {
    let mut deltas: Vec<f64> = Vec::new();
    for r in &table.rows {
        if !deltas.contains(&r.delta) {
            deltas.push(r.delta);
        }
    }
    let mut zeros = 0;
    let mut out = Vec::new();
    for d in deltas {
        let mut vals: Vec<f64> = Vec::new();
        for r in table.rows.iter().filter(|r| r.delta == d && !r.flagged()) {
            let v = r.value(metric);
            if v > 0.0 {
                vals.push(v);
            } else {
                zeros += 1;
            }
        }
        if !vals.is_empty() {
            out.push((d, median(&mut vals)));
        }
    }
    (out, zeros)
}

/// Least-squares line through `(log10 x, log10 y)`.
pub fn fit_points(points: &[(f64, f64)]) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.log10(), y.log10()))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "rate fit needs {MIN_FIT_POINTS} positive points, got {}",
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData(
            "rate fit needs distinct noise levels".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        n_points: pts.len(),
        excluded_zeros: 0,
    })
}

/// Fits `log10 median(metric)` against `log10 δ` over unflagged rows.
pub fn fit_rate(table: &SweepTable, metric: MetricName) -> Result<RateFit> {
    let (points, zeros) = positive_medians(table, metric);
    let mut fit = fit_points(&points)?;
    fit.excluded_zeros = zeros;
    Ok(fit)
}
