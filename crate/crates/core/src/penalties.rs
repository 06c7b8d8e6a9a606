//! Convex stabilizing functionals: values, subgradients, Bregman distances and
//! proximal maps.
//!
//! Three variants are provided:
//!
//! * `SquaredNorm`: `½‖u − u₀‖²` in the weak norm,
//! * `PowerNorm`: `‖u − u₀‖^{p_r}` in the strong or weak norm,
//! * `Sparsity`: `Σ_j r_j |u_j|^q` with `q ∈ [1, 2]` and weights bounded below.
//!
//! Subgradients are coefficient arrays paired through the weak inner product.
//! For `q = 1` the selection at a zero coordinate is `0`.

use std::sync::Arc;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::spaces::{dual_pair, Element, NormKind, SpaceDescriptor};

/// Tolerance and iteration cap of the scalar prox solver (`1 < q < 2`).
pub const SCALAR_PROX_TOL: f64 = 1e-12;
pub const SCALAR_PROX_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub enum PenaltyVariant {
    SquaredNorm {
        center: Element,
    },
    PowerNorm {
        center: Element,
        exponent: f64,
        norm: NormKind,
    },
    Sparsity {
        weights: Vec<f64>,
        exponent: f64,
        floor: f64,
    },
}

/// Name used in experiment configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyName {
    SquaredNorm,
    PowerNorm,
    Sparsity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Penalty {
    variant: PenaltyVariant,
    space: Arc<SpaceDescriptor>,
}

/// A subgradient `ζ ∈ ∂R(at)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientSelection {
    pub zeta: Element,
    pub at: Element,
}

impl Penalty {
    pub fn squared_norm(center: Element) -> Self {
        let space = center.space().clone();
        Self {
            variant: PenaltyVariant::SquaredNorm { center },
            space,
        }
    }

    pub fn power_norm(center: Element, exponent: f64, norm: NormKind) -> Result<Self> {
        if !(exponent.is_finite() && exponent >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "power-norm exponent must be >= 1, got {exponent}"
            )));
        }
        if norm == NormKind::Data {
            return Err(Error::InvalidParameter(
                "power-norm penalty uses the strong or weak norm".into(),
            ));
        }
        let space = center.space().clone();
        Ok(Self {
            variant: PenaltyVariant::PowerNorm {
                center,
                exponent,
                norm,
            },
            space,
        })
    }

    /// Weighted `ℓ^q` penalty; every weight must be at least `floor > 0`.
    pub fn sparsity(
        space: Arc<SpaceDescriptor>,
        weights: Vec<f64>,
        exponent: f64,
        floor: f64,
    ) -> Result<Self> {
        ensure_dim(space.dimension(), weights.len())?;
        if !(1.0..=2.0).contains(&exponent) {
            return Err(Error::InvalidParameter(format!(
                "sparsity exponent must lie in [1, 2], got {exponent}"
            )));
        }
        if !(floor.is_finite() && floor > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sparsity weight floor must be positive, got {floor}"
            )));
        }
        if let Some(r) = weights.iter().find(|r| !(r.is_finite() && **r >= floor)) {
            return Err(Error::InvalidParameter(format!(
                "sparsity weight {r} is below the floor {floor}"
            )));
        }
        Ok(Self {
            variant: PenaltyVariant::Sparsity {
                weights,
                exponent,
                floor,
            },
            space,
        })
    }

    pub fn variant(&self) -> &PenaltyVariant {
        &self.variant
    }

    pub fn name(&self) -> PenaltyName {
        match self.variant {
            PenaltyVariant::SquaredNorm { .. } => PenaltyName::SquaredNorm,
            PenaltyVariant::PowerNorm { .. } => PenaltyName::PowerNorm,
            PenaltyVariant::Sparsity { .. } => PenaltyName::Sparsity,
        }
    }

    pub fn space(&self) -> &Arc<SpaceDescriptor> {
        &self.space
    }

    fn check(&self, u: &Element) -> Result<()> {
        ensure_dim(self.space.dimension(), u.len())
    }

    pub fn value(&self, u: &Element) -> Result<f64> {
        self.check(u)?;
        Ok(match &self.variant {
            PenaltyVariant::SquaredNorm { center } => {
                0.5 * (u - center).norm(NormKind::Weak).powi(2)
            }
            PenaltyVariant::PowerNorm {
                center,
                exponent,
                norm,
            } => (u - center).norm(*norm).powf(*exponent),
            PenaltyVariant::Sparsity {
                weights, exponent, ..
            } => u
                .coords()
                .iter()
                .zip(weights)
                .map(|(x, r)| r * x.abs().powf(*exponent))
                .sum(),
        })
    }

    pub fn subgradient(&self, u: &Element) -> Result<SubgradientSelection> {
        self.check(u)?;
        let zeta = match &self.variant {
            PenaltyVariant::SquaredNorm { center } => u - center,
            PenaltyVariant::PowerNorm {
                center,
                exponent,
                norm,
            } => {
                let y = u - center;
                let r = y.norm(*norm);
                if r == 0.0 {
                    Element::zeros(u.space().clone())
                } else {
                    let w = self.space.weights(*norm);
                    let scale = exponent * r.powf(exponent - 2.0);
                    let coords: Array1<f64> = y
                        .coords()
                        .iter()
                        .zip(&w)
                        .map(|(yj, wj)| scale * wj * yj)
                        .collect();
                    u.with_coords(coords)?
                }
            }
            PenaltyVariant::Sparsity {
                weights, exponent, ..
            } => {
                let coords: Array1<f64> = u
                    .coords()
                    .iter()
                    .zip(weights)
                    .map(|(x, r)| r * scalar_subgradient(*x, *exponent))
                    .collect();
                u.with_coords(coords)?
            }
        };
        Ok(SubgradientSelection {
            zeta,
            at: u.clone(),
        })
    }

    /// `D_ζ(u*, u) = R(u*) − R(u) − ⟨ζ, u* − u⟩` with `ζ ∈ ∂R(u)`.
    pub fn bregman(
        &self,
        u_star: &Element,
        u: &Element,
        selection: &SubgradientSelection,
    ) -> Result<f64> {
        self.check(u_star)?;
        self.check(u)?;
        if selection.at.coords() != u.coords() {
            return Err(Error::InvalidParameter(
                "subgradient selection was taken at a different point".into(),
            ));
        }
        let zeta = &selection.zeta;
        self.check(zeta)?;
        match &self.variant {
            PenaltyVariant::SquaredNorm { center } => {
                // ½‖u*−u‖² + ⟨(u−u₀) − ζ, u*−u⟩, free of cancellation.
                let diff = u_star - u;
                let defect = &(u - center) - zeta;
                Ok(0.5 * diff.norm(NormKind::Weak).powi(2) + dual_pair(&defect, &diff)?)
            }
            PenaltyVariant::PowerNorm { .. } => {
                let diff = u_star - u;
                Ok(self.value(u_star)? - self.value(u)? - dual_pair(zeta, &diff)?)
            }
            PenaltyVariant::Sparsity {
                weights, exponent, ..
            } => {
                // Coordinate-wise; exact zero whenever the sign pattern is respected.
                let q = *exponent;
                Ok(u_star
                    .coords()
                    .iter()
                    .zip(u.coords())
                    .zip(zeta.coords())
                    .zip(weights)
                    .map(|(((a, b), z), r)| {
                        (r * a.abs().powf(q) - z * a) - (r * b.abs().powf(q) - z * b)
                    })
                    .sum())
            }
        }
    }

    /// `argmin_{s ∈ [lo, hi]} R(u + s·dir)`.
    pub fn line_minimizer(&self, u: &Element, dir: &Element, lo: f64, hi: f64) -> Result<f64> {
        self.check(u)?;
        self.check(dir)?;
        if !(lo <= hi) {
            return Err(Error::InvalidParameter(format!(
                "empty search interval [{lo}, {hi}]"
            )));
        }
        let s = match &self.variant {
            PenaltyVariant::SquaredNorm { center } => {
                weighted_line_min(u, dir, center, &self.space.weights(NormKind::Weak))
            }
            PenaltyVariant::PowerNorm { center, norm, .. } => {
                weighted_line_min(u, dir, center, &self.space.weights(*norm))
            }
            PenaltyVariant::Sparsity { .. } => {
                // Convex and piecewise monotone beyond the outermost kink.
                let kinks = u
                    .as_slice()
                    .iter()
                    .zip(dir.as_slice())
                    .filter(|(_, d)| **d != 0.0)
                    .map(|(x, d)| -x / d);
                let (a, b) = kinks.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), k| {
                    (a.min(k), b.max(k))
                });
                if a > b {
                    0.0
                } else {
                    let (a, b) = (a.max(lo), b.min(hi));
                    if a >= b {
                        a.min(hi).max(lo)
                    } else {
                        golden_section(|s| self.value(&u.axpy(s, dir)?), a, b)?
                    }
                }
            }
        };
        Ok(s.clamp(lo, hi))
    }

    /// `argmin_x ½‖x − z‖²_weak + step·R(x)`.
    pub fn prox(&self, z: &Element, step: f64) -> Result<Element> {
        self.check(z)?;
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "prox step must be positive, got {step}"
            )));
        }
        match &self.variant {
            PenaltyVariant::SquaredNorm { center } => {
                let coords = (z.coords() + &(step * center.coords())) / (1.0 + step);
                z.with_coords(coords)
            }
            PenaltyVariant::PowerNorm {
                center,
                exponent,
                norm,
            } => {
                let w = self.space.weights(*norm);
                power_norm_prox(z, center, &w, *exponent, step)
            }
            PenaltyVariant::Sparsity {
                weights, exponent, ..
            } => {
                let coords = z
                    .coords()
                    .iter()
                    .zip(weights)
                    .map(|(zj, r)| scalar_prox(*zj, step * r, *exponent))
                    .collect::<Result<Array1<f64>>>()?;
                z.with_coords(coords)
            }
        }
    }
}

fn weighted_line_min(u: &Element, dir: &Element, center: &Element, w: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (((x, d), c), wj) in u
        .as_slice()
        .iter()
        .zip(dir.as_slice())
        .zip(center.as_slice())
        .zip(w)
    {
        num += wj * (x - c) * d;
        den += wj * d * d;
    }
    if den == 0.0 {
        0.0
    } else {
        -num / den
    }
}

fn golden_section(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<f64> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..200 {
        if b - a <= 1e-15 * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// `q·Sg(x)|x|^{q−1}` with the selection `Sg(0) = 0`.
fn scalar_subgradient(x: f64, q: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        q * x.signum() * x.abs().powf(q - 1.0)
    }
}

/// Minimizer of `½(x − z)² + weight·|x|^q` for `q ∈ [1, 2]`.
pub fn scalar_prox(z: f64, weight: f64, q: f64) -> Result<f64> {
    if z == 0.0 || weight == 0.0 {
        return Ok(z);
    }
    if q == 1.0 {
        return Ok(z.signum() * (z.abs() - weight).max(0.0));
    }
    if q == 2.0 {
        return Ok(z / (1.0 + 2.0 * weight));
    }
    let a = z.abs();
    let c = weight * q;
    // h is increasing on (0, a] with h(0+) = −a < 0 < h(a).
    let h = |x: f64| x - a + c * x.powf(q - 1.0);
    let dh = |x: f64| 1.0 + c * (q - 1.0) * x.powf(q - 2.0);
    let (mut lo, mut hi) = (0.0_f64, a);
    let mut x = a / (1.0 + c * a.powf(q - 2.0));
    for _ in 0..SCALAR_PROX_MAX_ITER {
        let hx = h(x);
        if hx == 0.0 {
            return Ok(z.signum() * x);
        }
        if hx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - hx / dh(x);
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= SCALAR_PROX_TOL * a || hi - lo <= SCALAR_PROX_TOL * a {
            return Ok(z.signum() * next);
        }
        x = next;
    }
    Err(Error::NotConverged {
        what: "scalar prox",
        iterations: SCALAR_PROX_MAX_ITER,
    })
}

/// Prox of `step·‖x − u₀‖_W^p` for diagonal weights `W`.
///
/// Writing `ρ = ‖x − u₀‖_W` and `d = z − u₀`, optimality reduces to
/// `Σ_j w_j d_j² / (ρ + τ p ρ^{p−1} w_j)² = 1`, strictly decreasing in `ρ`.
fn power_norm_prox(
    z: &Element,
    center: &Element,
    weights: &[f64],
    p: f64,
    step: f64,
) -> Result<Element> {
    let d = z - center;
    let d_norm: f64 = d
        .coords()
        .iter()
        .zip(weights)
        .map(|(x, w)| w * x * x)
        .sum::<f64>()
        .sqrt();
    if d_norm == 0.0 {
        return Ok(center.clone());
    }
    let tp = step * p;
    let phi = |rho: f64| -> f64 {
        d.coords()
            .iter()
            .zip(weights)
            .map(|(x, w)| {
                let den = rho + tp * rho.powf(p - 1.0) * w;
                w * x * x / (den * den)
            })
            .sum::<f64>()
            - 1.0
    };
    if p == 1.0 {
        let at_zero: f64 = d
            .coords()
            .iter()
            .zip(weights)
            .map(|(x, w)| x * x / (step * step * w))
            .sum();
        if at_zero <= 1.0 {
            return Ok(center.clone());
        }
    }
    let (mut lo, mut hi) = (0.0, d_norm);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * d_norm {
            break;
        }
    }
    let rho = 0.5 * (lo + hi);
    let shrink = tp * rho.powf(p - 2.0);
    let coords: Array1<f64> = d
        .coords()
        .iter()
        .zip(weights)
        .zip(center.coords())
        .map(|((x, w), c)| c + x / (1.0 + shrink * w))
        .collect();
    z.with_coords(coords)
}
