//! Finite-dimensional stand-ins for the parameter and data spaces.
//!
//! A [`SpaceDescriptor`] fixes a uniform grid on `[0, S]` together with three
//! diagonal weightings of the coordinates:
//!
//! * `strong`: `Σ w_j x_j²` with Sobolev-like weights `w_j ≥ 1`,
//! * `weak`: the plain Euclidean norm,
//! * `data`: the trapezoid-rule `L²(0, S)` norm.
//!
//! Since every `w_j ≥ 1`, the weak norm never exceeds the strong norm. The dual
//! pairing is identified with the weak inner product, so subgradients are plain
//! coefficient arrays.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Parameter,
    Data,
    Sequence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Strong,
    Weak,
    Data,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceDescriptor {
    grid: Vec<f64>,
    quadrature_weights: Vec<f64>,
    strong_weights: Vec<f64>,
    kind: SpaceKind,
}

impl SpaceDescriptor {
    /// Uniform grid with `n ≥ 2` nodes on `[0, length]` and trapezoid weights.
    ///
    /// `theta` selects the strong-norm profile `w_j = (1 + j²)^θ`; `None` gives
    /// unit weights, which makes the strong and weak norms coincide.
    pub fn uniform(kind: SpaceKind, n: usize, length: f64, theta: Option<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "a uniform grid needs at least 2 nodes, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "interval length must be positive, got {length}"
            )));
        }
        let h = length / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|j| j as f64 * h).collect();
        let mut quadrature_weights = vec![h; n];
        quadrature_weights[0] = 0.5 * h;
        quadrature_weights[n - 1] = 0.5 * h;
        let strong_weights = sobolev_profile(n, theta)?;
        Ok(Self {
            grid,
            quadrature_weights,
            strong_weights,
            kind,
        })
    }

    /// Coefficient space `ℝⁿ` indexed by `0..n` with unit quadrature weights.
    pub fn sequence(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "sequence space must be nonempty".into(),
            ));
        }
        Ok(Self {
            grid: (0..n).map(|j| j as f64).collect(),
            quadrature_weights: vec![1.0; n],
            strong_weights: vec![1.0; n],
            kind: SpaceKind::Sequence,
        })
    }

    /// Replaces the strong-norm weights. Every weight must be `≥ 1`.
    pub fn with_strong_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        ensure_dim(self.dimension(), weights.len())?;
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 1.0)) {
            return Err(Error::InvalidParameter(format!(
                "strong weights must be finite and >= 1, found {w}"
            )));
        }
        self.strong_weights = weights;
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn quadrature_weights(&self) -> &[f64] {
        &self.quadrature_weights
    }

    pub fn strong_weights(&self) -> &[f64] {
        &self.strong_weights
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    /// Right end of the interval (`n − 1` for sequence spaces).
    pub fn length(&self) -> f64 {
        *self.grid.last().expect("nonempty grid")
    }

    /// Grid spacing.
    pub fn step(&self) -> f64 {
        if self.grid.len() < 2 {
            1.0
        } else {
            self.grid[1] - self.grid[0]
        }
    }

    fn weight(&self, kind: NormKind, j: usize) -> f64 {
        match kind {
            NormKind::Strong => self.strong_weights[j],
            NormKind::Weak => 1.0,
            NormKind::Data => self.quadrature_weights[j],
        }
    }

    /// Diagonal weights of the selected norm.
    pub fn weights(&self, kind: NormKind) -> Vec<f64> {
        (0..self.dimension()).map(|j| self.weight(kind, j)).collect()
    }

    pub fn norm(&self, x: &Element, kind: NormKind) -> Result<f64> {
        Ok(self.inner(x, x, kind)?.max(0.0).sqrt())
    }

    pub fn inner(&self, x: &Element, y: &Element, kind: NormKind) -> Result<f64> {
        ensure_dim(self.dimension(), x.len())?;
        ensure_dim(self.dimension(), y.len())?;
        Ok(x
            .coords
            .iter()
            .zip(y.coords.iter())
            .enumerate()
            .map(|(j, (a, b))| self.weight(kind, j) * a * b)
            .sum())
    }
}

fn sobolev_profile(n: usize, theta: Option<f64>) -> Result<Vec<f64>> {
    match theta {
        None => Ok(vec![1.0; n]),
        Some(t) if t.is_finite() && t >= 0.0 => Ok((0..n)
            .map(|j| (1.0 + (j * j) as f64).powf(t))
            .collect()),
        Some(t) => Err(Error::InvalidParameter(format!(
            "Sobolev exponent must be nonnegative, got {t}"
        ))),
    }
}

/// A coefficient array tied to the space it lives in.
#[derive(Clone, PartialEq)]
pub struct Element {
    coords: Array1<f64>,
    space: Arc<SpaceDescriptor>,
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Element")
            .field("coords", &self.coords.as_slice().unwrap_or(&[]))
            .field("kind", &self.space.kind)
            .finish()
    }
}

impl Element {
    pub fn new(space: Arc<SpaceDescriptor>, coords: impl Into<Array1<f64>>) -> Result<Self> {
        let coords = coords.into();
        ensure_dim(space.dimension(), coords.len())?;
        if let Some(j) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("coordinate {j} is {}", coords[j])));
        }
        Ok(Self { coords, space })
    }

    pub fn zeros(space: Arc<SpaceDescriptor>) -> Self {
        let n = space.dimension();
        Self {
            coords: Array1::zeros(n),
            space,
        }
    }

    pub fn constant(space: Arc<SpaceDescriptor>, value: f64) -> Result<Self> {
        let n = space.dimension();
        Self::new(space, Array1::from_elem(n, value))
    }

    /// Samples `f` at the grid abscissae.
    pub fn from_fn(space: Arc<SpaceDescriptor>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let coords: Array1<f64> = space.grid().iter().map(|&t| f(t)).collect();
        Self::new(space, coords)
    }

    pub fn coords(&self) -> &Array1<f64> {
        &self.coords
    }

    pub fn as_slice(&self) -> &[f64] {
        self.coords.as_slice().expect("standard layout")
    }

    pub fn space(&self) -> &Arc<SpaceDescriptor> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Same space, new coefficients; `coords` must have the right length.
    pub fn with_coords(&self, coords: Array1<f64>) -> Result<Self> {
        Self::new(self.space.clone(), coords)
    }

    pub(crate) fn with_coords_unchecked(&self, coords: Array1<f64>) -> Self {
        debug_assert_eq!(coords.len(), self.len());
        Self {
            coords,
            space: self.space.clone(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        self.with_coords_unchecked(self.coords.mapv(f))
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        self.space
            .norm(self, kind)
            .expect("element matches its own space")
    }

    pub fn inner(&self, other: &Element, kind: NormKind) -> Result<f64> {
        self.space.inner(self, other, kind)
    }

    pub fn try_sub(&self, other: &Element) -> Result<Element> {
        ensure_dim(self.len(), other.len())?;
        Ok(self.with_coords_unchecked(&self.coords - &other.coords))
    }

    pub fn try_add(&self, other: &Element) -> Result<Element> {
        ensure_dim(self.len(), other.len())?;
        Ok(self.with_coords_unchecked(&self.coords + &other.coords))
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &Element) -> Result<Element> {
        ensure_dim(self.len(), other.len())?;
        Ok(self.with_coords_unchecked(&self.coords + &(a * &other.coords)))
    }

    pub fn scale(&self, a: f64) -> Element {
        self.with_coords_unchecked(a * &self.coords)
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }
}

impl Sub for &Element {
    type Output = Element;

    /// Panics on dimension mismatch; use [`Element::try_sub`] to get an error instead.
    fn sub(self, rhs: &Element) -> Element {
        self.try_sub(rhs).expect("dimension mismatch in subtraction")
    }
}

impl Add for &Element {
    type Output = Element;

    fn add(self, rhs: &Element) -> Element {
        self.try_add(rhs).expect("dimension mismatch in addition")
    }
}

impl Mul<&Element> for f64 {
    type Output = Element;

    fn mul(self, rhs: &Element) -> Element {
        rhs.scale(self)
    }
}

/// Free-function form of [`SpaceDescriptor::norm`].
pub fn norm(space: &SpaceDescriptor, x: &Element, kind: NormKind) -> Result<f64> {
    space.norm(x, kind)
}

/// Free-function form of [`SpaceDescriptor::inner`].
pub fn inner(space: &SpaceDescriptor, x: &Element, y: &Element, kind: NormKind) -> Result<f64> {
    space.inner(x, y, kind)
}

/// `⟨ζ, x⟩`, the dual pairing realized as the weak inner product.
pub fn dual_pair(zeta: &Element, x: &Element) -> Result<f64> {
    ensure_dim(zeta.len(), x.len())?;
    Ok(zeta.coords.dot(&x.coords))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_space(n: usize) -> Arc<SpaceDescriptor> {
        Arc::new(SpaceDescriptor::uniform(SpaceKind::Parameter, n, 1.0, Some(0.9)).unwrap())
    }

    #[test]
    fn trapezoid_weights_sum_to_length() {
        for n in [2, 3, 17, 401] {
            for length in [1.0, 2.5, 7.0] {
                let s = SpaceDescriptor::uniform(SpaceKind::Data, n, length, None).unwrap();
                let total: f64 = s.quadrature_weights().iter().sum();
                assert!((total - length).abs() < 1e-12, "n={n} S={length} sum={total}");
            }
        }
    }

    #[test]
    fn zero_has_zero_norm() {
        let s = unit_space(5);
        let z = Element::zeros(s.clone());
        for kind in [NormKind::Strong, NormKind::Weak, NormKind::Data] {
            assert_eq!(s.norm(&z, kind).unwrap(), 0.0);
        }
    }

    #[test]
    fn data_norm_of_constant_one_is_one() {
        let s = Arc::new(SpaceDescriptor::uniform(SpaceKind::Data, 101, 1.0, None).unwrap());
        let one = Element::constant(s.clone(), 1.0).unwrap();
        assert!((one.norm(NormKind::Data) - 1.0).abs() < 1e-14);
        assert!((one.inner(&one, NormKind::Data).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn weighted_unit_vector() {
        let s = Arc::new(
            SpaceDescriptor::sequence(3)
                .unwrap()
                .with_strong_weights(vec![1.0, 4.0, 1.0])
                .unwrap(),
        );
        let e = Element::new(s, vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(e.norm(NormKind::Strong), 2.0);
        assert_eq!(e.norm(NormKind::Weak), 1.0);
    }

    #[test]
    fn orthogonal_unit_vectors() {
        let s = Arc::new(SpaceDescriptor::sequence(2).unwrap());
        let e1 = Element::new(s.clone(), vec![1.0, 0.0]).unwrap();
        let e2 = Element::new(s, vec![0.0, 1.0]).unwrap();
        assert_eq!(e1.inner(&e2, NormKind::Weak).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = Element::zeros(unit_space(3));
        let b = Element::zeros(unit_space(4));
        assert!(matches!(
            a.inner(&b, NormKind::Weak),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(dual_pair(&a, &b).is_err());
        assert!(Element::new(unit_space(3), vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn rejects_non_finite_coordinates() {
        assert!(matches!(
            Element::new(unit_space(2), vec![1.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn strong_weights_below_one_rejected() {
        let s = SpaceDescriptor::sequence(2).unwrap();
        assert!(s.with_strong_weights(vec![1.0, 0.5]).is_err());
    }

    #[test]
    fn pairing_with_quadratic_gradient() {
        // The weak gradient of ½‖u‖² is u itself.
        let s = unit_space(6);
        let u = Element::from_fn(s, |t| 1.0 + t * t).unwrap();
        let lhs = dual_pair(&u, &u).unwrap();
        let rhs = u.norm(NormKind::Weak).powi(2);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    fn element_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0f64..10.0, n)
    }

    proptest! {
        #[test]
        fn inner_matches_norm_squared(x in element_strategy(7)) {
            let s = unit_space(7);
            let e = Element::new(s.clone(), x).unwrap();
            for kind in [NormKind::Strong, NormKind::Weak, NormKind::Data] {
                let n = e.norm(kind);
                let ip = e.inner(&e, kind).unwrap();
                prop_assert!((n * n - ip).abs() <= 1e-12 * ip.max(1.0));
            }
        }

        #[test]
        fn weak_never_exceeds_strong(x in element_strategy(9)) {
            let e = Element::new(unit_space(9), x).unwrap();
            prop_assert!(e.norm(NormKind::Weak) <= e.norm(NormKind::Strong) * (1.0 + 1e-15));
        }

        #[test]
        fn cauchy_schwarz(x in element_strategy(6), y in element_strategy(6)) {
            let s = unit_space(6);
            let a = Element::new(s.clone(), x).unwrap();
            let b = Element::new(s, y).unwrap();
            for kind in [NormKind::Strong, NormKind::Weak, NormKind::Data] {
                let lhs = a.inner(&b, kind).unwrap().abs();
                prop_assert!(lhs <= a.norm(kind) * b.norm(kind) * (1.0 + 1e-12) + 1e-12);
            }
        }

        #[test]
        fn pairing_is_additive(z in element_strategy(5), x in element_strategy(5), y in element_strategy(5)) {
            let s = unit_space(5);
            let z = Element::new(s.clone(), z).unwrap();
            let x = Element::new(s.clone(), x).unwrap();
            let y = Element::new(s, y).unwrap();
            let lhs = dual_pair(&z, &(&x + &y)).unwrap();
            let rhs = dual_pair(&z, &x).unwrap() + dual_pair(&z, &y).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn power_triangle_inequality(x in element_strategy(4), y in element_strategy(4), pi in 0usize..4) {
            let p = [1.0, 1.5, 2.0, 3.0][pi];
            let s = unit_space(4);
            let a = Element::new(s.clone(), x).unwrap();
            let b = Element::new(s, y).unwrap();
            for kind in [NormKind::Strong, NormKind::Weak, NormKind::Data] {
                let lhs = (&a + &b).norm(kind).powf(p);
                let rhs = 2f64.powf(p - 1.0) * (a.norm(kind).powf(p) + b.norm(kind).powf(p));
                prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
            }
        }
    }
}
