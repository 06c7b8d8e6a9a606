//! Discretized forward operators with directional derivatives and adjoints.
//!
//! Adjoints are taken with respect to the data inner product on the codomain
//! and the weak inner product on the domain, so that
//! `⟨F′(u)h, w⟩_data = ⟨h, F′(u)*w⟩_weak`.

use std::fmt;
use std::sync::Arc;

use ndarray::Array1;

use crate::error::{ensure_dim, Error, Result};
use crate::spaces::{Element, SpaceDescriptor, SpaceKind};

pub trait ForwardOperator: Send + Sync + fmt::Debug {
    fn domain(&self) -> &Arc<SpaceDescriptor>;

    fn codomain(&self) -> &Arc<SpaceDescriptor>;

    fn apply(&self, u: &Element) -> Result<Element>;

    fn derivative(&self, u: &Element, h: &Element) -> Result<Element>;

    fn adjoint(&self, u: &Element, w: &Element) -> Result<Element>;

    /// Nearest point of the domain. Identity for unconstrained operators.
    fn project(&self, u: &Element) -> Element {
        u.clone()
    }

    fn in_domain(&self, _u: &Element) -> bool {
        true
    }

    /// Directions `z` with `F(u + s·z) = F(u)` for all admissible `s`.
    fn invariant_directions(&self) -> Vec<Element> {
        Vec::new()
    }

    /// Range of `s` keeping `u + s·dir` inside the domain.
    fn feasible_interval(&self, _u: &Element, _dir: &Element) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

/// Integral observation map of the reaction–diffusion identification problem.
///
/// Integrating `u_t − u_xx + g(t)u = 0` over a Neumann domain removes the
/// Laplacian, so the observed mass obeys `f′ = −g f` and
/// `F(g)(t) = f0·exp(−∫_0^t g)`. The running integral uses the trapezoid rule.
#[derive(Debug, Clone)]
pub struct ReactionDiffusionMap {
    space: Arc<SpaceDescriptor>,
    data_space: Arc<SpaceDescriptor>,
    f0: f64,
}

impl ReactionDiffusionMap {
    /// Uniform grid with `n` nodes on `[0, length]`; `theta` selects the
    /// strong-norm weight profile of the parameter space.
    pub fn new(n: usize, length: f64, f0: f64, theta: Option<f64>) -> Result<Self> {
        if !(f0.is_finite() && f0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "initial mass f0 must be positive, got {f0}"
            )));
        }
        let space = Arc::new(SpaceDescriptor::uniform(
            SpaceKind::Parameter,
            n,
            length,
            theta,
        )?);
        let data_space = Arc::new(SpaceDescriptor::uniform(SpaceKind::Data, n, length, None)?);
        Ok(Self {
            space,
            data_space,
            f0,
        })
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    /// Running trapezoid integral `(Ag)_i = ∫_0^{t_i} g`.
    pub fn running_integral(&self, g: &[f64]) -> Vec<f64> {
        let h = self.space.step();
        let mut out = Vec::with_capacity(g.len());
        let mut acc = 0.0;
        out.push(0.0);
        for w in g.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            out.push(acc);
        }
        out
    }

    /// Transpose of the running integral: `(Aᵀy)_j = Σ_i A_ij y_i`.
    fn running_integral_transpose(&self, y: &[f64]) -> Vec<f64> {
        let h = self.space.step();
        let n = y.len();
        let mut out = vec![0.0; n];
        let mut tail = 0.0; // Σ_{i>j} y_i
        for j in (0..n).rev() {
            out[j] = if j == 0 {
                0.5 * h * tail
            } else {
                0.5 * h * y[j] + h * tail
            };
            tail += y[j];
        }
        out
    }

    /// The alternating vector `(1, −1, 1, …)` spans the kernel of the
    /// trapezoid running integral, hence `F(g + s·z) = F(g)`.
    pub fn null_direction(&self) -> Element {
        let coords: Array1<f64> = (0..self.space.dimension())
            .map(|j| if j % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        Element::zeros(self.space.clone()).with_coords_unchecked(coords)
    }

    fn check_domain(&self, g: &Element) -> Result<()> {
        ensure_dim(self.space.dimension(), g.len())?;
        if let Some((j, x)) = g.as_slice().iter().enumerate().find(|(_, x)| **x < 0.0) {
            return Err(Error::Domain(format!(
                "potential must be nonnegative, g[{j}] = {x}"
            )));
        }
        Ok(())
    }
}

impl ForwardOperator for ReactionDiffusionMap {
    fn domain(&self) -> &Arc<SpaceDescriptor> {
        &self.space
    }

    fn codomain(&self) -> &Arc<SpaceDescriptor> {
        &self.data_space
    }

    fn apply(&self, g: &Element) -> Result<Element> {
        self.check_domain(g)?;
        let integral = self.running_integral(g.as_slice());
        let coords: Array1<f64> = integral.iter().map(|a| self.f0 * (-a).exp()).collect();
        Element::new(self.data_space.clone(), coords)
    }

    fn derivative(&self, g: &Element, h: &Element) -> Result<Element> {
        ensure_dim(self.space.dimension(), h.len())?;
        let fg = self.apply(g)?;
        let ih = self.running_integral(h.as_slice());
        let coords: Array1<f64> = fg
            .as_slice()
            .iter()
            .zip(&ih)
            .map(|(f, a)| -f * a)
            .collect();
        Element::new(self.data_space.clone(), coords)
    }

    fn adjoint(&self, g: &Element, w: &Element) -> Result<Element> {
        ensure_dim(self.data_space.dimension(), w.len())?;
        let fg = self.apply(g)?;
        let y: Vec<f64> = fg
            .as_slice()
            .iter()
            .zip(w.as_slice())
            .zip(self.data_space.quadrature_weights())
            .map(|((f, w), q)| -q * f * w)
            .collect();
        Element::new(self.space.clone(), self.running_integral_transpose(&y))
    }

    fn project(&self, g: &Element) -> Element {
        g.map(|x| x.max(0.0))
    }

    fn in_domain(&self, g: &Element) -> bool {
        g.as_slice().iter().all(|x| *x >= 0.0)
    }

    fn invariant_directions(&self) -> Vec<Element> {
        vec![self.null_direction()]
    }

    fn feasible_interval(&self, g: &Element, dir: &Element) -> (f64, f64) {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (x, d) in g.as_slice().iter().zip(dir.as_slice()) {
            if *d > 0.0 {
                lo = lo.max(-x / d);
            } else if *d < 0.0 {
                hi = hi.min(-x / d);
            }
        }
        (lo, hi)
    }
}

/// Linear diagonal operator `(Fu)_j = σ_j u_j` on a sequence space.
#[derive(Debug, Clone)]
pub struct DiagonalMap {
    space: Arc<SpaceDescriptor>,
    sigma: Vec<f64>,
}

impl DiagonalMap {
    pub fn new(sigma: Vec<f64>) -> Result<Self> {
        if let Some(s) = sigma.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "singular values must be positive, got {s}"
            )));
        }
        let space = Arc::new(SpaceDescriptor::sequence(sigma.len())?);
        Ok(Self { space, sigma })
    }

    /// `σ_j = j^{−a}` for `j = 1..=n`.
    pub fn power_decay(n: usize, a: f64) -> Result<Self> {
        Self::new((1..=n).map(|j| (j as f64).powf(-a)).collect())
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    fn scaled(&self, x: &Element) -> Result<Element> {
        ensure_dim(self.sigma.len(), x.len())?;
        let coords: Array1<f64> = x
            .as_slice()
            .iter()
            .zip(&self.sigma)
            .map(|(v, s)| s * v)
            .collect();
        Element::new(self.space.clone(), coords)
    }
}

impl ForwardOperator for DiagonalMap {
    fn domain(&self) -> &Arc<SpaceDescriptor> {
        &self.space
    }

    fn codomain(&self) -> &Arc<SpaceDescriptor> {
        &self.space
    }

    fn apply(&self, u: &Element) -> Result<Element> {
        self.scaled(u)
    }

    fn derivative(&self, u: &Element, h: &Element) -> Result<Element> {
        ensure_dim(self.sigma.len(), u.len())?;
        self.scaled(h)
    }

    fn adjoint(&self, u: &Element, w: &Element) -> Result<Element> {
        ensure_dim(self.sigma.len(), u.len())?;
        self.scaled(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::NormKind;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn smooth_potential(rng: &mut ChaCha8Rng, space: &Arc<SpaceDescriptor>) -> Element {
        let (a, b, c) = (
            rng.random_range(0.2..2.0),
            rng.random_range(-0.5..0.5),
            rng.random_range(1.0..4.0),
        );
        let s = space.length();
        Element::from_fn(space.clone(), |t| a + b * (c * t / s).sin() + 0.5 * b.abs()).unwrap()
    }

    fn random_element(rng: &mut ChaCha8Rng, space: &Arc<SpaceDescriptor>) -> Element {
        let c: Vec<f64> = (0..space.dimension())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        Element::new(space.clone(), c).unwrap()
    }

    #[test]
    fn zero_potential_keeps_mass() {
        let f = ReactionDiffusionMap::new(11, 2.0, 3.0, None).unwrap();
        let out = f.apply(&Element::zeros(f.domain().clone())).unwrap();
        assert!(out.as_slice().iter().all(|x| *x == 3.0));
    }

    #[test]
    fn unit_potential_decays_exponentially() {
        let f = ReactionDiffusionMap::new(401, 1.0, 1.0, None).unwrap();
        let g = Element::constant(f.domain().clone(), 1.0).unwrap();
        let out = f.apply(&g).unwrap();
        for (t, y) in f.codomain().grid().iter().zip(out.as_slice()) {
            assert!((y - (-t).exp()).abs() <= 1e-4);
        }
    }

    #[test]
    fn negative_potential_rejected() {
        let f = ReactionDiffusionMap::new(3, 1.0, 1.0, None).unwrap();
        let g = Element::new(f.domain().clone(), vec![0.0, -0.1, 1.0]).unwrap();
        assert!(matches!(f.apply(&g), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_direction_has_zero_derivative() {
        let f = ReactionDiffusionMap::new(9, 1.0, 1.0, Some(0.9)).unwrap();
        let g = Element::constant(f.domain().clone(), 0.5).unwrap();
        let d = f.derivative(&g, &Element::zeros(f.domain().clone())).unwrap();
        assert!(d.as_slice().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn finite_difference_derivative() {
        let f = ReactionDiffusionMap::new(41, 1.0, 1.0, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let g = smooth_potential(&mut rng, f.domain());
            let h = random_element(&mut rng, f.domain());
            let eps = 1e-6;
            let fd = (&f.apply(&g.axpy(eps, &h).unwrap()).unwrap() - &f.apply(&g).unwrap())
                .scale(1.0 / eps);
            let lin = f.derivative(&g, &h).unwrap();
            let rel = (&fd - &lin).norm(NormKind::Data) / lin.norm(NormKind::Data);
            assert!(rel < 1e-5, "relative error {rel}");
        }
    }

    #[test]
    fn adjoint_identity() {
        let f = ReactionDiffusionMap::new(17, 2.0, 1.5, Some(0.9)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let g = smooth_potential(&mut rng, f.domain());
            let h = random_element(&mut rng, f.domain());
            let w = random_element(&mut rng, f.codomain());
            let lhs = f.derivative(&g, &h).unwrap().inner(&w, NormKind::Data).unwrap();
            let rhs = h.inner(&f.adjoint(&g, &w).unwrap(), NormKind::Weak).unwrap();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn alternating_vector_is_invisible() {
        let f = ReactionDiffusionMap::new(8, 1.0, 10.0, None).unwrap();
        let g = Element::constant(f.domain().clone(), 1.0).unwrap();
        let shifted = g.axpy(0.3, &f.null_direction()).unwrap();
        let a = f.apply(&g).unwrap();
        let b = f.apply(&shifted).unwrap();
        assert!((&a - &b).norm(NormKind::Data) < 1e-14);
    }

    #[test]
    fn feasible_interval_keeps_potential_nonnegative() {
        let f = ReactionDiffusionMap::new(4, 1.0, 1.0, None).unwrap();
        let g = Element::new(f.domain().clone(), vec![1.0, 2.0, 0.5, 3.0]).unwrap();
        let z = f.null_direction();
        let (lo, hi) = f.feasible_interval(&g, &z);
        assert_eq!((lo, hi), (-0.5, 2.0));
        assert!(f.in_domain(&g.axpy(lo, &z).unwrap()));
        assert!(f.in_domain(&g.axpy(hi, &z).unwrap()));
    }

    #[test]
    fn projection_clips() {
        let f = ReactionDiffusionMap::new(2, 1.0, 1.0, None).unwrap();
        let g = Element::new(f.domain().clone(), vec![-1.0, 2.0]).unwrap();
        let p = f.project(&g);
        assert_eq!(p.as_slice(), &[0.0, 2.0]);
        assert_eq!(f.project(&p), p);
        assert!(f.in_domain(&p) && !f.in_domain(&g));
    }

    #[test]
    fn diagonal_examples() {
        let d = DiagonalMap::new(vec![1.0, 0.5, 1.0 / 3.0]).unwrap();
        let ones = Element::constant(d.domain().clone(), 1.0).unwrap();
        assert_eq!(d.apply(&ones).unwrap().as_slice(), d.sigma());
        let zero = Element::zeros(d.domain().clone());
        assert!(d.apply(&zero).unwrap().as_slice().iter().all(|x| *x == 0.0));
        // Linear: the first-order Taylor remainder vanishes identically.
        let u = Element::new(d.domain().clone(), vec![0.3, -2.0, 5.0]).unwrap();
        let rem = &(&d.apply(&u).unwrap() - &d.apply(&ones).unwrap())
            - &d.derivative(&ones, &(&u - &ones)).unwrap();
        assert_eq!(rem.norm(NormKind::Weak), 0.0);
    }

    #[test]
    fn diagonal_rejects_nonpositive_sigma() {
        assert!(DiagonalMap::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn power_decay_profile() {
        let d = DiagonalMap::power_decay(4, 1.0).unwrap();
        assert_eq!(d.sigma(), &[1.0, 0.5, 1.0 / 3.0, 0.25]);
    }

    proptest! {
        #[test]
        fn monotone_in_potential(seed in 0u64..5_000) {
            let f = ReactionDiffusionMap::new(12, 1.0, 1.0, None).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lo: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..2.0)).collect();
            let hi: Vec<f64> = lo.iter().map(|x| x + rng.random_range(0.0..1.0)).collect();
            let a = f.apply(&Element::new(f.domain().clone(), hi).unwrap()).unwrap();
            let b = f.apply(&Element::new(f.domain().clone(), lo).unwrap()).unwrap();
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!(x <= y);
            }
        }

        #[test]
        fn outputs_positive_and_nonincreasing(seed in 0u64..5_000) {
            let f = ReactionDiffusionMap::new(15, 2.0, 1.0, None).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g: Vec<f64> = (0..15).map(|_| rng.random_range(0.0..3.0)).collect();
            let out = f.apply(&Element::new(f.domain().clone(), g).unwrap()).unwrap();
            prop_assert!(out.as_slice().iter().all(|x| *x > 0.0));
            prop_assert!(out.as_slice().windows(2).all(|w| w[1] <= w[0]));
        }

        #[test]
        fn lipschitz_on_domain(seed in 0u64..5_000) {
            let n = 10;
            let f = ReactionDiffusionMap::new(n, 1.0, 2.0, None).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g1: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
            let g2: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
            let e1 = Element::new(f.domain().clone(), g1).unwrap();
            let e2 = Element::new(f.domain().clone(), g2).unwrap();
            let lhs = (&f.apply(&e1).unwrap() - &f.apply(&e2).unwrap()).norm(NormKind::Data);
            // |e^{-a} − e^{-b}| ≤ |a − b| and |(AΔ)_i| ≤ h·√n·‖Δ‖.
            let s = f.domain();
            let lip = f.f0() * s.length().sqrt() * s.step() * (n as f64).sqrt();
            prop_assert!(lhs <= lip * (&e1 - &e2).norm(NormKind::Weak) * (1.0 + 1e-12));
        }

        #[test]
        fn projection_idempotent(seed in 0u64..5_000) {
            let f = ReactionDiffusionMap::new(6, 1.0, 1.0, None).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_element(&mut rng, f.domain());
            let p = f.project(&g);
            prop_assert_eq!(f.project(&p), p);
        }
    }
}
