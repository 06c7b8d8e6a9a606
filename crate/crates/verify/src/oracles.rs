//! Reference computations written without the library's numerics.
//!
//! Each oracle solves its problem the slow, obvious way: a space–time PDE
//! solve, brute-force scalar and grid minimization, and closed forms.

/// Integral observation `f(t) = ∫₀¹ u(x, t) dx` of
/// `u_t − u_xx + g(t)u = 0` on `(0, 1)` with homogeneous Neumann conditions.
///
/// Crank–Nicolson in time with `substeps` steps per interval of `t_grid`,
/// second-order differences in space with ghost points, `g` linear between
/// the nodes of `t_grid`, and the trapezoid rule for the space integral.
pub fn crank_nicolson_observation(
    t_grid: &[f64],
    g: &[f64],
    u0: impl Fn(f64) -> f64,
    nx: usize,
    substeps: usize,
) -> Vec<f64> {
    assert!(nx >= 3 && substeps >= 1 && t_grid.len() == g.len());
    let hx = 1.0 / (nx - 1) as f64;
    let mut u: Vec<f64> = (0..nx).map(|i| u0(i as f64 * hx)).collect();
    let integral = |u: &[f64]| hx * (u.iter().sum::<f64>() - 0.5 * (u[0] + u[nx - 1]));
    let mut out = vec![integral(&u)];
    let mut rhs = vec![0.0; nx];
    for i in 1..t_grid.len() {
        let dt = (t_grid[i] - t_grid[i - 1]) / substeps as f64;
        for m in 0..substeps {
            let w = (m as f64 + 0.5) / substeps as f64;
            let gm = g[i - 1] + w * (g[i] - g[i - 1]);
            let lam = dt / (hx * hx);
            // (I − dt/2·L)u⁺ = (I + dt/2·L)u with L = Δ_h − g.
            for j in 0..nx {
                let left = if j == 0 { u[1] } else { u[j - 1] };
                let right = if j == nx - 1 { u[nx - 2] } else { u[j + 1] };
                let lap = left - 2.0 * u[j] + right;
                rhs[j] = u[j] + 0.5 * lam * lap - 0.5 * dt * gm * u[j];
            }
            let diag = 1.0 + lam + 0.5 * dt * gm;
            let off = -0.5 * lam;
            // Ghost points double the inner neighbour in the first and last row.
            let mut lower = vec![off; nx];
            let mut upper = vec![off; nx];
            upper[0] = 2.0 * off;
            lower[nx - 1] = 2.0 * off;
            u = thomas(&lower, &vec![diag; nx], &upper, &rhs);
        }
        out.push(integral(&u));
    }
    out
}

/// Tridiagonal solve; `lower[0]` and `upper[n−1]` are ignored.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i < n - 1 { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// `argmin_x ½(x − z)² + step·r·|x|^q` by a grid scan at spacing `1e−4`
/// followed by bisection on the sign of the derivative in the bracketing cell.
pub fn scalar_prox_brute(z: f64, step: f64, r: f64, q: f64) -> f64 {
    let f = |x: f64| 0.5 * (x - z) * (x - z) + step * r * x.abs().powf(q);
    let df = |x: f64| x - z + step * r * q * x.abs().powf(q - 1.0) * x.signum();
    let (lo, hi) = if z >= 0.0 { (0.0, z) } else { (z, 0.0) };
    let h = 1e-4;
    let cells = ((hi - lo) / h).ceil().max(1.0) as usize;
    let mut best = (f(lo), 0usize);
    for i in 1..=cells {
        let x = (lo + i as f64 * h).min(hi);
        let v = f(x);
        if v < best.0 {
            best = (v, i);
        }
    }
    let centre = (lo + best.1 as f64 * h).min(hi);
    let (mut a, mut b) = ((centre - h).max(lo), (centre + h).min(hi));
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if df(m) > 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

/// Minimizer of `‖σ∘u − v‖² + (α/2)‖u‖²` for a diagonal operator.
pub fn diagonal_ridge(sigma: &[f64], v: &[f64], alpha: f64) -> Vec<f64> {
    sigma
        .iter()
        .zip(v)
        .map(|(s, v)| s * v / (s * s + alpha / 2.0))
        .collect()
}

/// Two-node reaction–diffusion instance on `[0, length]`, written out by hand:
/// `F(g) = (f0, f0·exp(−length·(g₀ + g₁)/2))`, trapezoid data norm,
/// penalty `½(g₀² + g₁²)`.
#[derive(Debug, Clone, Copy)]
pub struct TwoNodeProblem {
    pub length: f64,
    pub f0: f64,
    pub data: [f64; 2],
    pub alpha: f64,
}

impl TwoNodeProblem {
    pub fn objective(&self, g: [f64; 2]) -> f64 {
        let w = 0.5 * self.length;
        let r0 = self.f0 - self.data[0];
        let r1 = self.f0 * (-w * (g[0] + g[1])).exp() - self.data[1];
        w * (r0 * r0 + r1 * r1) + self.alpha * 0.5 * (g[0] * g[0] + g[1] * g[1])
    }

    pub fn gradient(&self, g: [f64; 2]) -> [f64; 2] {
        let w = 0.5 * self.length;
        let e = self.f0 * (-w * (g[0] + g[1])).exp();
        let common = w * 2.0 * (e - self.data[1]) * (-w * e);
        [common + self.alpha * g[0], common + self.alpha * g[1]]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GridMinimum {
    pub value: f64,
    pub at: [f64; 2],
    /// Upper bound on `grid minimum − box minimum`.
    pub slack: f64,
}

/// Minimum of `f` over an `m × m` grid on `[lo, hi]²`, with the slack
/// `max‖∇f‖·h·√2/2` (one percent margin) bounding the gap to the box minimum.
pub fn grid_minimum(
    f: impl Fn([f64; 2]) -> f64,
    grad: impl Fn([f64; 2]) -> [f64; 2],
    lo: f64,
    hi: f64,
    m: usize,
) -> GridMinimum {
    let h = (hi - lo) / (m - 1) as f64;
    let mut best = GridMinimum {
        value: f64::INFINITY,
        at: [lo, lo],
        slack: 0.0,
    };
    let mut lip: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            let x = [lo + i as f64 * h, lo + j as f64 * h];
            let v = f(x);
            if v < best.value {
                best.value = v;
                best.at = x;
            }
            let g = grad(x);
            lip = lip.max(g[0].hypot(g[1]));
        }
    }
    best.slack = lip * h * std::f64::consts::SQRT_2 / 2.0 * 1.01;
    best
}

/// Dense-grid distance function of a 2-dim diagonal problem with penalty
/// `½‖u‖²`: `D(s) = max (½‖u − u†‖² − s‖σ∘(u − u†)‖^k)` over grid points of
/// the level set `‖σ∘(u − u†)‖^p + α_max·½‖u‖² ≤ ρ₁`.
#[derive(Debug, Clone)]
pub struct DenseDistance {
    pub values: Vec<f64>,
    /// Maximizing grid point per multiplier.
    pub argmax: Vec<[f64; 2]>,
    pub points: Vec<[f64; 2]>,
    pub spacing: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn dense_distance(
    sigma: [f64; 2],
    truth: [f64; 2],
    alpha_max: f64,
    rho1: f64,
    p: f64,
    k: f64,
    s_grid: &[f64],
    lo: f64,
    hi: f64,
    m: usize,
) -> DenseDistance {
    let h = (hi - lo) / (m - 1) as f64;
    let mut points = Vec::new();
    for i in 0..m {
        for j in 0..m {
            let u = [lo + i as f64 * h, lo + j as f64 * h];
            let res = residual2(sigma, truth, u);
            let t = res.powf(p) + alpha_max * 0.5 * (u[0] * u[0] + u[1] * u[1]);
            if t <= rho1 {
                points.push(u);
            }
        }
    }
    let mut values = Vec::with_capacity(s_grid.len());
    let mut argmax = Vec::with_capacity(s_grid.len());
    for s in s_grid {
        // The truth itself always belongs to the set with value 0.
        let mut best = (0.0, truth);
        for u in &points {
            let v = phi(sigma, truth, *u, *s, k);
            if v > best.0 {
                best = (v, *u);
            }
        }
        values.push(best.0);
        argmax.push(best.1);
    }
    DenseDistance {
        values,
        argmax,
        points,
        spacing: h,
    }
}

pub fn residual2(sigma: [f64; 2], truth: [f64; 2], u: [f64; 2]) -> f64 {
    (sigma[0] * (u[0] - truth[0])).hypot(sigma[1] * (u[1] - truth[1]))
}

/// `½‖u − u†‖² − s‖σ∘(u − u†)‖^k`.
pub fn phi(sigma: [f64; 2], truth: [f64; 2], u: [f64; 2], s: f64, k: f64) -> f64 {
    let d0 = u[0] - truth[0];
    let d1 = u[1] - truth[1];
    0.5 * (d0 * d0 + d1 * d1) - s * residual2(sigma, truth, u).powf(k)
}

/// Upper bound on `|∇φ|` over the ball of radius `radius` around `u†` for
/// `k = 2`: `max_j |1 − 2sσ_j²| · radius`.
pub fn phi_lipschitz_k2(sigma: [f64; 2], s: f64, radius: f64) -> f64 {
    sigma
        .iter()
        .map(|sj| (1.0 - 2.0 * s * sj * sj).abs())
        .fold(0.0, f64::max)
        * radius
}
