//! Crank–Nicolson solver for the coupled reduced system
//!
//! ```text
//! ∂_τ U_i = ½σ_i² ∂_zz U_i − (r_i + ½σ_i²) ∂_z U_i + λ_i (U_j − U_i),   z ∈ [0, z_max],
//! U_i(0, z) = e^z − 1,   ∂_z U_i(τ, 0) = 0,
//! ```
//!
//! on a uniform `(τ, z)` grid. Both regimes are advanced together: every time step is a
//! block-tridiagonal system with 2×2 blocks, solved exactly by block Thomas elimination,
//! so the coupling is fully implicit. The first two steps are replaced by four
//! backward-Euler half steps (Rannacher start) to damp the mismatch between the terminal
//! slope and the reflecting boundary at `z = 0`.
//!
//! At `z_max` the maximum is effectively frozen, so `U_i = e^z P_i(τ) − 1` with
//! `P_i(τ) = E_i[e^{−∫r}]` the regime-switching bond price.

use crate::error::{Error, Result};
use crate::ham::domain_z_max;
use crate::model::{reduce, LookbackQuery, Regime, ValidatedModel};

type Mat2 = [[f64; 2]; 2];
type Vec2 = [f64; 2];

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn mat_vec(a: &Mat2, v: &Vec2) -> Vec2 {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

fn inverse(a: &Mat2) -> Result<Mat2> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det == 0.0 || !det.is_finite() {
        return Err(Error::NumericalFailure("singular block in finite-difference solve".into()));
    }
    Ok([
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ])
}

/// `P_i(τ) = E_i[exp(−∫₀^τ r_{X_u} du)]` for both starting regimes.
pub fn regime_bond_prices(model: &ValidatedModel, tau: f64) -> [f64; 2] {
    let p1 = model.params(Regime::One);
    let p2 = model.params(Regime::Two);
    let (l12, l21) = (model.exit_intensity(Regime::One), model.exit_intensity(Regime::Two));
    let q = [[-p1.r - l12, l12], [l21, -p2.r - l21]];
    // exp(Qτ) = e^{mτ} [cosh(dτ) I + sinh(dτ)/d (Q − m I)]
    let m = 0.5 * (q[0][0] + q[1][1]);
    let half_gap = 0.5 * (q[0][0] - q[1][1]);
    let d = (half_gap * half_gap + l12 * l21).sqrt();
    let ch = (d * tau).cosh();
    let sh_over_d = if d * tau < 1e-8 { tau } else { (d * tau).sinh() / d };
    let growth = (m * tau).exp();
    // row sums of (Q − m I): ±half_gap plus the off-diagonal intensity
    let row_sum = [half_gap + l12, -half_gap + l21];
    [
        growth * (ch + sh_over_d * row_sum[0]),
        growth * (ch + sh_over_d * row_sum[1]),
    ]
}

/// Full space-time solution of both regimes.
#[derive(Debug, Clone, PartialEq)]
pub struct FdGrid {
    pub tau_nodes: Vec<f64>,
    pub z_nodes: Vec<f64>,
    /// Row-major `tau_nodes.len() × z_nodes.len()`.
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl FdGrid {
    pub fn values(&self, regime: Regime) -> &[f64] {
        match regime {
            Regime::One => &self.u1,
            Regime::Two => &self.u2,
        }
    }

    /// The `τ_j` slice of one regime.
    pub fn slice(&self, regime: Regime, j: usize) -> &[f64] {
        let nz = self.z_nodes.len();
        &self.values(regime)[j * nz..(j + 1) * nz]
    }

    /// Tensor four-point (cubic) interpolation at `(τ, z)`.
    pub fn value_at(&self, regime: Regime, tau: f64, z: f64) -> f64 {
        let (it, wt) = cubic_stencil(&self.tau_nodes, tau);
        let (iz, wz) = cubic_stencil(&self.z_nodes, z);
        let nz = self.z_nodes.len();
        let u = self.values(regime);
        let mut total = 0.0;
        for (a, wa) in wt.iter().enumerate() {
            let row = &u[(it + a) * nz..];
            let inner: f64 = wz.iter().enumerate().map(|(b, wb)| wb * row[iz + b]).sum();
            total += wa * inner;
        }
        total
    }
}

/// First index and Lagrange weights of the four nodes around `x`.
fn cubic_stencil(nodes: &[f64], x: f64) -> (usize, [f64; 4]) {
    let n = nodes.len();
    let cell = nodes.partition_point(|&v| v <= x).saturating_sub(1);
    let first = cell.saturating_sub(1).min(n - 4);
    let pts = &nodes[first..first + 4];
    let mut w = [1.0; 4];
    for (i, wi) in w.iter_mut().enumerate() {
        for (j, &pj) in pts.iter().enumerate() {
            if i != j {
                *wi *= (x - pj) / (pts[i] - pj);
            }
        }
    }
    (first, w)
}

/// Grid controls: `n_tau` time steps and `n_z` space intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSettings {
    pub n_tau: usize,
    pub n_z: usize,
    /// Upper end of the `z` domain; `None` uses the series engine's 8-sigma rule.
    pub z_max: Option<f64>,
}

impl Default for FdSettings {
    fn default() -> Self {
        FdSettings {
            n_tau: 200,
            n_z: 1600,
            z_max: None,
        }
    }
}

struct Coefficients {
    lower: Vec2,
    diag: Vec2,
    upper: Vec2,
    lambda: Vec2,
}

impl Coefficients {
    fn new(model: &ValidatedModel, h: f64) -> Self {
        let mut c = Coefficients {
            lower: [0.0; 2],
            diag: [0.0; 2],
            upper: [0.0; 2],
            lambda: [0.0; 2],
        };
        for regime in Regime::BOTH {
            let i = regime.idx();
            let p = model.params(regime);
            let diffusion = 0.5 * p.sigma * p.sigma / (h * h);
            let advection = (p.r + 0.5 * p.sigma * p.sigma) / (2.0 * h);
            let lambda = model.exit_intensity(regime);
            c.lower[i] = diffusion + advection;
            c.upper[i] = diffusion - advection;
            c.diag[i] = -2.0 * diffusion - lambda;
            c.lambda[i] = lambda;
        }
        c
    }

    /// `(L U)_k` for regime `i` at an interior node.
    fn apply(&self, i: usize, left: f64, mid: f64, right: f64, other: f64) -> f64 {
        self.lower[i] * left + self.diag[i] * mid + self.upper[i] * right + self.lambda[i] * other
    }
}

/// One θ-scheme step from `old` (time `τ`) to `new` (time `τ + dt`).
fn step(
    coef: &Coefficients,
    old: &[Vec2],
    new: &mut [Vec2],
    far: Vec2,
    dt: f64,
    theta: f64,
) -> Result<()> {
    let n = old.len() - 1;
    let explicit = (1.0 - theta) * dt;
    let implicit = theta * dt;
    let unknowns = n - 1;
    // rows k = 1..n-1 stored at index k-1
    let mut rhs = Vec::with_capacity(unknowns);
    for k in 1..n {
        let mut r = [0.0; 2];
        for i in 0..2 {
            let l = coef.apply(i, old[k - 1][i], old[k][i], old[k + 1][i], old[k][1 - i]);
            r[i] = old[k][i] + explicit * l;
        }
        rhs.push(r);
    }
    let lower: Mat2 = [[-implicit * coef.lower[0], 0.0], [0.0, -implicit * coef.lower[1]]];
    let upper: Mat2 = [[-implicit * coef.upper[0], 0.0], [0.0, -implicit * coef.upper[1]]];
    let diag: Mat2 = [
        [1.0 - implicit * coef.diag[0], -implicit * coef.lambda[0]],
        [-implicit * coef.lambda[1], 1.0 - implicit * coef.diag[1]],
    ];
    // boundary at z=0: U_0 = (4U_1 − U_2)/3 folded into the first row
    let mut first_diag = diag;
    let mut first_upper = upper;
    for i in 0..2 {
        first_diag[i][i] += 4.0 / 3.0 * lower[i][i];
        first_upper[i][i] -= lower[i][i] / 3.0;
    }
    for i in 0..2 {
        rhs[unknowns - 1][i] -= upper[i][i] * far[i];
    }

    // block Thomas elimination
    let mut c_prime: Vec<Mat2> = Vec::with_capacity(unknowns);
    let mut d_prime: Vec<Vec2> = Vec::with_capacity(unknowns);
    let inv = inverse(&first_diag)?;
    c_prime.push(mat_mul(&inv, &first_upper));
    d_prime.push(mat_vec(&inv, &rhs[0]));
    for row in 1..unknowns {
        let lc = mat_mul(&lower, &c_prime[row - 1]);
        let b = [
            [diag[0][0] - lc[0][0], diag[0][1] - lc[0][1]],
            [diag[1][0] - lc[1][0], diag[1][1] - lc[1][1]],
        ];
        let inv = inverse(&b)?;
        let ld = mat_vec(&lower, &d_prime[row - 1]);
        let d = [rhs[row][0] - ld[0], rhs[row][1] - ld[1]];
        c_prime.push(mat_mul(&inv, &upper));
        d_prime.push(mat_vec(&inv, &d));
    }
    new[n] = far;
    new[n - 1] = d_prime[unknowns - 1];
    for row in (0..unknowns - 1).rev() {
        let cu = mat_vec(&c_prime[row], &new[row + 2]);
        new[row + 1] = [d_prime[row][0] - cu[0], d_prime[row][1] - cu[1]];
    }
    for i in 0..2 {
        new[0][i] = (4.0 * new[1][i] - new[2][i]) / 3.0;
    }
    if new.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
        return Err(Error::NumericalFailure("non-finite finite-difference solution".into()));
    }
    Ok(())
}

/// Solves the coupled system on `[0, τ_query] × [0, z_max]` and interpolates the
/// queried regime at the query point. Returns the grid and the price `s · U`.
pub fn fd_price(
    query: &LookbackQuery,
    model: &ValidatedModel,
    n_tau: usize,
    n_z: usize,
    z_max: f64,
) -> Result<(FdGrid, f64)> {
    let coords = reduce(query, model)?;
    if n_tau < 4 {
        return Err(Error::invalid("n_tau", "need at least 4 time steps"));
    }
    if n_z < 4 {
        return Err(Error::invalid("n_z", "need at least 4 space intervals"));
    }
    let min_z = coords.z + 6.0 * model.sigma_max() * coords.tau.sqrt();
    if !(z_max >= min_z) || !z_max.is_finite() {
        return Err(Error::invalid(
            "z_max",
            format!("domain must reach z + 6·σ_max·√τ = {min_z:.6}"),
        ));
    }
    let tau = coords.tau;
    let grid = solve(model, tau, n_tau, n_z, z_max)?;
    let value = grid.value_at(query.regime, tau, coords.z);
    Ok((grid, query.s * value))
}

/// [`fd_price`] with [`FdSettings`].
pub fn fd_price_with(
    query: &LookbackQuery,
    model: &ValidatedModel,
    settings: &FdSettings,
) -> Result<(FdGrid, f64)> {
    let coords = reduce(query, model)?;
    let z_max = settings
        .z_max
        .unwrap_or_else(|| domain_z_max(coords.z, coords.tau, model, 8.0));
    fd_price(query, model, settings.n_tau, settings.n_z, z_max)
}

/// Time-stepping core: the whole grid for `τ ∈ [0, tau]`.
pub fn solve(model: &ValidatedModel, tau: f64, n_tau: usize, n_z: usize, z_max: f64) -> Result<FdGrid> {
    let h = z_max / n_z as f64;
    let dt = tau / n_tau as f64;
    let z_nodes: Vec<f64> = (0..=n_z).map(|k| k as f64 * h).collect();
    let tau_nodes: Vec<f64> = (0..=n_tau).map(|j| j as f64 * dt).collect();
    let coef = Coefficients::new(model, h);
    let exp_z_max = z_max.exp();
    let far_at = |t: f64| {
        let p = regime_bond_prices(model, t);
        [exp_z_max * p[0] - 1.0, exp_z_max * p[1] - 1.0]
    };

    let width = n_z + 1;
    let mut u1 = Vec::with_capacity((n_tau + 1) * width);
    let mut u2 = Vec::with_capacity((n_tau + 1) * width);
    let mut current: Vec<Vec2> = z_nodes.iter().map(|z| [z.exp_m1(), z.exp_m1()]).collect();
    let mut next = current.clone();
    let record = |state: &[Vec2], u1: &mut Vec<f64>, u2: &mut Vec<f64>| {
        u1.extend(state.iter().map(|v| v[0]));
        u2.extend(state.iter().map(|v| v[1]));
    };
    record(&current, &mut u1, &mut u2);

    let rannacher_steps = 2.min(n_tau);
    for j in 0..n_tau {
        let t0 = tau_nodes[j];
        if j < rannacher_steps {
            let half = 0.5 * dt;
            step(&coef, &current, &mut next, far_at(t0 + half), half, 1.0)?;
            std::mem::swap(&mut current, &mut next);
            step(&coef, &current, &mut next, far_at(tau_nodes[j + 1]), half, 1.0)?;
        } else {
            step(&coef, &current, &mut next, far_at(tau_nodes[j + 1]), dt, 0.5)?;
        }
        std::mem::swap(&mut current, &mut next);
        record(&current, &mut u1, &mut u2);
    }
    Ok(FdGrid {
        tau_nodes,
        z_nodes,
        u1,
        u2,
    })
}
