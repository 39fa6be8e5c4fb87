//! Discretised Green's-function convolution that maps one order's regime difference to
//! the next order's term.
//!
//! For a regime with parameters `(σ, r)` and `κ = (2r/σ² + 1)/2`, a term of order `m ≥ 1`
//! at `(τ, z)` is
//!
//! ```text
//! Ū^m(τ, z) = e^{−½σ²κ²τ + κz} ∫₀^τ ∫₀^{ξ_max} S(u, ξ) G(τ − u, z, ξ) dξ du,
//! S(u, ξ)   = λ e^{½σ²κ²u − κξ} Δ^{m−1}(u, ξ),
//! ```
//!
//! where `Δ^{m−1}` is the other regime's order `m−1` term minus this regime's. `Δ` is
//! only known through its bicubic interpolant on the grid, so the whole map is linear
//! in the grid values and is assembled once into a dense matrix (λ excluded). Each order
//! then costs one matrix-vector product.
//!
//! Quadrature panels follow the interpolant's cells so that the source is a polynomial
//! on every panel. The cell ending at `u = τ` is split geometrically towards the kernel
//! singularity, and in `ξ` panels shrink to the kernel width `σ√(τ−u)` whenever that is
//! narrower than a grid cell.

use std::sync::Arc;

use rayon::prelude::*;

use super::green::neumann_kernel;
use super::grid::GridSpec;
use super::quadrature::GaussLegendre;
use super::NumericsConfig;
use crate::error::{Error, Result};
use crate::model::RegimeParams;

/// Quadrature settings that affect the assembled operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub nodes: usize,
    pub panels_u: usize,
    pub panels_xi: usize,
    pub graded_levels: usize,
    pub window_sigmas: f64,
}

impl From<&NumericsConfig> for QuadratureSpec {
    fn from(cfg: &NumericsConfig) -> Self {
        QuadratureSpec {
            nodes: cfg.quad_nodes,
            panels_u: cfg.n_panels_u,
            panels_xi: cfg.n_panels_xi,
            graded_levels: cfg.graded_levels,
            window_sigmas: cfg.z_max_sigmas,
        }
    }
}

/// Assembles operator rows for one regime.
pub struct RowBuilder {
    sigma: f64,
    kappa: f64,
    grid: Arc<GridSpec>,
    quad: QuadratureSpec,
    rule: GaussLegendre,
}

impl RowBuilder {
    pub fn new(params: &RegimeParams, grid: Arc<GridSpec>, quad: QuadratureSpec) -> Self {
        RowBuilder {
            sigma: params.sigma,
            kappa: params.kappa(),
            grid,
            rule: GaussLegendre::new(quad.nodes),
            quad,
        }
    }

    /// Coefficients `a_k` with `Ū^m(τ, z) = λ Σ_k a_k Δ^{m−1}_k`.
    pub fn row(&self, tau: f64, z: f64) -> Result<Vec<f64>> {
        let grid = &*self.grid;
        let (nt, nz) = (grid.n_tau(), grid.n_z());
        if tau <= 0.0 {
            return Ok(vec![0.0; nt * nz]);
        }
        let s_target = tau.sqrt();
        let width = 2 * nz;
        let mut ext = vec![0.0; 2 * nt * width];
        let mut acc = vec![0.0; width];
        let mut breaks = Vec::with_capacity(64);
        let s_nodes = grid.s_nodes();

        for cell in 0..nt - 1 {
            let lo = s_nodes[cell];
            if lo >= s_target {
                break;
            }
            let hi = s_nodes[cell + 1].min(s_target);
            let panels = self.time_panels(lo, hi, s_nodes[cell + 1] >= s_target);
            for (a, b) in panels {
                let step = (b - a) / self.quad.panels_u as f64;
                for p in 0..self.quad.panels_u {
                    let pa = a + step * p as f64;
                    let pb = if p + 1 == self.quad.panels_u { b } else { pa + step };
                    for (s, ws) in self.rule.mapped(pa, pb) {
                        let t = tau - s * s;
                        if t <= 0.0 {
                            continue;
                        }
                        acc.fill(0.0);
                        self.space_integral(t, z, &mut acc, &mut breaks)?;
                        let lw = grid.sqrt_tau.local_weights(cell, s);
                        let du = ws * 2.0 * s;
                        for (k, row) in [cell, cell + 1, nt + cell, nt + cell + 1].into_iter().enumerate() {
                            let f = du * lw[k];
                            if f == 0.0 {
                                continue;
                            }
                            let dst = &mut ext[row * width..(row + 1) * width];
                            for (d, &v) in dst.iter_mut().zip(&acc) {
                                *d += f * v;
                            }
                        }
                    }
                }
            }
        }
        Ok(self.fold(&ext))
    }

    fn time_panels(&self, lo: f64, hi: f64, singular: bool) -> Vec<(f64, f64)> {
        if !singular {
            return vec![(lo, hi)];
        }
        let len = hi - lo;
        let mut out = Vec::with_capacity(self.quad.graded_levels + 1);
        let mut left = lo;
        for k in 1..=self.quad.graded_levels {
            let right = hi - len * 0.5f64.powi(k as i32);
            out.push((left, right));
            left = right;
        }
        out.push((left, hi));
        out
    }

    /// Accumulates `∫ K(t, z, ξ) · basis(ξ) dξ` into `acc` over the `(y, M)` coefficients.
    fn space_integral(&self, t: f64, z: f64, acc: &mut [f64], breaks: &mut Vec<f64>) -> Result<()> {
        let zb = &self.grid.z;
        let nz = zb.len();
        let nodes = zb.nodes();
        let z_max = nodes[nz - 1];
        let w = self.sigma * t.sqrt();
        let c = self.quad.window_sigmas;
        let lo = (z - c * w).max(0.0);
        let hi = (z + c * w).min(z_max);
        if hi <= lo {
            return Ok(());
        }
        breaks.clear();
        breaks.push(lo);
        breaks.push(hi);
        breaks.extend(nodes.iter().copied().filter(|&x| x > lo && x < hi));
        let min_cell = z_max / (nz - 1) as f64;
        if w < min_cell {
            let steps = c.ceil() as i32;
            for k in 1..=steps {
                let d = k as f64 * w;
                for x in [z - d, z + d, d] {
                    if x > lo && x < hi {
                        breaks.push(x);
                    }
                }
            }
            if z > lo && z < hi {
                breaks.push(z);
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|b, a| (*b - *a) <= 1e-13 * a.abs().max(1e-3));

        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let cell = zb.locate(0.5 * (a + b));
            let step = (b - a) / self.quad.panels_xi as f64;
            for p in 0..self.quad.panels_xi {
                let pa = a + step * p as f64;
                let pb = if p + 1 == self.quad.panels_xi { b } else { pa + step };
                for (xi, wx) in self.rule.mapped(pa, pb) {
                    let k = neumann_kernel(t, z, xi, self.sigma, self.kappa);
                    if !k.is_finite() {
                        return Err(Error::NumericalFailure(format!(
                            "non-finite kernel at t={t}, z={z}, xi={xi}"
                        )));
                    }
                    let wt = wx * k;
                    let lw = zb.local_weights(cell, xi);
                    acc[cell] += wt * lw[0];
                    acc[cell + 1] += wt * lw[1];
                    acc[nz + cell] += wt * lw[2];
                    acc[nz + cell + 1] += wt * lw[3];
                }
            }
        }
        Ok(())
    }

    fn fold(&self, ext: &[f64]) -> Vec<f64> {
        let grid = &*self.grid;
        let (nt, nz) = (grid.n_tau(), grid.n_z());
        let width = 2 * nz;
        let folded: Vec<Vec<f64>> = ext
            .chunks(width)
            .map(|row| {
                if row.iter().all(|&v| v == 0.0) {
                    Vec::new()
                } else {
                    grid.z.fold(row)
                }
            })
            .collect();
        let mut out = vec![0.0; nt * nz];
        for a in 0..nt {
            if !folded[a].is_empty() {
                out[a * nz..(a + 1) * nz].copy_from_slice(&folded[a]);
            }
        }
        for k in 0..nt {
            let m_row = &folded[nt + k];
            if m_row.is_empty() {
                continue;
            }
            let curv = grid.sqrt_tau.curvature_row(k);
            for (a, &c) in curv.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                for (o, &v) in out[a * nz..(a + 1) * nz].iter_mut().zip(m_row) {
                    *o += c * v;
                }
            }
        }
        out
    }
}

/// Dense convolution matrix for one regime on one grid.
#[derive(Debug, Clone)]
pub struct TermOperator {
    pub params: RegimeParams,
    pub grid: Arc<GridSpec>,
    pub quad: QuadratureSpec,
    matrix: Vec<f64>,
}

impl TermOperator {
    /// Assembles every grid row; rows are independent and built in parallel.
    pub fn build(params: &RegimeParams, grid: Arc<GridSpec>, quad: QuadratureSpec) -> Result<Self> {
        let builder = RowBuilder::new(params, grid.clone(), quad);
        let n = grid.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|flat| {
                let (s, z) = grid.node(flat);
                builder.row(s * s, z)
            })
            .collect::<Result<_>>()?;
        let mut matrix = Vec::with_capacity(n * n);
        for r in rows {
            matrix.extend_from_slice(&r);
        }
        Ok(TermOperator {
            params: *params,
            grid,
            quad,
            matrix,
        })
    }

    pub fn row_builder(&self) -> RowBuilder {
        RowBuilder::new(&self.params, self.grid.clone(), self.quad)
    }

    /// Applies the convolution (without the intensity factor) to a grid of differences.
    pub fn apply(&self, diff: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        self.matrix
            .chunks(n)
            .map(|row| row.iter().zip(diff).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn row(&self, flat: usize) -> &[f64] {
        let n = self.grid.len();
        &self.matrix[flat * n..(flat + 1) * n]
    }
}
