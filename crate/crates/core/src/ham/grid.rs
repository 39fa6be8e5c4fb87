//! Tabulation grid for series terms and the per-order [`TermGrid`].

use std::sync::Arc;

use super::spline::{EndCondition, SplineBasis};
use crate::error::Result;
use crate::model::Regime;

/// Tensor grid in `(√τ, z)`.
///
/// Nodes are uniform in `√τ` because the terms behave like powers of `√τ` near expiry;
/// `z` nodes are uniform on `[0, z_max]`.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub sqrt_tau: SplineBasis,
    pub z: SplineBasis,
    pub tau_nodes: Vec<f64>,
}

impl GridSpec {
    pub fn new(tau_max: f64, z_max: f64, n_tau: usize, n_z: usize) -> Result<Self> {
        let s_max = tau_max.sqrt();
        let mut s_nodes: Vec<f64> = (0..n_tau)
            .map(|i| s_max * i as f64 / (n_tau - 1) as f64)
            .collect();
        s_nodes[n_tau - 1] = s_max;
        let mut z_nodes: Vec<f64> = (0..n_z)
            .map(|i| z_max * i as f64 / (n_z - 1) as f64)
            .collect();
        z_nodes[n_z - 1] = z_max;
        let tau_nodes = s_nodes.iter().map(|s| s * s).collect();
        Ok(GridSpec {
            sqrt_tau: SplineBasis::new(s_nodes, EndCondition::NotAKnot, EndCondition::NotAKnot)?,
            z: SplineBasis::new(z_nodes, EndCondition::ZeroSlope, EndCondition::NotAKnot)?,
            tau_nodes,
        })
    }

    pub fn n_tau(&self) -> usize {
        self.sqrt_tau.len()
    }

    pub fn n_z(&self) -> usize {
        self.z.len()
    }

    pub fn len(&self) -> usize {
        self.n_tau() * self.n_z()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn z_nodes(&self) -> &[f64] {
        self.z.nodes()
    }

    pub fn s_nodes(&self) -> &[f64] {
        self.sqrt_tau.nodes()
    }

    pub fn z_max(&self) -> f64 {
        *self.z_nodes().last().unwrap()
    }

    pub fn tau_max(&self) -> f64 {
        *self.tau_nodes.last().unwrap()
    }

    /// Flat index of node `(i_tau, i_z)`.
    pub fn index(&self, i_tau: usize, i_z: usize) -> usize {
        i_tau * self.n_z() + i_z
    }

    /// `(√τ, z)` of each node in flat order.
    pub fn node(&self, flat: usize) -> (f64, f64) {
        let nz = self.n_z();
        (self.s_nodes()[flat / nz], self.z_nodes()[flat % nz])
    }

    /// Flat index if `(τ, z)` coincides with a node.
    pub fn find_node(&self, tau: f64, z: f64) -> Option<usize> {
        let s = tau.sqrt();
        let i = self.s_nodes().iter().position(|&v| v == s)?;
        let k = self.z_nodes().iter().position(|&v| v == z)?;
        Some(self.index(i, k))
    }

    /// Bicubic interpolation of grid values at `(τ, z)`.
    pub fn interpolate(&self, values: &[f64], tau: f64, z: f64) -> f64 {
        let ws = self.sqrt_tau.weights_at(tau.max(0.0).sqrt());
        let wz = self.z.weights_at(z);
        let nz = self.n_z();
        ws.iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(i, w)| {
                let row = &values[i * nz..(i + 1) * nz];
                w * row.iter().zip(&wz).map(|(v, c)| v * c).sum::<f64>()
            })
            .sum()
    }
}

/// One series term for one regime, tabulated on the shared grid.
#[derive(Debug, Clone)]
pub struct TermGrid {
    pub order: usize,
    pub regime: Regime,
    pub grid: Arc<GridSpec>,
    /// Row-major `n_tau × n_z`; entry `(j, k)` is the term at `τ_j`, `z_k`.
    pub values: Vec<f64>,
}

impl TermGrid {
    pub fn zeros(order: usize, regime: Regime, grid: Arc<GridSpec>) -> Self {
        let values = vec![0.0; grid.len()];
        TermGrid {
            order,
            regime,
            grid,
            values,
        }
    }

    pub fn value_at(&self, tau: f64, z: f64) -> f64 {
        self.grid.interpolate(&self.values, tau, z)
    }

    pub fn is_identically_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn tau_nodes(&self) -> &[f64] {
        &self.grid.tau_nodes
    }

    pub fn z_nodes(&self) -> &[f64] {
        self.grid.z_nodes()
    }

    /// Values of the `τ_j` slice.
    pub fn row(&self, j: usize) -> &[f64] {
        let nz = self.grid.n_z();
        &self.values[j * nz..(j + 1) * nz]
    }
}
