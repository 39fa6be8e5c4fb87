//! Cubic spline bases on a fixed node set, used for tensor-product (bicubic)
//! interpolation of the series terms.
//!
//! A spline through values `y` is carried as `(y, M)` with `M = S·y` the nodal second
//! derivatives. On cell `[x_i, x_{i+1}]` the interpolant is a fixed combination of
//! `y_i, y_{i+1}, M_i, M_{i+1}`; [`SplineBasis::local_weights`] returns that combination,
//! which lets quadrature accumulate against the four local coefficients and defer the
//! linear map `S` to the end.

use crate::error::{Error, Result};

/// End condition at one side of the node set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndCondition {
    /// Third derivative continuous across the first interior node.
    NotAKnot,
    /// First derivative pinned to zero.
    ZeroSlope,
}

#[derive(Debug, Clone)]
pub struct SplineBasis {
    nodes: Vec<f64>,
    /// Row-major `n × n`, second derivatives from nodal values.
    curvature: Vec<f64>,
}

impl SplineBasis {
    pub fn new(nodes: Vec<f64>, left: EndCondition, right: EndCondition) -> Result<Self> {
        let n = nodes.len();
        if n < 4 {
            return Err(Error::invalid("grid", "spline needs at least 4 nodes"));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("grid", "spline nodes must increase strictly"));
        }
        let h: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        // lhs · M = rhs · y
        let mut lhs = vec![0.0; n * n];
        let mut rhs = vec![0.0; n * n];
        for i in 1..n - 1 {
            lhs[i * n + i - 1] = h[i - 1] / 6.0;
            lhs[i * n + i] = (h[i - 1] + h[i]) / 3.0;
            lhs[i * n + i + 1] = h[i] / 6.0;
            rhs[i * n + i - 1] = 1.0 / h[i - 1];
            rhs[i * n + i] = -1.0 / h[i - 1] - 1.0 / h[i];
            rhs[i * n + i + 1] = 1.0 / h[i];
        }
        match left {
            EndCondition::NotAKnot => {
                lhs[0] = 1.0 / h[0];
                lhs[1] = -1.0 / h[0] - 1.0 / h[1];
                lhs[2] = 1.0 / h[1];
            }
            EndCondition::ZeroSlope => {
                lhs[0] = h[0] / 3.0;
                lhs[1] = h[0] / 6.0;
                rhs[0] = -1.0 / h[0];
                rhs[1] = 1.0 / h[0];
            }
        }
        let last = (n - 1) * n;
        let (a, b) = (h[n - 3], h[n - 2]);
        match right {
            EndCondition::NotAKnot => {
                lhs[last + n - 3] = 1.0 / a;
                lhs[last + n - 2] = -1.0 / a - 1.0 / b;
                lhs[last + n - 1] = 1.0 / b;
            }
            EndCondition::ZeroSlope => {
                lhs[last + n - 2] = b / 6.0;
                lhs[last + n - 1] = b / 3.0;
                rhs[last + n - 2] = 1.0 / b;
                rhs[last + n - 1] = -1.0 / b;
            }
        }
        let curvature = solve_dense(n, lhs, rhs)?;
        Ok(SplineBasis { nodes, curvature })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index `i` of the cell `[x_i, x_{i+1}]` containing `x`, clamped to the grid.
    pub fn locate(&self, x: f64) -> usize {
        let n = self.nodes.len();
        let i = self.nodes.partition_point(|&v| v <= x);
        i.saturating_sub(1).min(n - 2)
    }

    /// Coefficients of `(y_i, y_{i+1}, M_i, M_{i+1})` at `x` in cell `i`.
    #[inline]
    pub fn local_weights(&self, cell: usize, x: f64) -> [f64; 4] {
        let h = self.nodes[cell + 1] - self.nodes[cell];
        let a = (self.nodes[cell + 1] - x) / h;
        let b = 1.0 - a;
        let h2 = h * h / 6.0;
        [a, b, (a * a * a - a) * h2, (b * b * b - b) * h2]
    }

    /// Dense interpolation weights over the nodal values.
    pub fn weights_at(&self, x: f64) -> Vec<f64> {
        let n = self.nodes.len();
        let cell = self.locate(x);
        let lw = self.local_weights(cell, x);
        let mut out = vec![0.0; n];
        out[cell] += lw[0];
        out[cell + 1] += lw[1];
        for j in 0..n {
            out[j] += lw[2] * self.curvature[cell * n + j] + lw[3] * self.curvature[(cell + 1) * n + j];
        }
        out
    }

    /// Folds coefficients on `(y, M)` (length `2n`) into coefficients on `y` alone.
    pub fn fold(&self, extended: &[f64]) -> Vec<f64> {
        let n = self.nodes.len();
        let mut out = extended[..n].to_vec();
        for (k, &c) in extended[n..].iter().enumerate() {
            if c != 0.0 {
                let row = &self.curvature[k * n..(k + 1) * n];
                for (o, &s) in out.iter_mut().zip(row) {
                    *o += c * s;
                }
            }
        }
        out
    }

    pub fn curvature_row(&self, k: usize) -> &[f64] {
        let n = self.nodes.len();
        &self.curvature[k * n..(k + 1) * n]
    }

    pub fn eval(&self, values: &[f64], x: f64) -> f64 {
        self.weights_at(x).iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Solves `lhs · X = rhs` for square row-major matrices by partial pivoting.
fn solve_dense(n: usize, mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap_or(col);
        if a[pivot * n + col].abs() < 1e-300 {
            return Err(Error::NumericalFailure("singular spline system".into()));
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
                b.swap(pivot * n + k, col * n + k);
            }
        }
        let d = a[col * n + col];
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in 0..n {
                a[row * n + k] -= f * a[col * n + k];
                b[row * n + k] -= f * b[col * n + k];
            }
        }
    }
    for row in 0..n {
        let d = a[row * n + row];
        for k in 0..n {
            b[row * n + k] /= d;
        }
    }
    Ok(b)
}
