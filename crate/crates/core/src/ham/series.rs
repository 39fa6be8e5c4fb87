//! Series recursion: source terms, per-order term grids and partial sums.

use std::sync::Arc;

use super::grid::{GridSpec, TermGrid};
use super::operator::TermOperator;
use super::NormalizationMode;
use crate::bs_lookback::u0;
use crate::error::{Error, Result};
use crate::model::{Regime, ValidatedModel};

/// Right-hand side of the transformed order-`m` diffusion problem for one regime:
/// `λ_i e^{½σ_i²κ_i²u − κ_i ξ} (Ū_j^{m−1} − Ū_i^{m−1})(u, ξ)` with `u` the time to expiry.
pub struct SourceTerm<'a> {
    pub regime: Regime,
    intensity: f64,
    sigma: f64,
    kappa: f64,
    own: &'a TermGrid,
    other: &'a TermGrid,
}

impl<'a> SourceTerm<'a> {
    /// `prev` holds the order `m−1` grids of regimes one and two.
    pub fn new(m: usize, prev: &'a [TermGrid; 2], regime: Regime, model: &ValidatedModel) -> Self {
        assert!(m >= 1, "source terms start at order 1");
        assert!(
            prev.iter().all(|g| g.order + 1 == m),
            "previous grids must be of order m-1"
        );
        let params = model.params(regime);
        SourceTerm {
            regime,
            intensity: model.exit_intensity(regime),
            sigma: params.sigma,
            kappa: params.kappa(),
            own: &prev[regime.idx()],
            other: &prev[regime.other().idx()],
        }
    }

    /// Source weight without the regime difference.
    pub fn weight(&self, u: f64, xi: f64) -> f64 {
        let s2k2 = self.sigma * self.sigma * self.kappa * self.kappa;
        self.intensity * (0.5 * s2k2 * u - self.kappa * xi).exp()
    }

    pub fn eval(&self, u: f64, xi: f64) -> f64 {
        let diff = self.other.value_at(u, xi) - self.own.value_at(u, xi);
        self.weight(u, xi) * diff
    }

    /// True when the source vanishes identically on the grid.
    pub fn is_zero(&self) -> bool {
        self.intensity == 0.0
            || self
                .own
                .values
                .iter()
                .zip(&self.other.values)
                .all(|(a, b)| a == b)
    }

    /// Grid values of `Ū_j^{m−1} − Ū_i^{m−1}`.
    pub fn difference(&self) -> Vec<f64> {
        self.other
            .values
            .iter()
            .zip(&self.own.values)
            .map(|(o, s)| o - s)
            .collect()
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }
}

/// Order-zero grids: the single-regime closed form at every node.
pub fn initial_terms(grid: &Arc<GridSpec>, model: &ValidatedModel) -> Result<[TermGrid; 2]> {
    let make = |regime: Regime| -> Result<TermGrid> {
        let params = model.params(regime);
        let mut g = TermGrid::zeros(0, regime, grid.clone());
        for (flat, v) in g.values.iter_mut().enumerate() {
            let (s, z) = grid.node(flat);
            *v = u0(z, s * s, params)?;
        }
        Ok(g)
    };
    Ok([make(Regime::One)?, make(Regime::Two)?])
}

/// Order-`m` grids from order `m−1`.
///
/// `operator_for` supplies the convolution for a regime; it is only called when that
/// regime's source is not identically zero.
pub fn compute_term<F>(
    m: usize,
    prev: &[TermGrid; 2],
    model: &ValidatedModel,
    mut operator_for: F,
) -> Result<[TermGrid; 2]>
where
    F: FnMut(Regime) -> Result<Arc<TermOperator>>,
{
    let grid = prev[0].grid.clone();
    let mut out = [
        TermGrid::zeros(m, Regime::One, grid.clone()),
        TermGrid::zeros(m, Regime::Two, grid),
    ];
    for regime in Regime::BOTH {
        let source = SourceTerm::new(m, prev, regime, model);
        if source.is_zero() {
            continue;
        }
        let op = operator_for(regime)?;
        let lambda = source.intensity();
        let values = op.apply(&source.difference());
        let dst = &mut out[regime.idx()].values;
        for (d, v) in dst.iter_mut().zip(values) {
            let x = lambda * v;
            if !x.is_finite() {
                return Err(Error::NumericalFailure(format!(
                    "non-finite order-{m} term for regime {}",
                    regime.label()
                )));
            }
            *d = x;
        }
    }
    Ok(out)
}

/// Per-order contributions and their sum at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    /// Contribution of each order as it enters the sum.
    pub contributions: Vec<f64>,
}

impl SeriesValue {
    /// Partial sums through each order.
    pub fn partial_sums(&self) -> Vec<f64> {
        self.contributions
            .iter()
            .scan(0.0, |acc, c| {
                *acc += c;
                Some(*acc)
            })
            .collect()
    }

    pub fn last_magnitude(&self) -> f64 {
        self.contributions.last().map_or(0.0, |c| c.abs())
    }
}

/// Every tabulated term plus what is needed to evaluate the series off the grid.
pub struct HamSolution {
    pub model: ValidatedModel,
    pub grid: Arc<GridSpec>,
    /// `terms[m][regime.idx()]`.
    pub terms: Vec<[TermGrid; 2]>,
    pub mode: NormalizationMode,
    operators: [Option<Arc<TermOperator>>; 2],
}

impl HamSolution {
    pub(crate) fn new(
        model: ValidatedModel,
        grid: Arc<GridSpec>,
        terms: Vec<[TermGrid; 2]>,
        mode: NormalizationMode,
        operators: [Option<Arc<TermOperator>>; 2],
    ) -> Self {
        HamSolution {
            model,
            grid,
            terms,
            mode,
            operators,
        }
    }

    pub fn order_max(&self) -> usize {
        self.terms.len() - 1
    }

    /// Raw recursion outputs of one regime at `(τ, z)`, order by order.
    ///
    /// On grid nodes these are the tabulated values; elsewhere each term is re-integrated
    /// at the point from the previous order's grid, so no interpolation of the term itself
    /// is involved.
    pub fn raw_terms_at(&self, regime: Regime, tau: f64, z: f64) -> Result<Vec<f64>> {
        let i = regime.idx();
        let mut out = Vec::with_capacity(self.terms.len());
        out.push(u0(z, tau, self.model.params(regime))?);
        if self.terms.len() == 1 {
            return Ok(out);
        }
        if let Some(flat) = self.grid.find_node(tau, z) {
            out.extend(self.terms[1..].iter().map(|t| t[i].values[flat]));
            return Ok(out);
        }
        let lambda = self.model.exit_intensity(regime);
        let row = match &self.operators[i] {
            Some(op) if lambda != 0.0 => Some(op.row_builder().row(tau, z)?),
            _ => None,
        };
        for m in 1..self.terms.len() {
            let prev = &self.terms[m - 1];
            let source = SourceTerm::new(m, prev, regime, &self.model);
            let value = match &row {
                Some(row) if !source.is_zero() => {
                    lambda
                        * row
                            .iter()
                            .zip(source.difference())
                            .map(|(a, d)| a * d)
                            .sum::<f64>()
                }
                _ => 0.0,
            };
            out.push(value);
        }
        Ok(out)
    }

    /// Sums the series for one regime at `(τ, z)`.
    pub fn series_at(&self, regime: Regime, tau: f64, z: f64) -> Result<SeriesValue> {
        let raw = self.raw_terms_at(regime, tau, z)?;
        Ok(sum_series(&raw, self.mode))
    }
}

/// Combines raw recursion outputs into contributions and their sum.
pub fn sum_series(raw: &[f64], mode: NormalizationMode) -> SeriesValue {
    let contributions: Vec<f64> = match mode {
        NormalizationMode::PlainSum => raw.to_vec(),
        NormalizationMode::AsStated => {
            let mut factorial = 1.0;
            raw.iter()
                .enumerate()
                .map(|(m, &c)| {
                    if m > 0 {
                        factorial *= m as f64;
                    }
                    c / factorial
                })
                .collect()
        }
    };
    SeriesValue {
        value: contributions.iter().sum(),
        contributions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_model, MarketModel, RegimeParams};

    #[test]
    fn factorial_normalisation() {
        let raw = [1.0, 2.0, 6.0, 24.0];
        let plain = sum_series(&raw, NormalizationMode::PlainSum);
        assert_eq!(plain.value, 33.0);
        let stated = sum_series(&raw, NormalizationMode::AsStated);
        assert_eq!(stated.contributions, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(stated.partial_sums(), vec![1.0, 3.0, 6.0, 10.0]);
        assert_eq!(stated.last_magnitude(), 4.0);
    }

    #[test]
    fn zero_order_only() {
        let v = sum_series(&[0.25], NormalizationMode::PlainSum);
        assert_eq!(v.value, 0.25);
    }

    fn grids(model: &ValidatedModel) -> [TermGrid; 2] {
        let grid = Arc::new(GridSpec::new(1.0, 3.0, 9, 17).unwrap());
        initial_terms(&grid, model).unwrap()
    }

    #[test]
    fn equal_regimes_source_vanishes() {
        let p = RegimeParams::new(0.05, 0.2);
        let m = validate_model(MarketModel { regime1: p, regime2: p, lambda12: 3.0, lambda21: 1.0 }).unwrap();
        let g = grids(&m);
        for r in Regime::BOTH {
            let s = SourceTerm::new(1, &g, r, &m);
            assert!(s.is_zero());
            assert_eq!(s.eval(0.5, 0.3), 0.0);
        }
    }

    #[test]
    fn zero_intensity_source_vanishes() {
        let m = validate_model(MarketModel {
            regime1: RegimeParams::new(0.05, 0.2),
            regime2: RegimeParams::new(0.03, 0.4),
            lambda12: 0.0,
            lambda21: 1.0,
        })
        .unwrap();
        let g = grids(&m);
        let s1 = SourceTerm::new(1, &g, Regime::One, &m);
        assert!(s1.is_zero());
        assert_eq!(s1.eval(0.5, 0.3), 0.0);
        assert!(!SourceTerm::new(1, &g, Regime::Two, &m).is_zero());
    }

    #[test]
    fn source_matches_direct_substitution() {
        let p1 = RegimeParams::new(0.05, 0.2);
        let p2 = RegimeParams::new(0.03, 0.4);
        let m = validate_model(MarketModel { regime1: p1, regime2: p2, lambda12: 1.0, lambda21: 2.0 }).unwrap();
        let grid = Arc::new(GridSpec::new(1.0, 3.0, 33, 97).unwrap());
        let g = initial_terms(&grid, &m).unwrap();
        let (u, xi) = (0.5, 0.3);
        for (regime, own, other, lambda) in [(Regime::One, p1, p2, 1.0), (Regime::Two, p2, p1, 2.0)] {
            let k = own.kappa();
            let expect = lambda
                * (0.5 * own.sigma * own.sigma * k * k * u - k * xi).exp()
                * (u0(xi, u, &other).unwrap() - u0(xi, u, &own).unwrap());
            let got = SourceTerm::new(1, &g, regime, &m).eval(u, xi);
            assert!((got - expect).abs() < 1e-5 * expect.abs(), "{got} vs {expect}");
        }
    }

    #[test]
    #[should_panic(expected = "order m-1")]
    fn order_mismatch_panics() {
        let p = RegimeParams::new(0.05, 0.2);
        let m = validate_model(MarketModel { regime1: p, regime2: p, lambda12: 1.0, lambda21: 1.0 }).unwrap();
        let g = grids(&m);
        let _ = SourceTerm::new(2, &g, Regime::One, &m);
    }
}
