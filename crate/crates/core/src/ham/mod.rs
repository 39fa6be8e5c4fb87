//! Homotopy series engine.
//!
//! The reduced value `U_i(τ, z) = V_i / s` is expanded as `Σ_m Ū_i^m`. Order zero is the
//! single-regime closed form; order `m` solves the regime's own (uncoupled) operator with
//! zero terminal value, zero slope at `z = 0` and the coupling `λ_i (Ū_j^{m−1} − Ū_i^{m−1})`
//! as source. Each order is obtained as a Green's-function convolution, see [`operator`].

pub mod green;
pub mod grid;
pub mod operator;
pub mod quadrature;
pub mod series;
pub mod spline;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::model::{
    reduce, LookbackQuery, OptionStyle, Regime, RegimeParams, ValidatedModel,
};

pub use green::green_kernel;
pub use grid::{GridSpec, TermGrid};
pub use operator::{QuadratureSpec, TermOperator};
pub use series::{compute_term, sum_series, HamSolution, SeriesValue, SourceTerm};

/// How recursion outputs are combined into the series value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizationMode {
    /// Sum the recursion outputs directly.
    PlainSum,
    /// Divide order `m` by `m!` before summing (Taylor-coefficient reading).
    AsStated,
}

impl fmt::Display for NormalizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormalizationMode::PlainSum => "plain-sum",
            NormalizationMode::AsStated => "as-stated",
        })
    }
}

impl FromStr for NormalizationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain-sum" => Ok(NormalizationMode::PlainSum),
            "as-stated" => Ok(NormalizationMode::AsStated),
            _ => Err(Error::invalid(
                "normalization_mode",
                format!("expected plain-sum or as-stated, got '{s}'"),
            )),
        }
    }
}

/// Fixed-strike parity variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParityMode {
    /// `C = V + K e^{−r_i τ}`.
    AsStated,
    /// `C = V + s − K e^{−r_i τ}`, the usual relation when `y ≥ K`.
    Standard,
}

impl fmt::Display for ParityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParityMode::AsStated => "as-stated",
            ParityMode::Standard => "standard",
        })
    }
}

impl FromStr for ParityMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as-stated" => Ok(ParityMode::AsStated),
            "standard" => Ok(ParityMode::Standard),
            _ => Err(Error::invalid(
                "parity_mode",
                format!("expected as-stated or standard, got '{s}'"),
            )),
        }
    }
}

/// Every tuning knob of the series engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericsConfig {
    /// Highest series order kept.
    pub order_max: usize,
    /// Grid nodes in `√τ`.
    pub n_tau: usize,
    /// Grid nodes in `z`.
    pub n_z: usize,
    /// `c` in `z_max = z + c·σ_max√τ + τ(r_max + σ_max²/2)`; also the kernel window in
    /// units of the kernel width.
    pub z_max_sigmas: f64,
    /// Gauss–Legendre nodes per panel.
    pub quad_nodes: usize,
    /// Panels per grid cell in time.
    pub n_panels_u: usize,
    /// Panels per grid cell (or kernel-width slab) in `z`.
    pub n_panels_xi: usize,
    /// Geometric refinement levels towards the kernel singularity at `u = τ`.
    pub graded_levels: usize,
    /// Relative size of the last term above which the series is flagged as unconverged.
    pub series_tol: f64,
    pub normalization_mode: NormalizationMode,
    pub parity_mode: ParityMode,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            order_max: 48,
            n_tau: 24,
            n_z: 48,
            z_max_sigmas: 8.0,
            quad_nodes: 6,
            n_panels_u: 1,
            n_panels_xi: 1,
            graded_levels: 16,
            series_tol: 1e-6,
            normalization_mode: NormalizationMode::PlainSum,
            parity_mode: ParityMode::AsStated,
        }
    }
}

impl NumericsConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("quad_nodes", self.quad_nodes),
            ("n_panels_u", self.n_panels_u),
            ("n_panels_xi", self.n_panels_xi),
        ] {
            if v < 1 {
                return Err(Error::invalid(name, "count must be at least 1"));
            }
        }
        for (name, v) in [("n_tau", self.n_tau), ("n_z", self.n_z)] {
            if v < 4 {
                return Err(Error::invalid(name, "grid needs at least 4 nodes"));
            }
        }
        if !(self.series_tol > 0.0) {
            return Err(Error::invalid("series_tol", "tolerance must be positive"));
        }
        if !(self.z_max_sigmas >= 4.0) || !self.z_max_sigmas.is_finite() {
            return Err(Error::invalid("z_max_sigmas", "multiplier must be at least 4"));
        }
        Ok(())
    }

    /// Twice the nodes and twice the panels, everything else unchanged.
    pub fn refined(&self) -> Self {
        NumericsConfig {
            quad_nodes: 2 * self.quad_nodes,
            n_panels_u: 2 * self.n_panels_u,
            n_panels_xi: 2 * self.n_panels_xi,
            ..*self
        }
    }
}

/// Upper end of the `z` domain for a query at `z` with `τ` to expiry.
pub fn domain_z_max(z: f64, tau: f64, model: &ValidatedModel, sigmas: f64) -> f64 {
    let sigma = model.sigma_max();
    z + sigmas * sigma * tau.sqrt() + tau * (model.r_max() + 0.5 * sigma * sigma)
}

/// Result of a pricing run.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceReport {
    pub price: f64,
    /// `price / s`.
    pub reduced_value: f64,
    /// Reduced value in both regimes at the query point.
    pub regime_values: [f64; 2],
    /// Per-order contributions (absolute) for the queried regime.
    pub term_magnitudes: Vec<f64>,
    /// Per-order contributions (signed) for both regimes.
    pub regime_contributions: [Vec<f64>; 2],
    /// Magnitude of the last included contribution.
    pub truncation_estimate: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
    pub engine: &'static str,
    pub config_echo: NumericsConfig,
}

type OperatorKey = (u64, u64, u64, u64);

/// Series engine with an operator cache.
///
/// Convolution operators depend only on a regime's `(σ, r)` and the grid, so pricing
/// several models that share regimes (for example a sweep over intensities) reuses them.
pub struct HamPricer {
    config: NumericsConfig,
    cache: Mutex<HashMap<OperatorKey, Arc<TermOperator>>>,
}

impl HamPricer {
    pub fn new(config: NumericsConfig) -> Result<Self> {
        config.validate()?;
        Ok(HamPricer {
            config,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &NumericsConfig {
        &self.config
    }

    fn operator(&self, params: &RegimeParams, grid: &Arc<GridSpec>) -> Result<Arc<TermOperator>> {
        let key = (
            params.sigma.to_bits(),
            params.r.to_bits(),
            grid.tau_max().to_bits(),
            grid.z_max().to_bits(),
        );
        if let Some(op) = self.cache.lock().unwrap().get(&key) {
            return Ok(op.clone());
        }
        let op = Arc::new(TermOperator::build(
            params,
            grid.clone(),
            QuadratureSpec::from(&self.config),
        )?);
        self.cache.lock().unwrap().insert(key, op.clone());
        Ok(op)
    }

    /// Tabulates all series terms for time-to-expiry `tau` on a domain covering `z_query`.
    pub fn solve(&self, model: &ValidatedModel, tau: f64, z_query: f64) -> Result<HamSolution> {
        if !(tau > 0.0) {
            return Err(Error::invalid("tau", "time to expiry must be positive"));
        }
        let cfg = &self.config;
        let z_max = domain_z_max(z_query, tau, model, cfg.z_max_sigmas);
        let grid = Arc::new(GridSpec::new(tau, z_max, cfg.n_tau, cfg.n_z)?);
        let mut terms = vec![series::initial_terms(&grid, model)?];
        let mut operators: [Option<Arc<TermOperator>>; 2] = [None, None];
        for m in 1..=cfg.order_max {
            let next = compute_term(m, &terms[m - 1], model, |regime| {
                let op = self.operator(model.params(regime), &grid)?;
                operators[regime.idx()] = Some(op.clone());
                Ok(op)
            })?;
            terms.push(next);
        }
        Ok(HamSolution::new(
            *model,
            grid,
            terms,
            cfg.normalization_mode,
            operators,
        ))
    }

    pub fn price_floating(&self, query: &LookbackQuery, model: &ValidatedModel) -> Result<PriceReport> {
        let coords = reduce(query, model)?;
        let solution = self.solve(model, coords.tau, coords.z)?;
        self.report(&solution, query, coords.tau, coords.z)
    }

    /// Builds a report for `query` from an existing solution (same `τ`, covering `z`).
    pub fn report(
        &self,
        solution: &HamSolution,
        query: &LookbackQuery,
        tau: f64,
        z: f64,
    ) -> Result<PriceReport> {
        let values = [
            solution.series_at(Regime::One, tau, z)?,
            solution.series_at(Regime::Two, tau, z)?,
        ];
        let own = &values[query.regime.idx()];
        let truncation_estimate = own.last_magnitude();
        let mut warnings = Vec::new();
        let converged = truncation_estimate <= self.config.series_tol * own.value.abs();
        if !converged {
            warnings.push(format!(
                "series not converged: last term {truncation_estimate:.3e} exceeds {:.1e} relative",
                self.config.series_tol
            ));
        }
        Ok(PriceReport {
            price: query.s * own.value,
            reduced_value: own.value,
            regime_values: [values[0].value, values[1].value],
            term_magnitudes: own.contributions.iter().map(|c| c.abs()).collect(),
            regime_contributions: [values[0].contributions.clone(), values[1].contributions.clone()],
            truncation_estimate,
            converged,
            warnings,
            engine: "ham",
            config_echo: self.config,
        })
    }

    /// Fixed-strike call through lookback parity on top of the floating price.
    pub fn price_fixed(&self, query: &LookbackQuery, model: &ValidatedModel) -> Result<PriceReport> {
        let OptionStyle::FixedStrikeCall { strike } = query.style else {
            return Err(Error::invalid("style", "price_fixed needs a fixed-strike query"));
        };
        let floating = self.price_floating(query, model)?;
        Ok(apply_parity(floating, query, model, strike, self.config.parity_mode))
    }
}

/// Amount added to the floating-strike price to obtain the fixed-strike call.
pub fn parity_adjustment(
    query: &LookbackQuery,
    model: &ValidatedModel,
    strike: f64,
    mode: ParityMode,
) -> f64 {
    let discounted = strike * (-model.params(query.regime).r * query.tau()).exp();
    match mode {
        ParityMode::AsStated => discounted,
        ParityMode::Standard => query.s - discounted,
    }
}

fn apply_parity(
    mut report: PriceReport,
    query: &LookbackQuery,
    model: &ValidatedModel,
    strike: f64,
    mode: ParityMode,
) -> PriceReport {
    report.price += parity_adjustment(query, model, strike, mode);
    report.reduced_value = report.price / query.s;
    report
}

/// Floating-strike put price through the series engine.
pub fn price_floating(
    query: &LookbackQuery,
    model: &ValidatedModel,
    config: &NumericsConfig,
) -> Result<PriceReport> {
    HamPricer::new(*config)?.price_floating(query, model)
}

/// Fixed-strike call price through parity.
pub fn price_fixed(
    query: &LookbackQuery,
    model: &ValidatedModel,
    config: &NumericsConfig,
) -> Result<PriceReport> {
    HamPricer::new(*config)?.price_fixed(query, model)
}
