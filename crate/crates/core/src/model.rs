//! Market model, contract query and the reduced coordinates shared by every engine.

use crate::error::{Error, Result};

/// Per-regime market parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeParams {
    /// Risk-free rate, per year.
    pub r: f64,
    /// Volatility, per square-root year.
    pub sigma: f64,
    /// Real-world appreciation rate. Only needed for [`esscher_parameter`].
    pub mu: Option<f64>,
}

impl RegimeParams {
    pub fn new(r: f64, sigma: f64) -> Self {
        RegimeParams { r, sigma, mu: None }
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self
    }

    /// Dimensionless `2r/σ²`.
    pub fn alpha(&self) -> f64 {
        2.0 * self.r / (self.sigma * self.sigma)
    }

    /// Dimensionless `(α+1)/2`, equal to `(r + σ²/2)/σ²`.
    pub fn kappa(&self) -> f64 {
        0.5 * (self.alpha() + 1.0)
    }
}

/// Regime label of the two-state chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    One,
    Two,
}

impl Regime {
    pub fn other(self) -> Regime {
        match self {
            Regime::One => Regime::Two,
            Regime::Two => Regime::One,
        }
    }

    /// Zero-based index, for array storage.
    pub fn idx(self) -> usize {
        match self {
            Regime::One => 0,
            Regime::Two => 1,
        }
    }

    /// One-based label as used in configuration files.
    pub fn label(self) -> u8 {
        self.idx() as u8 + 1
    }

    pub fn from_label(label: u8) -> Result<Regime> {
        match label {
            1 => Ok(Regime::One),
            2 => Ok(Regime::Two),
            other => Err(Error::invalid(
                "regime",
                format!("regime must be 1 or 2, got {other}"),
            )),
        }
    }

    pub const BOTH: [Regime; 2] = [Regime::One, Regime::Two];
}

/// Two-regime economy: per-regime parameters plus the switching intensities.
///
/// The chain generator is `[[-lambda12, lambda12], [lambda21, -lambda21]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketModel {
    pub regime1: RegimeParams,
    pub regime2: RegimeParams,
    /// Intensity of jumping from regime 1 to regime 2, per year.
    pub lambda12: f64,
    /// Intensity of jumping from regime 2 to regime 1, per year.
    pub lambda21: f64,
}

impl MarketModel {
    pub fn params(&self, regime: Regime) -> &RegimeParams {
        match regime {
            Regime::One => &self.regime1,
            Regime::Two => &self.regime2,
        }
    }

    /// Exit intensity of `regime`, i.e. the rate at which it switches to the other state.
    pub fn exit_intensity(&self, regime: Regime) -> f64 {
        match regime {
            Regime::One => self.lambda12,
            Regime::Two => self.lambda21,
        }
    }

    pub fn generator(&self) -> [[f64; 2]; 2] {
        [
            [-self.lambda12, self.lambda12],
            [self.lambda21, -self.lambda21],
        ]
    }

    /// The same economy with the regime labels exchanged.
    pub fn swapped(&self) -> MarketModel {
        MarketModel {
            regime1: self.regime2,
            regime2: self.regime1,
            lambda12: self.lambda21,
            lambda21: self.lambda12,
        }
    }
}

/// A [`MarketModel`] whose invariants have been checked. Immutable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedModel(MarketModel);

impl ValidatedModel {
    pub fn model(&self) -> &MarketModel {
        &self.0
    }

    pub fn params(&self, regime: Regime) -> &RegimeParams {
        self.0.params(regime)
    }

    pub fn exit_intensity(&self, regime: Regime) -> f64 {
        self.0.exit_intensity(regime)
    }

    pub fn sigma_max(&self) -> f64 {
        self.0.regime1.sigma.max(self.0.regime2.sigma)
    }

    pub fn r_max(&self) -> f64 {
        self.0.regime1.r.max(self.0.regime2.r)
    }

    pub fn swapped(&self) -> ValidatedModel {
        ValidatedModel(self.0.swapped())
    }
}

fn check_regime(params: &RegimeParams, prefix: &str) -> Result<()> {
    if !params.r.is_finite() || params.r <= 0.0 {
        return Err(Error::invalid(
            format!("{prefix}.r"),
            "rate must be positive",
        ));
    }
    if !params.sigma.is_finite() || params.sigma <= 0.0 {
        return Err(Error::invalid(
            format!("{prefix}.sigma"),
            "sigma must be positive",
        ));
    }
    if let Some(mu) = params.mu {
        if !mu.is_finite() {
            return Err(Error::invalid(format!("{prefix}.mu"), "mu must be finite"));
        }
    }
    Ok(())
}

/// Checks every model invariant and freezes the model.
pub fn validate_model(model: MarketModel) -> Result<ValidatedModel> {
    check_regime(&model.regime1, "regime1")?;
    check_regime(&model.regime2, "regime2")?;
    for (name, value) in [("lambda12", model.lambda12), ("lambda21", model.lambda21)] {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::invalid(name, "intensity must be nonnegative"));
        }
    }
    Ok(ValidatedModel(model))
}

/// Contract style.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptionStyle {
    /// Pays `Y_T - S_T`.
    FloatingStrikePut,
    /// Fixed-strike call on the running maximum, priced through parity.
    FixedStrikeCall { strike: f64 },
}

/// What to price: market state at valuation time plus the contract.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LookbackQuery {
    /// Spot price.
    pub s: f64,
    /// Running maximum observed so far.
    pub y: f64,
    /// Valuation time, years.
    pub t: f64,
    /// Expiry, years.
    pub expiry: f64,
    pub regime: Regime,
    pub style: OptionStyle,
}

impl LookbackQuery {
    pub fn floating(s: f64, y: f64, t: f64, expiry: f64, regime: Regime) -> Self {
        LookbackQuery {
            s,
            y,
            t,
            expiry,
            regime,
            style: OptionStyle::FloatingStrikePut,
        }
    }

    pub fn tau(&self) -> f64 {
        self.expiry - self.t
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s.is_finite() && self.s > 0.0) {
            return Err(Error::invalid("s", "spot must be positive"));
        }
        if !(self.y.is_finite() && self.y >= self.s) {
            return Err(Error::invalid(
                "y",
                "running maximum must be at least the spot",
            ));
        }
        if !(self.t.is_finite() && self.t >= 0.0) {
            return Err(Error::invalid("t", "valuation time must be nonnegative"));
        }
        if !(self.expiry.is_finite() && self.expiry > self.t) {
            return Err(Error::invalid("T", "expiry must be after valuation time"));
        }
        if let OptionStyle::FixedStrikeCall { strike } = self.style {
            if !(strike.is_finite() && strike >= 0.0) {
                return Err(Error::invalid("strike", "strike must be nonnegative"));
            }
        }
        Ok(())
    }
}

/// Coordinates of the dimension-reduced problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedCoordinates {
    /// `ln(y/s)`.
    pub z: f64,
    /// Time to expiry.
    pub tau: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

/// Maps a query onto the reduced `(τ, z)` problem.
pub fn reduce(query: &LookbackQuery, model: &ValidatedModel) -> Result<ReducedCoordinates> {
    query.validate()?;
    let p1 = model.params(Regime::One);
    let p2 = model.params(Regime::Two);
    Ok(ReducedCoordinates {
        z: (query.y / query.s).ln(),
        tau: query.tau(),
        alpha1: p1.alpha(),
        alpha2: p2.alpha(),
        kappa1: p1.kappa(),
        kappa2: p2.kappa(),
    })
}

/// Regime-wise Esscher parameter `(r - μ)/σ` selecting the risk-neutral measure.
///
/// Informational: pricing uses the risk-neutral drift `r` directly.
pub fn esscher_parameter(regime: &RegimeParams) -> Result<f64> {
    let mu = regime.mu.ok_or(Error::MissingParameter("mu"))?;
    if !(regime.sigma > 0.0) {
        return Err(Error::invalid("sigma", "sigma must be positive"));
    }
    Ok((regime.r - mu) / regime.sigma)
}
