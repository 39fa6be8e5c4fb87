//! Floating- and fixed-strike lookback option pricing when the underlying follows a
//! two-state Markov-modulated geometric Brownian motion.
//!
//! The main engine ([`ham`]) expands the regime-coupled pricing system as a homotopy
//! series seeded by the single-regime closed form ([`bs_lookback`]); each series term is
//! a Green's-function convolution of the previous order's regime difference. Two
//! independent oracles ([`oracles`]) price the same contract by path simulation and by a
//! Crank–Nicolson solve of the coupled PDE system.

pub mod bs_lookback;
pub mod error;
pub mod ham;
pub mod model;
pub mod oracles;

pub use error::{Error, Result};
pub use ham::{
    parity_adjustment, price_fixed, price_floating, HamPricer, NormalizationMode, NumericsConfig, ParityMode,
    PriceReport,
};
pub use model::{
    esscher_parameter, reduce, validate_model, LookbackQuery, MarketModel, OptionStyle,
    ReducedCoordinates, Regime, RegimeParams, ValidatedModel,
};
