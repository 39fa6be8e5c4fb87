//! Independent reference pricers: path simulation and finite differences.
//!
//! Neither shares numerical machinery with the series engine, so agreement between the
//! three is meaningful evidence.

pub mod fd;
pub mod mc;

pub use fd::{fd_price, fd_price_with, regime_bond_prices, FdGrid, FdSettings};
pub use mc::{
    mc_price, pairwise_sum, simulate_price_and_max, simulate_regime_path, McEstimate, McSettings,
    RegimePath,
};
