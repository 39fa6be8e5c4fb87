//! Single-regime floating-strike lookback put (Goldman–Sosin–Gatto) in reduced units.
//!
//! `u0(z, τ)` is the put price divided by spot, with `z = ln(y/s)`. It seeds the
//! homotopy series and doubles as a standalone Black–Scholes lookback pricer.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::model::RegimeParams;

/// Rates below this are refused: the `σ²/2r` factor loses all precision.
pub const MIN_RATE: f64 = 1e-6;

/// Standard normal CDF through the complementary error function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `ln N(x)`, accurate far into the left tail where `N(x)` underflows.
pub fn ln_std_normal_cdf(x: f64) -> f64 {
    if x > -30.0 {
        return std_normal_cdf(x).ln();
    }
    // Asymptotic Mills-ratio series; at |x| >= 30 five terms reach f64 precision.
    let x2 = x * x;
    let inv = 1.0 / x2;
    let series = 1.0 - inv * (1.0 - 3.0 * inv * (1.0 - 5.0 * inv * (1.0 - 7.0 * inv)));
    -0.5 * x2 - (-x).ln() - 0.5 * (2.0 * PI).ln() + series.ln()
}

/// `e^a · N(x)` without overflowing when `a` is large and `N(x)` small.
pub fn exp_times_cdf(a: f64, x: f64) -> f64 {
    if a < 700.0 && x > -37.0 {
        a.exp() * std_normal_cdf(x)
    } else {
        (a + ln_std_normal_cdf(x)).exp()
    }
}

/// The three distance-to-maximum terms of the closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DTerms {
    pub d_plus: f64,
    pub d_minus: f64,
    pub d_prime: f64,
}

pub fn d_terms(z: f64, r: f64, sigma: f64, tau: f64) -> DTerms {
    let vol = sigma * tau.sqrt();
    let half_var = 0.5 * sigma * sigma;
    let d_plus = (-z + (r + half_var) * tau) / vol;
    let d_minus = (-z + (r - half_var) * tau) / vol;
    DTerms {
        d_plus,
        d_minus,
        d_prime: d_plus - 2.0 * r / sigma * tau.sqrt(),
    }
}

/// Reduced floating-strike put value at `z = ln(y/s) ≥ 0`, `τ ≥ 0` time to expiry.
///
/// At `τ = 0` this is exactly the payoff `e^z − 1`.
pub fn u0(z: f64, tau: f64, regime: &RegimeParams) -> Result<f64> {
    let RegimeParams { r, sigma, .. } = *regime;
    if r < MIN_RATE {
        return Err(Error::NumericalDomain(format!(
            "rate {r} below {MIN_RATE}: closed-form lookback is ill-conditioned"
        )));
    }
    if tau == 0.0 {
        return Ok(z.exp_m1());
    }
    let d = d_terms(z, r, sigma, tau);
    let disc = -r * tau;
    let var_ratio = sigma * sigma / (2.0 * r);
    let maximum_leg = exp_times_cdf(z + disc, -d.d_minus);
    let spot_leg = std_normal_cdf(-d.d_plus);
    let reflection = exp_times_cdf(disc + z / var_ratio, d.d_prime);
    let value = maximum_leg - spot_leg + var_ratio * (std_normal_cdf(d.d_plus) - reflection);
    if !value.is_finite() {
        return Err(Error::NumericalFailure(format!(
            "non-finite lookback value at z={z}, tau={tau}"
        )));
    }
    Ok(value.max(0.0))
}

/// Floating-strike lookback put price in currency: `s · u0(ln(y/s), τ)`.
pub fn gsg_price(s: f64, y: f64, tau: f64, regime: &RegimeParams) -> Result<f64> {
    if !(s > 0.0 && y >= s) {
        return Err(Error::invalid("y", "require 0 < s <= y"));
    }
    Ok(s * u0((y / s).ln(), tau, regime)?)
}
