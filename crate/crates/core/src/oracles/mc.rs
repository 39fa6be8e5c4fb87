//! Path-simulation oracle under the risk-neutral regime-switching dynamics
//! `dS = r_X S dt + σ_X S dW`.
//!
//! Within a regime the log-price is sampled exactly, and the running maximum between
//! two sampled points is drawn from the Brownian-bridge maximum law, so the path
//! maximum carries no discretisation bias. Each path owns an independent ChaCha stream
//! keyed by its index, which makes serial and parallel runs bit-identical.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{reduce, LookbackQuery, Regime, ValidatedModel};

/// Realised regime trajectory on `[start, end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimePath {
    pub start: f64,
    pub end: f64,
    /// Interior switching times, increasing.
    pub switch_times: Vec<f64>,
    /// Regime of each holding interval; one more entry than `switch_times`.
    pub regimes: Vec<Regime>,
}

impl RegimePath {
    /// Holding intervals `(from, to, regime)` partitioning `[start, end]`.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64, Regime)> + '_ {
        let n = self.regimes.len();
        (0..n).map(move |k| {
            let from = if k == 0 { self.start } else { self.switch_times[k - 1] };
            let to = if k + 1 == n { self.end } else { self.switch_times[k] };
            (from, to, self.regimes[k])
        })
    }

    pub fn n_switches(&self) -> usize {
        self.switch_times.len()
    }

    /// `∫ r_{X_u} du` along the path, exact for the piecewise-constant rate.
    pub fn integrated_rate(&self, model: &ValidatedModel) -> f64 {
        self.intervals()
            .map(|(a, b, regime)| model.params(regime).r * (b - a))
            .sum()
    }
}

/// Samples the chain on `[t, maturity]` from `start` with exponential holding times.
pub fn simulate_regime_path<R: Rng + ?Sized>(
    model: &ValidatedModel,
    t: f64,
    maturity: f64,
    start: Regime,
    rng: &mut R,
) -> RegimePath {
    let mut switch_times = Vec::new();
    let mut regimes = vec![start];
    let mut now = t;
    let mut current = start;
    loop {
        let rate = model.exit_intensity(current);
        if rate <= 0.0 {
            break;
        }
        let u: f64 = rng.random();
        let hold = -(1.0 - u).ln() / rate;
        now += hold;
        if now >= maturity {
            break;
        }
        current = current.other();
        switch_times.push(now);
        regimes.push(current);
    }
    RegimePath {
        start: t,
        end: maturity,
        switch_times,
        regimes,
    }
}

/// Simulation controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    pub n_paths: usize,
    pub seed: u64,
    /// Sub-steps per year at which the log-price is sampled; bridge maxima fill the gaps.
    pub steps_per_year: f64,
    /// Sample the maximum between grid points from the bridge law.
    pub bridge: bool,
    /// Pair every path with its mirror `(−Z, U)`; `n_paths` then counts both members.
    pub antithetic: bool,
    pub parallel: bool,
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings {
            n_paths: 200_000,
            seed: 42,
            steps_per_year: 32.0,
            bridge: true,
            antithetic: false,
            parallel: true,
        }
    }
}

/// Terminal spot and running maximum along one path.
///
/// `normal_sign` flips every Gaussian increment, which produces the antithetic partner
/// when the same random stream is replayed.
pub fn simulate_price_and_max<R: Rng + ?Sized>(
    path: &RegimePath,
    model: &ValidatedModel,
    s: f64,
    y: f64,
    rng: &mut R,
    steps_per_year: f64,
    bridge: bool,
    normal_sign: f64,
) -> (f64, f64) {
    let mut log_s = s.ln();
    let mut log_max = y.ln();
    for (a, b, regime) in path.intervals() {
        let len = b - a;
        if len <= 0.0 {
            continue;
        }
        let p = model.params(regime);
        let steps = ((len * steps_per_year).ceil() as usize).max(1);
        let dt = len / steps as f64;
        let drift = (p.r - 0.5 * p.sigma * p.sigma) * dt;
        let vol = p.sigma * dt.sqrt();
        let bridge_var = 2.0 * p.sigma * p.sigma * dt;
        for _ in 0..steps {
            let z: f64 = rng.sample(StandardNormal);
            let next = log_s + drift + vol * normal_sign * z;
            let u: f64 = rng.random();
            let step_max = if bridge {
                let gap = next - log_s;
                0.5 * (log_s + next + (gap * gap - bridge_var * (1.0 - u).ln()).sqrt())
            } else {
                next
            };
            if step_max > log_max {
                log_max = step_max;
            }
            log_s = next;
        }
    }
    (log_s.exp(), log_max.exp())
}

/// Monte Carlo price and standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub seed: u64,
}

fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Discounted floating-strike payoff on sample `index` (or the mean of an antithetic pair).
fn sample(
    index: usize,
    query: &LookbackQuery,
    model: &ValidatedModel,
    settings: &McSettings,
) -> f64 {
    let run = |sign: f64| {
        let mut rng = path_rng(settings.seed, index as u64);
        let path = simulate_regime_path(model, query.t, query.expiry, query.regime, &mut rng);
        let (s_t, y_t) = simulate_price_and_max(
            &path,
            model,
            query.s,
            query.y,
            &mut rng,
            settings.steps_per_year,
            settings.bridge,
            sign,
        );
        (-path.integrated_rate(model)).exp() * (y_t - s_t)
    };
    if settings.antithetic {
        0.5 * (run(1.0) + run(-1.0))
    } else {
        run(1.0)
    }
}

/// Pairwise summation in a fixed split order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// `E[e^{−∫r}(Y_T − S_T)]` by simulation.
pub fn mc_price(
    query: &LookbackQuery,
    model: &ValidatedModel,
    settings: &McSettings,
) -> Result<McEstimate> {
    reduce(query, model)?;
    if settings.n_paths < 2 {
        return Err(Error::invalid("n_paths", "need at least two paths"));
    }
    if !(settings.steps_per_year > 0.0) {
        return Err(Error::invalid("steps_per_year", "must be positive"));
    }
    let n_samples = if settings.antithetic {
        settings.n_paths / 2
    } else {
        settings.n_paths
    };
    let draw = |i: usize| sample(i, query, model, settings);
    let samples: Vec<f64> = if settings.parallel {
        (0..n_samples).into_par_iter().map(draw).collect()
    } else {
        (0..n_samples).map(draw).collect()
    };
    let n = samples.len() as f64;
    let mean = pairwise_sum(&samples) / n;
    let squares: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
    let variance = pairwise_sum(&squares) / (n - 1.0);
    if !mean.is_finite() || !variance.is_finite() {
        return Err(Error::NumericalFailure("non-finite Monte Carlo estimate".into()));
    }
    Ok(McEstimate {
        mean,
        std_error: (variance / n).sqrt(),
        n_paths: settings.n_paths,
        seed: settings.seed,
    })
}
