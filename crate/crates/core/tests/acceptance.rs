//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Runs without the libtest harness so the summary lines are always visible.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use regime_lookback::bs_lookback::gsg_price;
use regime_lookback::ham::green::{green_kernel, robin_term};
use regime_lookback::ham::quadrature::GaussLegendre;
use regime_lookback::oracles::fd::solve as fd_solve;
use regime_lookback::oracles::{fd_price_with, mc_price, FdSettings, McSettings};
use regime_lookback::{
    reduce, validate_model, HamPricer, LookbackQuery, MarketModel, NumericsConfig, OptionStyle,
    Regime, RegimeParams, ValidatedModel,
};

const S: f64 = 100.0;
const Y: f64 = 100.0;
const T: f64 = 1.0;
const MC_PATHS: usize = 1_000_000;
const LAMBDAS: [f64; 3] = [0.5, 1.0, 5.0];
const SIGMA_PAIRS: [(f64, f64); 3] = [(0.2, 0.3), (0.2, 0.4), (0.15, 0.35)];

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

fn model(r: (f64, f64), sigma: (f64, f64), l12: f64, l21: f64) -> ValidatedModel {
    validate_model(MarketModel {
        regime1: RegimeParams::new(r.0, sigma.0),
        regime2: RegimeParams::new(r.1, sigma.1),
        lambda12: l12,
        lambda21: l21,
    })
    .expect("valid model")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// The 3×3 acceptance matrix, as (label, model) pairs.
fn matrix() -> Vec<(String, ValidatedModel)> {
    let mut out = Vec::new();
    for &pair in &SIGMA_PAIRS {
        for &lambda in &LAMBDAS {
            out.push((
                format!("σ=({},{}) λ={lambda}", pair.0, pair.1),
                model((0.05, 0.03), pair, lambda, lambda),
            ));
        }
    }
    out
}

fn query(regime: Regime) -> LookbackQuery {
    LookbackQuery::floating(S, Y, 0.0, T, regime)
}

/// Matrix prices from the default engine, shared by several criteria.
struct MatrixPrices {
    ham: Vec<[f64; 2]>,
    elapsed: Duration,
}

fn matrix_prices(pricer: &HamPricer) -> MatrixPrices {
    let start = Instant::now();
    let ham = matrix()
        .iter()
        .map(|(_, m)| {
            let p = |r| pricer.price_floating(&query(r), m).expect("ham price").price;
            [p(Regime::One), p(Regime::Two)]
        })
        .collect();
    MatrixPrices { ham, elapsed: start.elapsed() }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let pricer = HamPricer::new(NumericsConfig::default()).unwrap();
    let mut worst = 0.0f64;
    let mut zero_terms = true;
    for lambda in [0.0, 1.0, 5.0] {
        let m = model((0.05, 0.05), (0.2, 0.2), lambda, lambda);
        let exact = gsg_price(S, Y, T, m.params(Regime::One)).unwrap();
        for regime in Regime::BOTH {
            let price = pricer.price_floating(&query(regime), &m).unwrap().price;
            worst = worst.max(rel(price, exact));
        }
        let coords = reduce(&query(Regime::One), &m).unwrap();
        let sol = pricer.solve(&m, coords.tau, coords.z).unwrap();
        zero_terms &= sol.terms[1..].iter().flatten().all(|g| g.is_identically_zero());
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst <= 1e-8 && zero_terms && elapsed < Duration::from_secs(5),
        format!("max rel err {worst:.2e}, higher terms zero: {zero_terms}, {elapsed:.2?}"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let pricer = HamPricer::new(NumericsConfig::default()).unwrap();
    let mut worst = 0.0f64;
    for &pair in &SIGMA_PAIRS {
        let m = model((0.05, 0.03), pair, 0.0, 0.0);
        for regime in Regime::BOTH {
            let price = pricer.price_floating(&query(regime), &m).unwrap().price;
            let exact = gsg_price(S, Y, T, m.params(regime)).unwrap();
            worst = worst.max(rel(price, exact));
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst <= 1e-8 && elapsed < Duration::from_secs(5),
        format!("max rel err {worst:.2e}, {elapsed:.2?}"),
    )
}

fn criterion_3(prices: &MatrixPrices) -> Outcome {
    let start = Instant::now();
    let mut worst_fd = 0.0f64;
    let mut worst_mc = 0.0f64;
    for ((label, m), ham) in matrix().iter().zip(&prices.ham) {
        for regime in Regime::BOTH {
            let q = query(regime);
            let h = ham[regime.idx()];
            let (_, fd) = fd_price_with(&q, m, &FdSettings::default()).unwrap();
            let settings = McSettings { n_paths: MC_PATHS, seed: 20_240_601, ..Default::default() };
            let mc = mc_price(&q, m, &settings).unwrap();
            let z_mc = (h - mc.mean).abs() / mc.std_error;
            worst_fd = worst_fd.max(rel(h, fd));
            worst_mc = worst_mc.max(z_mc);
            println!(
                "    {label} regime {}: ham {h:.6} fd {fd:.6} mc {:.6} ± {:.6} ({z_mc:.2} se)",
                regime.label(),
                mc.mean,
                mc.std_error
            );
        }
    }
    let elapsed = prices.elapsed + start.elapsed();
    Outcome::new(
        worst_fd <= 5e-3 && worst_mc <= 3.0 && elapsed < Duration::from_secs(600),
        format!("max |ham−fd|/fd {worst_fd:.2e}, max |ham−mc| {worst_mc:.2} se, {elapsed:.1?}"),
    )
}

fn criterion_4(pricer: &HamPricer) -> Outcome {
    let h = 1e-3;
    let mut worst = 0.0f64;
    for (_, m) in matrix() {
        let coords = reduce(&query(Regime::One), &m).unwrap();
        let sol = pricer.solve(&m, coords.tau, coords.z).unwrap();
        for regime in Regime::BOTH {
            let u = |z: f64| sol.series_at(regime, coords.tau, z).unwrap().value;
            let slope = (-3.0 * u(0.0) + 4.0 * u(h) - u(2.0 * h)) / (2.0 * h);
            worst = worst.max(slope.abs());
        }
    }
    Outcome::new(worst <= 1e-3, format!("max |∂U/∂z| at z=0: {worst:.2e}"))
}

fn criterion_5(pricer: &HamPricer) -> Outcome {
    let m = model((0.05, 0.03), (0.2, 0.4), 1.0, 1.0);
    let sol = pricer.solve(&m, T, 0.0).unwrap();
    let mut worst_ham = 0.0f64;
    for &z in sol.grid.z_nodes() {
        for regime in Regime::BOTH {
            let v = sol.series_at(regime, 0.0, z).unwrap().value;
            worst_ham = worst_ham.max((v - z.exp_m1()).abs());
        }
    }
    let fd = fd_solve(&m, T, 200, 800, 4.0).unwrap();
    let mut worst_fd = 0.0f64;
    for regime in Regime::BOTH {
        for (v, z) in fd.slice(regime, 0).iter().zip(&fd.z_nodes) {
            worst_fd = worst_fd.max((v - z.exp_m1()).abs());
        }
    }
    Outcome::new(
        worst_ham <= 1e-8 && worst_fd <= 1e-8,
        format!("max |U − g| at τ=0: ham {worst_ham:.1e}, fd {worst_fd:.1e}"),
    )
}

fn criterion_6() -> Outcome {
    let m = model((0.05, 0.03), (0.2, 0.4), 1.0, 1.0);
    let price = |k: usize| {
        let g = fd_solve(&m, T, 50 * k, 100 * k, 4.0).unwrap();
        g.value_at(Regime::One, T, 0.0)
    };
    let (p1, p2, p4) = (price(1), price(2), price(4));
    let ratio = (p1 - p2) / (p2 - p4);
    Outcome::new(
        (3.5..=4.5).contains(&ratio),
        format!("Richardson ratio {ratio:.3} (U: {p1:.8}, {p2:.8}, {p4:.8})"),
    )
}

fn criterion_7(prices: &MatrixPrices) -> Outcome {
    let refined = HamPricer::new(NumericsConfig::default().refined()).unwrap();
    let fine = matrix_prices(&refined);
    let worst = prices
        .ham
        .iter()
        .zip(&fine.ham)
        .flat_map(|(a, b)| [rel(a[0], b[0]), rel(a[1], b[1])])
        .fold(0.0f64, f64::max);
    Outcome::new(
        worst < 1e-7,
        format!("max rel change {worst:.2e} under doubled nodes and panels ({:.1?})", fine.elapsed),
    )
}

fn criterion_8() -> Outcome {
    let m = model((0.05, 0.03), (0.2, 0.4), 0.0, 0.0);
    let q = query(Regime::One);
    let exact = gsg_price(S, Y, T, m.params(Regime::One)).unwrap();
    let settings = McSettings { n_paths: MC_PATHS, seed: 7, ..Default::default() };
    let parallel = mc_price(&q, &m, &settings).unwrap();
    let serial = mc_price(&q, &m, &McSettings { parallel: false, ..settings }).unwrap();
    let z = (parallel.mean - exact).abs() / parallel.std_error;
    let identical = parallel.mean.to_bits() == serial.mean.to_bits()
        && parallel.std_error.to_bits() == serial.std_error.to_bits();
    Outcome::new(
        z <= 3.0 && identical,
        format!(
            "mc {:.6} ± {:.6} vs closed form {exact:.6} ({z:.2} se); serial == parallel: {identical}",
            parallel.mean, parallel.std_error
        ),
    )
}

/// `2κ ∫₀^∞ exp(κη) φ(z + ξ + η) dη` by panel Gauss–Legendre, with panels sized to
/// the integrand's own length scale.
fn robin_by_quadrature(t: f64, z: f64, xi: f64, sigma: f64, kappa: f64) -> f64 {
    let var = sigma * sigma * t;
    let sd = var.sqrt();
    let s = z + xi;
    let centre = kappa * var - s;
    let (lo, hi, scale) = if centre > 0.0 {
        ((centre - 14.0 * sd).max(0.0), centre + 14.0 * sd, sd)
    } else {
        // integrand decays from η = 0 at rate ≈ −centre/var
        let scale = sd.min(var / -centre);
        (0.0, 60.0 * scale, scale)
    };
    let gl = GaussLegendre::new(20);
    let panels = ((hi - lo) / (0.25 * scale)).ceil().max(1.0) as usize;
    let width = (hi - lo) / panels as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * var).sqrt();
    (0..panels)
        .map(|p| {
            let a = lo + p as f64 * width;
            gl.integrate(a, a + width, |eta| {
                (kappa * eta - (s + eta) * (s + eta) / (2.0 * var)).exp()
            })
        })
        .sum::<f64>()
        * 2.0
        * kappa
        * norm
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let t = rng.random_range(0.01..2.0);
        let z = rng.random_range(0.0..2.0);
        let xi = rng.random_range(0.0..2.0);
        let sigma = rng.random_range(0.1..0.5);
        let r = rng.random_range(0.01..0.1);
        let kappa = RegimeParams::new(r, sigma).kappa();
        let closed = robin_term(t, z, xi, sigma, kappa);
        let integral = robin_by_quadrature(t, z, xi, sigma, kappa);
        worst = worst.max(rel(closed, integral));
    }
    let (t, z, sigma, kappa) = (1e-4, 1.0, 0.2, 1.75);
    let w = sigma * f64::sqrt(t);
    let gl = GaussLegendre::new(20);
    let mass: f64 = (-48..48)
        .map(|k| {
            let a = z + 0.25 * w * k as f64;
            gl.integrate(a, a + 0.25 * w, |xi| green_kernel(t, z, xi, sigma, kappa))
        })
        .sum();
    let mass_err = (mass - 1.0).abs();
    Outcome::new(
        worst <= 1e-8 && mass_err <= 1e-6,
        format!("max rel err third term {worst:.2e}; |mass − 1| = {mass_err:.2e}"),
    )
}

fn criterion_10(pricer: &HamPricer) -> Outcome {
    let mut worst = 0.0f64;
    for (_, m) in matrix().into_iter().take(3) {
        for regime in Regime::BOTH {
            for strike in [0.0, 90.0, 100.0, 110.0] {
                let mut q = query(regime);
                let floating = pricer.price_floating(&q, &m).unwrap().price;
                q.style = OptionStyle::FixedStrikeCall { strike };
                let fixed = pricer.price_fixed(&q, &m).unwrap().price;
                let expect = strike * (-m.params(regime).r * T).exp();
                let ulps = ((fixed - floating) - expect).abs() / (f64::EPSILON * fixed.abs());
                worst = worst.max(ulps);
            }
        }
    }
    Outcome::new(worst <= 4.0, format!("max deviation {worst:.1} ulp of the fixed price"))
}

fn criterion_11(pricer: &HamPricer) -> Outcome {
    let ys = [100.0, 102.5, 105.0, 110.0];
    let z_top = (ys[ys.len() - 1] / S).ln();
    let mut ok = true;
    let mut min_margin = f64::INFINITY;
    for (label, m) in matrix() {
        let sol = pricer.solve(&m, T, z_top).unwrap();
        for regime in Regime::BOTH {
            let mut last = f64::NEG_INFINITY;
            for &y in &ys {
                let q = LookbackQuery::floating(S, y, 0.0, T, regime);
                let z = (y / S).ln();
                let price = pricer.report(&sol, &q, T, z).unwrap().price;
                let bound = ((-m.r_max() * T).exp() * y - S).max(0.0);
                min_margin = min_margin.min(price - bound);
                if price < bound || price < last {
                    ok = false;
                    println!("    violation: {label} regime {} y={y}: {price} (bound {bound}, prev {last})", regime.label());
                }
                last = price;
            }
        }
    }
    Outcome::new(ok, format!("nonnegative, above bound (min margin {min_margin:.4}), nondecreasing in y"))
}

fn main() -> ExitCode {
    let suite = Instant::now();
    let pricer = HamPricer::new(NumericsConfig::default()).expect("default config");
    let prices = matrix_prices(&pricer);
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("degenerate-regime collapse", Box::new(criterion_1)),
        ("zero-coupling collapse", Box::new(criterion_2)),
        ("three-way oracle agreement", Box::new(|| criterion_3(&prices))),
        ("boundary condition at z=0", Box::new(|| criterion_4(&pricer))),
        ("terminal condition", Box::new(|| criterion_5(&pricer))),
        ("FD self-convergence", Box::new(criterion_6)),
        ("HAM quadrature self-consistency", Box::new(|| criterion_7(&prices))),
        ("MC exactness and reproducibility", Box::new(criterion_8)),
        ("Green's-kernel identities", Box::new(criterion_9)),
        ("parity identity", Box::new(|| criterion_10(&pricer))),
        ("monotonicity and bounds", Box::new(|| criterion_11(&pricer))),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        if !outcome.pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} [{}] {name}: {}",
            i + 1,
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
    }
    println!(
        "acceptance: {} passed, {failures} failed ({:.1?})",
        criteria.len() - failures,
        suite.elapsed()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
