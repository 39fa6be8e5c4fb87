//! The four subcommands. Each returns the rendered report plus an optional failure that
//! is reported after the output has been written (validation disagreements still print
//! their table).

use clap::ValueEnum;

use regime_lookback::oracles::{fd_price_with, mc_price};
use regime_lookback::{
    parity_adjustment, reduce, validate_model, HamPricer, LookbackQuery, MarketModel, OptionStyle,
    Regime, ValidatedModel,
};

use crate::config::{OutputFormat, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{sig12, Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Ham,
    Mc,
    Fd,
}

impl Engine {
    fn label(self) -> &'static str {
        match self {
            Engine::Ham => "ham",
            Engine::Mc => "mc",
            Engine::Fd => "fd",
        }
    }
}

/// Rendered output and an optional deferred failure.
pub struct Outcome {
    pub text: String,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, failure: None }
    }
}

/// MC relative-disagreement threshold in standard errors.
pub const MC_TOLERANCE_SE: f64 = 3.0;
/// FD relative-disagreement threshold.
pub const FD_TOLERANCE_REL: f64 = 5e-3;

fn fixed_adjustment(cfg: &RunConfig, query: &LookbackQuery, model: &ValidatedModel) -> f64 {
    match query.style {
        OptionStyle::FloatingStrikePut => 0.0,
        OptionStyle::FixedStrikeCall { strike } => {
            parity_adjustment(query, model, strike, cfg.numerics.parity_mode)
        }
    }
}

fn with_echo(cfg: &RunConfig, body: String) -> String {
    match cfg.output.format {
        OutputFormat::Csv => body,
        OutputFormat::Text => format!("{body}\n# resolved configuration\n{}", cfg.to_toml()),
    }
}

struct EnginePrice {
    price: f64,
    std_error: Option<f64>,
}

fn run_engine(cfg: &RunConfig, engine: Engine) -> Result<EnginePrice> {
    let (query, model) = (&cfg.query, &cfg.model);
    let adjust = fixed_adjustment(cfg, query, model);
    Ok(match engine {
        Engine::Ham => {
            let report = HamPricer::new(cfg.numerics)?.price_floating(query, model)?;
            EnginePrice { price: report.price + adjust, std_error: None }
        }
        Engine::Mc => {
            let est = mc_price(query, model, &cfg.mc)?;
            EnginePrice { price: est.mean + adjust, std_error: Some(est.std_error) }
        }
        Engine::Fd => {
            let (_, price) = fd_price_with(query, model, &cfg.fd)?;
            EnginePrice { price: price + adjust, std_error: None }
        }
    })
}

pub fn price(cfg: &RunConfig, engine: Engine) -> Result<Outcome> {
    let (query, model) = (&cfg.query, &cfg.model);
    let adjust = fixed_adjustment(cfg, query, model);
    let regime = query.regime.label();
    if engine != Engine::Ham {
        let p = run_engine(cfg, engine)?;
        return Ok(Outcome::ok(match cfg.output.format {
            OutputFormat::Csv => {
                let mut t = Table::new(vec!["engine", "regime", "price", "std_error", "truncation_estimate"]);
                t.push(vec![
                    engine.label().into(),
                    Cell::Int(regime.into()),
                    p.price.into(),
                    p.std_error.map_or(Cell::Empty, Cell::Num),
                    Cell::Empty,
                ]);
                t.to_csv()
            }
            OutputFormat::Text => {
                let mut out = format!("engine: {}\nregime: {regime}\nprice: {}\n", engine.label(), sig12(p.price));
                if let Some(se) = p.std_error {
                    out.push_str(&format!(
                        "std_error: {}\nn_paths: {}\nseed: {}\n",
                        sig12(se),
                        cfg.mc.n_paths,
                        cfg.mc.seed
                    ));
                }
                with_echo(cfg, out)
            }
        }));
    }

    let report = HamPricer::new(cfg.numerics)?.price_floating(query, model)?;
    let price = report.price + adjust;
    Ok(Outcome::ok(match cfg.output.format {
        OutputFormat::Csv => {
            let mut t = Table::new(vec!["engine", "regime", "price", "std_error", "truncation_estimate"]);
            t.push(vec![
                "ham".into(),
                Cell::Int(regime.into()),
                price.into(),
                Cell::Empty,
                report.truncation_estimate.into(),
            ]);
            t.to_csv()
        }
        OutputFormat::Text => {
            let mut out = format!(
                "engine: ham\nregime: {regime}\nprice: {}\nreduced_value: {}\ntruncation_estimate: {}\nconverged: {}\n",
                sig12(price),
                sig12(price / query.s),
                sig12(report.truncation_estimate),
                report.converged
            );
            if let Some(mu) = model.params(query.regime).mu {
                let theta = regime_lookback::esscher_parameter(&model.params(query.regime).with_mu(mu))?;
                out.push_str(&format!("esscher_parameter: {}\n", sig12(theta)));
            }
            out.push_str(&format!("term magnitudes (regime {regime}):\n"));
            for (m, c) in report.term_magnitudes.iter().enumerate() {
                out.push_str(&format!("  order {m:>3}  {}\n", sig12(*c)));
            }
            for w in &report.warnings {
                out.push_str(&format!("warning: {w}\n"));
            }
            with_echo(cfg, out)
        }
    }))
}

pub fn converge(cfg: &RunConfig, max_order: usize) -> Result<Outcome> {
    let numerics = regime_lookback::NumericsConfig { order_max: max_order, ..cfg.numerics };
    let pricer = HamPricer::new(numerics)?;
    let coords = reduce(&cfg.query, &cfg.model)?;
    let solution = pricer.solve(&cfg.model, coords.tau, coords.z)?;
    let sums: Vec<Vec<f64>> = Regime::BOTH
        .iter()
        .map(|&r| {
            let value = solution.series_at(r, coords.tau, coords.z)?;
            let query = LookbackQuery { regime: r, ..cfg.query };
            let adjust = fixed_adjustment(cfg, &query, &cfg.model);
            Ok(value.partial_sums().iter().map(|u| cfg.query.s * u + adjust).collect())
        })
        .collect::<Result<_>>()?;
    let own = solution.series_at(cfg.query.regime, coords.tau, coords.z)?;
    let mut t = Table::new(vec!["order", "price_regime1", "price_regime2", "last_term_magnitude"]);
    for m in 0..=max_order {
        t.push(vec![
            Cell::Int(m as u64),
            sums[0][m].into(),
            sums[1][m].into(),
            (cfg.query.s * own.contributions[m].abs()).into(),
        ]);
    }
    Ok(Outcome::ok(with_echo(cfg, t.render(cfg.output.format))))
}

pub fn validate(cfg: &RunConfig) -> Result<Outcome> {
    let ham = run_engine(cfg, Engine::Ham)?;
    let mc = run_engine(cfg, Engine::Mc)?;
    let fd = run_engine(cfg, Engine::Fd)?;
    let mut t = Table::new(vec!["engine", "price", "error_vs_ham", "mc_std_error"]);
    let mut problems = Vec::new();
    for (engine, p) in [(Engine::Ham, &ham), (Engine::Mc, &mc), (Engine::Fd, &fd)] {
        let error = p.price - ham.price;
        t.push(vec![
            engine.label().into(),
            p.price.into(),
            error.into(),
            p.std_error.map_or(Cell::Empty, Cell::Num),
        ]);
        match engine {
            Engine::Mc => {
                let se = p.std_error.unwrap_or(0.0);
                if error.abs() > MC_TOLERANCE_SE * se {
                    problems.push(format!(
                        "mc differs from ham by {:.2} standard errors (limit {MC_TOLERANCE_SE})",
                        error.abs() / se
                    ));
                }
            }
            Engine::Fd => {
                let rel = error.abs() / ham.price.abs();
                if !(rel <= FD_TOLERANCE_REL) {
                    problems.push(format!("fd differs from ham by {rel:.2e} relative (limit {FD_TOLERANCE_REL:e})"));
                }
            }
            Engine::Ham => {}
        }
    }
    Ok(Outcome {
        text: with_echo(cfg, t.render(cfg.output.format)),
        failure: (!problems.is_empty()).then(|| CliError::Disagreement(problems.join("; "))),
    })
}

/// Parameters that `table` can sweep.
pub const SWEEPABLE: [&str; 7] = ["s", "y", "T", "sigma1", "sigma2", "lambda12", "lambda21"];

pub fn table(cfg: &RunConfig, sweep: &str, values: &[f64]) -> Result<Outcome> {
    if !SWEEPABLE.contains(&sweep) {
        return Err(CliError::Config(format!(
            "cannot sweep '{sweep}'; choose one of {}",
            SWEEPABLE.join(", ")
        )));
    }
    let pricer = HamPricer::new(cfg.numerics)?;
    let mut t = Table::new(vec!["sweep_value", "price", "truncation_estimate"]);
    for &v in values {
        let mut model: MarketModel = *cfg.model.model();
        let mut query = cfg.query;
        match sweep {
            "s" => query.s = v,
            "y" => query.y = v,
            "T" => query.expiry = v,
            "sigma1" => model.regime1.sigma = v,
            "sigma2" => model.regime2.sigma = v,
            "lambda12" => model.lambda12 = v,
            "lambda21" => model.lambda21 = v,
            _ => unreachable!("checked against SWEEPABLE"),
        }
        let model = validate_model(model)?;
        query.validate()?;
        let report = pricer.price_floating(&query, &model)?;
        let price = report.price + fixed_adjustment(cfg, &query, &model);
        t.push(vec![v.into(), price.into(), report.truncation_estimate.into()]);
    }
    Ok(Outcome::ok(with_echo(cfg, t.render(cfg.output.format))))
}
