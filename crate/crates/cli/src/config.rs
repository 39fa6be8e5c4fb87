//! Run configuration: `[section]` headers with `key = value` lines (a TOML subset).
//!
//! Every key is checked against the schema, so a typo is a line-precise error rather than
//! a silently ignored setting. [`RunConfig::to_toml`] writes the fully resolved
//! configuration, defaults included, and that text parses back to the same value.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use regime_lookback::oracles::{FdSettings, McSettings};
use regime_lookback::{
    validate_model, LookbackQuery, MarketModel, NormalizationMode, NumericsConfig, OptionStyle,
    ParityMode, Regime, RegimeParams, ValidatedModel,
};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Text,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub format: OutputFormat,
    pub path: Option<PathBuf>,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ValidatedModel,
    pub query: LookbackQuery,
    pub numerics: NumericsConfig,
    pub mc: McSettings,
    pub fd: FdSettings,
    pub output: OutputSpec,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: Option<RawModel>,
    query: Option<RawQuery>,
    #[serde(default)]
    numerics: RawNumerics,
    #[serde(default)]
    mc: RawMc,
    #[serde(default)]
    fd: RawFd,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    r1: Option<f64>,
    sigma1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu1: Option<f64>,
    r2: Option<f64>,
    sigma2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu2: Option<f64>,
    lambda12: Option<f64>,
    lambda21: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQuery {
    s: Option<f64>,
    y: Option<f64>,
    t: Option<f64>,
    #[serde(rename = "T")]
    expiry: Option<f64>,
    regime: Option<u8>,
    style: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    strike: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    order_max: Option<usize>,
    n_tau: Option<usize>,
    n_z: Option<usize>,
    z_max_sigmas: Option<f64>,
    quad_nodes: Option<usize>,
    n_panels_u: Option<usize>,
    n_panels_xi: Option<usize>,
    graded_levels: Option<usize>,
    series_tol: Option<f64>,
    normalization_mode: Option<String>,
    parity_mode: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMc {
    n_paths: Option<usize>,
    seed: Option<u64>,
    steps_per_year: Option<f64>,
    bridge: Option<bool>,
    antithetic: Option<bool>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFd {
    n_tau: Option<usize>,
    n_z: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    z_max: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    format: Option<OutputFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<PathBuf>,
}

fn required(section: &str, key: &str, value: Option<f64>) -> Result<f64> {
    value.ok_or_else(|| CliError::Config(format!("[{section}] missing required key '{key}'")))
}

/// Largest seed that survives a round trip through the config format.
pub const MAX_SEED: u64 = i64::MAX as u64;

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_owned()))?;

        let m = raw.model.ok_or_else(|| CliError::Config("missing [model] section".into()))?;
        let regime = |r: Option<f64>, sigma: Option<f64>, mu: Option<f64>, n: u8| -> Result<RegimeParams> {
            let p = RegimeParams::new(
                required("model", &format!("r{n}"), r)?,
                required("model", &format!("sigma{n}"), sigma)?,
            );
            Ok(match mu {
                Some(mu) => p.with_mu(mu),
                None => p,
            })
        };
        let model = validate_model(MarketModel {
            regime1: regime(m.r1, m.sigma1, m.mu1, 1)?,
            regime2: regime(m.r2, m.sigma2, m.mu2, 2)?,
            lambda12: required("model", "lambda12", m.lambda12)?,
            lambda21: required("model", "lambda21", m.lambda21)?,
        })?;

        let q = raw.query.ok_or_else(|| CliError::Config("missing [query] section".into()))?;
        let label = q.regime.ok_or_else(|| CliError::Config("[query] missing required key 'regime'".into()))?;
        let style = match q.style.as_deref().unwrap_or("floating") {
            "floating" => {
                if q.strike.is_some() {
                    return Err(CliError::Config("[query] 'strike' only applies to style = \"fixed\"".into()));
                }
                OptionStyle::FloatingStrikePut
            }
            "fixed" => OptionStyle::FixedStrikeCall {
                strike: required("query", "strike", q.strike)?,
            },
            other => {
                return Err(CliError::Config(format!(
                    "[query] style must be \"floating\" or \"fixed\", got \"{other}\""
                )))
            }
        };
        let query = LookbackQuery {
            s: required("query", "s", q.s)?,
            y: required("query", "y", q.y)?,
            t: q.t.unwrap_or(0.0),
            expiry: required("query", "T", q.expiry)?,
            regime: Regime::from_label(label)?,
            style,
        };
        query.validate()?;

        let n = raw.numerics;
        let d = NumericsConfig::default();
        let numerics = NumericsConfig {
            order_max: n.order_max.unwrap_or(d.order_max),
            n_tau: n.n_tau.unwrap_or(d.n_tau),
            n_z: n.n_z.unwrap_or(d.n_z),
            z_max_sigmas: n.z_max_sigmas.unwrap_or(d.z_max_sigmas),
            quad_nodes: n.quad_nodes.unwrap_or(d.quad_nodes),
            n_panels_u: n.n_panels_u.unwrap_or(d.n_panels_u),
            n_panels_xi: n.n_panels_xi.unwrap_or(d.n_panels_xi),
            graded_levels: n.graded_levels.unwrap_or(d.graded_levels),
            series_tol: n.series_tol.unwrap_or(d.series_tol),
            normalization_mode: match n.normalization_mode {
                Some(s) => s.parse::<NormalizationMode>()?,
                None => d.normalization_mode,
            },
            parity_mode: match n.parity_mode {
                Some(s) => s.parse::<ParityMode>()?,
                None => d.parity_mode,
            },
        };
        numerics.validate()?;

        let dm = McSettings::default();
        let mc = McSettings {
            n_paths: raw.mc.n_paths.unwrap_or(dm.n_paths),
            seed: raw.mc.seed.unwrap_or(dm.seed),
            steps_per_year: raw.mc.steps_per_year.unwrap_or(dm.steps_per_year),
            bridge: raw.mc.bridge.unwrap_or(dm.bridge),
            antithetic: raw.mc.antithetic.unwrap_or(dm.antithetic),
            parallel: true,
        };
        if mc.n_paths < 2 {
            return Err(CliError::Config("[mc] n_paths must be at least 2".into()));
        }
        if !(mc.steps_per_year > 0.0) {
            return Err(CliError::Config("[mc] steps_per_year must be positive".into()));
        }
        if mc.seed > MAX_SEED {
            return Err(CliError::Config(format!("[mc] seed must be at most {MAX_SEED}")));
        }

        let df = FdSettings::default();
        let fd = FdSettings {
            n_tau: raw.fd.n_tau.unwrap_or(df.n_tau),
            n_z: raw.fd.n_z.unwrap_or(df.n_z),
            z_max: raw.fd.z_max.or(df.z_max),
        };

        let output = OutputSpec {
            format: raw.output.format.unwrap_or(OutputFormat::Text),
            path: raw.output.path,
        };
        Ok(RunConfig { model, query, numerics, mc, fd, output })
    }

    /// Resolved configuration in the input format.
    pub fn to_toml(&self) -> String {
        let p1 = self.model.params(Regime::One);
        let p2 = self.model.params(Regime::Two);
        let (style, strike) = match self.query.style {
            OptionStyle::FloatingStrikePut => ("floating", None),
            OptionStyle::FixedStrikeCall { strike } => ("fixed", Some(strike)),
        };
        let n = &self.numerics;
        let raw = RawConfig {
            model: Some(RawModel {
                r1: Some(p1.r),
                sigma1: Some(p1.sigma),
                mu1: p1.mu,
                r2: Some(p2.r),
                sigma2: Some(p2.sigma),
                mu2: p2.mu,
                lambda12: Some(self.model.exit_intensity(Regime::One)),
                lambda21: Some(self.model.exit_intensity(Regime::Two)),
            }),
            query: Some(RawQuery {
                s: Some(self.query.s),
                y: Some(self.query.y),
                t: Some(self.query.t),
                expiry: Some(self.query.expiry),
                regime: Some(self.query.regime.label()),
                style: Some(style.into()),
                strike,
            }),
            numerics: RawNumerics {
                order_max: Some(n.order_max),
                n_tau: Some(n.n_tau),
                n_z: Some(n.n_z),
                z_max_sigmas: Some(n.z_max_sigmas),
                quad_nodes: Some(n.quad_nodes),
                n_panels_u: Some(n.n_panels_u),
                n_panels_xi: Some(n.n_panels_xi),
                graded_levels: Some(n.graded_levels),
                series_tol: Some(n.series_tol),
                normalization_mode: Some(n.normalization_mode.to_string()),
                parity_mode: Some(n.parity_mode.to_string()),
            },
            mc: RawMc {
                n_paths: Some(self.mc.n_paths),
                seed: Some(self.mc.seed),
                steps_per_year: Some(self.mc.steps_per_year),
                bridge: Some(self.mc.bridge),
                antithetic: Some(self.mc.antithetic),
            },
            fd: RawFd {
                n_tau: Some(self.fd.n_tau),
                n_z: Some(self.fd.n_z),
                z_max: self.fd.z_max,
            },
            output: RawOutput {
                format: Some(self.output.format),
                path: self.output.path.clone(),
            },
        };
        toml::to_string(&raw).expect("resolved config is always serialisable")
    }
}

/// Documented defaults, rendered into the help text from the engines' own defaults.
pub fn defaults_table() -> String {
    let n = NumericsConfig::default();
    let mc = McSettings::default();
    let fd = FdSettings::default();
    let rows: Vec<(&str, String, &str)> = vec![
        ("query.t", "0".into(), "valuation time (years)"),
        ("query.style", "floating".into(), "floating | fixed (fixed needs strike)"),
        ("numerics.order_max", n.order_max.to_string(), "highest series order"),
        ("numerics.n_tau", n.n_tau.to_string(), "term-grid nodes in sqrt(tau)"),
        ("numerics.n_z", n.n_z.to_string(), "term-grid nodes in z"),
        ("numerics.z_max_sigmas", n.z_max_sigmas.to_string(), "domain / kernel window multiplier"),
        ("numerics.quad_nodes", n.quad_nodes.to_string(), "Gauss-Legendre nodes per panel"),
        ("numerics.n_panels_u", n.n_panels_u.to_string(), "time panels per grid cell"),
        ("numerics.n_panels_xi", n.n_panels_xi.to_string(), "space panels per grid cell"),
        ("numerics.graded_levels", n.graded_levels.to_string(), "geometric splits towards u = tau"),
        ("numerics.series_tol", format!("{:e}", n.series_tol), "relative last-term tolerance"),
        ("numerics.normalization_mode", n.normalization_mode.to_string(), "plain-sum | as-stated"),
        ("numerics.parity_mode", n.parity_mode.to_string(), "as-stated | standard"),
        ("mc.n_paths", mc.n_paths.to_string(), "simulated paths"),
        ("mc.seed", mc.seed.to_string(), "base seed, one stream per path"),
        ("mc.steps_per_year", mc.steps_per_year.to_string(), "sub-steps for bridge maxima"),
        ("mc.bridge", mc.bridge.to_string(), "sample maxima between sub-steps"),
        ("mc.antithetic", mc.antithetic.to_string(), "antithetic pairs"),
        ("fd.n_tau", fd.n_tau.to_string(), "time steps"),
        ("fd.n_z", fd.n_z.to_string(), "space intervals"),
        ("fd.z_max", "z + 8 sigma_max sqrt(tau) + drift".into(), "upper end of the z domain"),
        ("output.format", "text".into(), "text | csv"),
        ("output.path", "stdout".into(), "overridden by --output"),
    ];
    let mut out = String::from("Defaults (keys not set in the config file):\n");
    for (key, value, what) in rows {
        out.push_str(&format!("  {key:<28} {value:<34} {what}\n"));
    }
    out.push_str("\nRequired: [model] r1 sigma1 r2 sigma2 lambda12 lambda21 (mu1, mu2 optional);\n");
    out.push_str("          [query] s y T regime (1 or 2).\n");
    out.push_str("\nExit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 validation disagreement.");
    out
}
