//! Run configuration file.
//!
//! ```json
//! {
//!   "assets": [
//!     { "id": "ALPHA", "fundamentals": "alpha.csv", "prices": "alpha_prices.csv",
//!       "shares_outstanding": 100, "cashflow": "revenue_less_costs" }
//!   ],
//!   "nrr": { "rate": 0.10 },
//!   "simulation": { "n_samples": 2000, "seed": 7, "distribution": "normal",
//!                   "horizon": 20, "generator": "chacha20" },
//!   "wager_cap": 0.25,
//!   "ruin_cap": 0.8,
//!   "min_gb": 0.0,
//!   "output_dir": "out",
//!   "format": "json"
//! }
//! ```
//!
//! Relative paths are resolved against the directory holding the config.

use std::path::{Path, PathBuf};

use marginkit_core::fundamentals::NormalizeOptions;
use marginkit_core::kelly::{DEFAULT_EDGE_EPSILON, DEFAULT_WAGER_CAP};
use marginkit_core::montecarlo::{Distribution, Generator, SimulationConfig, StandardMap};
use marginkit_core::pipeline::PipelineConfig;
use marginkit_core::portfolio::DEFAULT_RUIN_CAP;
use marginkit_core::safety::DispersionMeasure;
use marginkit_core::valuation::{NrrConfig, DEFAULT_TAIL_TOLERANCE};
use marginkit_core::KellyConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Report file format.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetEntry {
    pub id: String,
    pub fundamentals: PathBuf,
    pub prices: PathBuf,
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default = "one")]
    pub shares_outstanding: f64,
    /// `revenue_less_costs` or `factor:<column>`.
    #[serde(default = "default_cashflow")]
    pub cashflow: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NrrSection {
    pub rate: f64,
    /// Must match `simulation.horizon` when given.
    #[serde(default)]
    pub horizon: Option<u32>,
    #[serde(default = "default_tail_tolerance")]
    pub tail_tolerance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub n_samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub distribution: Distribution,
    pub horizon: u32,
    #[serde(default = "default_generator")]
    pub generator: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub assets: Vec<AssetEntry>,
    pub nrr: NrrSection,
    pub simulation: SimulationSection,
    #[serde(default = "default_wager_cap")]
    pub wager_cap: f64,
    #[serde(default = "default_edge_epsilon")]
    pub edge_epsilon: f64,
    #[serde(default = "default_ruin_cap")]
    pub ruin_cap: f64,
    #[serde(default)]
    pub min_gb: f64,
    /// Number of trailing prices behind the dispersion.
    #[serde(default = "default_window")]
    pub dispersion_window: usize,
    #[serde(default)]
    pub dispersion_measure: DispersionMeasure,
    #[serde(default)]
    pub winsorize_growth: Option<f64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub format: Format,
    /// Also write every simulated price as a one-column CSV.
    #[serde(default)]
    pub dump_samples: bool,
    /// Points on each `price,wager` curve.
    #[serde(default = "default_curve_points")]
    pub curve_points: usize,
}

fn default_kind() -> String {
    "dynamic".into()
}
fn one() -> f64 {
    1.0
}
fn default_cashflow() -> String {
    "revenue_less_costs".into()
}
fn default_tail_tolerance() -> f64 {
    DEFAULT_TAIL_TOLERANCE
}
fn default_generator() -> String {
    Generator::default().name().into()
}
fn default_wager_cap() -> f64 {
    DEFAULT_WAGER_CAP
}
fn default_edge_epsilon() -> f64 {
    DEFAULT_EDGE_EPSILON
}
fn default_ruin_cap() -> f64 {
    DEFAULT_RUIN_CAP
}
fn default_window() -> usize {
    250
}
fn default_output_dir() -> PathBuf {
    "out".into()
}
fn default_curve_points() -> usize {
    201
}

/// A parsed config together with where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    /// Directory relative paths are resolved against.
    pub base: PathBuf,
    /// Raw bytes of the config file, for hashing.
    pub raw: Vec<u8>,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let config: RunConfig = serde_json::from_slice(&raw).map_err(|e| CliError::parse(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let loaded = Self { config, base, raw };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base.join(path)
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let c = &self.config;
        if c.assets.is_empty() {
            return Err(CliError::Config("no assets listed".into()));
        }
        for (i, a) in c.assets.iter().enumerate() {
            if c.assets[..i].iter().any(|b| b.id == a.id) {
                return Err(CliError::Config(format!("duplicate asset id `{}`", a.id)));
            }
            if a.kind != "dynamic" {
                return Err(CliError::Config(format!(
                    "asset `{}`: kind `{}` is not supported from the command line, only `dynamic`",
                    a.id, a.kind
                )));
            }
            if !(a.shares_outstanding > 0.0) || !a.shares_outstanding.is_finite() {
                return Err(CliError::Config(format!(
                    "asset `{}`: shares_outstanding must be positive",
                    a.id
                )));
            }
            if a.cashflow != "revenue_less_costs" && !a.cashflow.starts_with("factor:") {
                return Err(CliError::Config(format!(
                    "asset `{}`: unknown cashflow mapping `{}`",
                    a.id, a.cashflow
                )));
            }
        }
        if let Some(h) = c.nrr.horizon {
            if h != c.simulation.horizon {
                return Err(CliError::Config(format!(
                    "nrr.horizon {h} differs from simulation.horizon {}",
                    c.simulation.horizon
                )));
            }
        }
        if Generator::from_name(&c.simulation.generator).is_none() {
            return Err(CliError::Config(format!(
                "unknown generator `{}`",
                c.simulation.generator
            )));
        }
        if c.dispersion_window < 2 {
            return Err(CliError::Config("dispersion_window must be at least 2".into()));
        }
        if c.curve_points < 2 {
            return Err(CliError::Config("curve_points must be at least 2".into()));
        }
        // numeric ranges are checked by the core constructors
        self.pipeline()?;
        self.kelly()?;
        Ok(())
    }

    pub fn pipeline(&self) -> Result<PipelineConfig, CliError> {
        let c = &self.config;
        let nrr = NrrConfig::new(c.nrr.rate, c.simulation.horizon, c.nrr.tail_tolerance)
            .map_err(|e| CliError::Config(format!("nrr: {e}")))?;
        let simulation = SimulationConfig {
            n_samples: c.simulation.n_samples,
            seed: c.simulation.seed,
            distribution: c.simulation.distribution,
            horizon: c.simulation.horizon,
            generator: Generator::from_name(&c.simulation.generator).unwrap_or_default(),
        };
        simulation
            .validate()
            .map_err(|e| CliError::Config(format!("simulation: {e}")))?;
        Ok(PipelineConfig {
            nrr,
            simulation,
            normalize: NormalizeOptions {
                winsorize_growth: c.winsorize_growth,
            },
        })
    }

    pub fn kelly(&self) -> Result<KellyConfig, CliError> {
        let c = &self.config;
        if !(c.wager_cap > 0.0 && c.wager_cap <= 1.0) || !(c.edge_epsilon >= 0.0) {
            return Err(CliError::Config(format!(
                "wager_cap {} must lie in (0, 1] and edge_epsilon {} be non-negative",
                c.wager_cap, c.edge_epsilon
            )));
        }
        if !(c.ruin_cap > 0.0 && c.ruin_cap <= 1.0) {
            return Err(CliError::Config(format!("ruin_cap {} must lie in (0, 1]", c.ruin_cap)));
        }
        Ok(KellyConfig {
            wager_cap: c.wager_cap,
            edge_epsilon: c.edge_epsilon,
        })
    }
}

/// Resolves a cashflow mapping name against the factor columns.
pub fn cashflow_map(mapping: &str, factor_names: &[String]) -> Option<StandardMap> {
    match mapping {
        "revenue_less_costs" => Some(StandardMap::RevenueLessCosts),
        _ => {
            let name = mapping.strip_prefix("factor:")?;
            factor_names.iter().position(|f| f == name).map(StandardMap::Factor)
        }
    }
}
