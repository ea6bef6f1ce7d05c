//! The four subcommands.

use std::collections::BTreeMap;
use std::path::PathBuf;

use marginkit_core::kelly::{price_grid, wager_curve};
use marginkit_core::pipeline::{assess_safety, size_position, value_asset, AssetValuation};
use marginkit_core::portfolio::{allocate, correlation_report, screen};
use marginkit_core::safety::{efficient_set, SafetyPoint};
use marginkit_core::{FundamentalSeries, KellyDecision, Rate, SafetyReport, Signal};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{cashflow_map, Format, LoadedConfig};
use crate::error::CliError;
use crate::io::load_series;
use crate::report::{hex, num, opt, Provenance, Writer};

/// Command-line overrides of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Value,
    Safety,
    Allocate,
    Screen,
}

struct Asset {
    id: String,
    series: FundamentalSeries,
    cashflow: String,
    shares: f64,
}

struct Valued {
    asset: Asset,
    valuation: AssetValuation,
}

impl Valued {
    fn market_price(&self) -> f64 {
        self.asset.series.last_price().unwrap_or(f64::NAN)
    }

    fn prices(&self) -> Vec<f64> {
        self.asset.series.prices().iter().map(|p| p.price).collect()
    }
}

struct Run {
    loaded: LoadedConfig,
    provenance: Provenance,
    out: PathBuf,
    format: Format,
}

/// Runs one subcommand and returns the files written.
pub fn execute(config: &std::path::Path, command: Command, overrides: &Overrides) -> Result<Vec<PathBuf>, CliError> {
    let mut loaded = LoadedConfig::load(config)?;
    if let Some(seed) = overrides.seed {
        loaded.config.simulation.seed = seed;
    }
    let out = overrides
        .out
        .clone()
        .unwrap_or_else(|| loaded.resolve(&loaded.config.output_dir));
    let format = overrides.format.unwrap_or(loaded.config.format);
    let provenance = Provenance {
        seed: loaded.config.simulation.seed,
        config_hash: config_hash(&loaded)?,
        version: env!("CARGO_PKG_VERSION"),
    };
    let run = Run {
        loaded,
        provenance,
        out,
        format,
    };
    let assets = run.load_assets()?;
    let valued = run.value_all(assets)?;
    let mut writer = Writer::new(run.out.clone(), run.provenance.clone());
    match command {
        Command::Value => run.write_value(&valued, &mut writer)?,
        Command::Safety => {
            let reports = run.safety_all(&valued)?;
            run.write_safety(&valued, &reports, &mut writer)?;
        }
        Command::Screen => {
            let reports = run.safety_all(&valued)?;
            run.write_screen(&valued, &reports, &mut writer)?;
        }
        Command::Allocate => run.write_allocation(&valued, &mut writer)?,
    }
    writer.finish()
}

/// SHA-256 over the config bytes followed by every input file, in asset order.
fn config_hash(loaded: &LoadedConfig) -> Result<String, CliError> {
    let mut hasher = Sha256::new();
    hasher.update(&loaded.raw);
    for a in &loaded.config.assets {
        for path in [&a.fundamentals, &a.prices] {
            let path = loaded.resolve(path);
            let bytes = std::fs::read(&path).map_err(|source| CliError::Read { path, source })?;
            hasher.update((bytes.len() as u64).to_le_bytes());
            hasher.update(&bytes);
        }
    }
    Ok(hex(&hasher.finalize()))
}

fn first_error<T>(results: Vec<Result<T, CliError>>) -> Result<Vec<T>, CliError> {
    // report the first failure in config order, whatever finished first
    results.into_iter().collect()
}

impl Run {
    fn load_assets(&self) -> Result<Vec<Asset>, CliError> {
        self.loaded
            .config
            .assets
            .iter()
            .map(|a| {
                let series = load_series(
                    &a.id,
                    &self.loaded.resolve(&a.fundamentals),
                    &self.loaded.resolve(&a.prices),
                )?;
                Ok(Asset {
                    id: a.id.clone(),
                    series,
                    cashflow: a.cashflow.clone(),
                    shares: a.shares_outstanding,
                })
            })
            .collect()
    }

    fn value_all(&self, assets: Vec<Asset>) -> Result<Vec<Valued>, CliError> {
        let cfg = self.loaded.pipeline()?;
        let results: Vec<Result<Valued, CliError>> = assets
            .into_par_iter()
            .map(|asset| {
                let map = cashflow_map(&asset.cashflow, asset.series.factor_names()).ok_or_else(|| {
                    CliError::Config(format!(
                        "asset `{}`: cashflow `{}` names no factor column",
                        asset.id, asset.cashflow
                    ))
                })?;
                let valuation = value_asset(&asset.series, asset.shares, &cfg, &map)
                    .map_err(|e| CliError::numerical(&asset.id, e))?;
                Ok(Valued { asset, valuation })
            })
            .collect();
        first_error(results)
    }

    fn safety_all(&self, valued: &[Valued]) -> Result<Vec<SafetyReport>, CliError> {
        let c = &self.loaded.config;
        let required = Rate::new(c.nrr.rate).map_err(|e| CliError::Config(e.to_string()))?;
        let results: Vec<Result<SafetyReport, CliError>> = valued
            .par_iter()
            .map(|v| {
                assess_safety(
                    &v.valuation,
                    required,
                    v.market_price(),
                    &v.prices(),
                    c.dispersion_window,
                    c.dispersion_measure,
                )
                .map_err(|e| CliError::numerical(&v.asset.id, e))
            })
            .collect();
        first_error(results)
    }

    fn write_value(&self, valued: &[Valued], writer: &mut Writer) -> Result<(), CliError> {
        let rows: Vec<ValueRow> = valued.iter().map(ValueRow::new).collect();
        match self.format {
            Format::Json => writer.json("value.json", &ValueReport { assets: rows })?,
            Format::Csv => {
                let cells: Vec<Vec<String>> = rows.iter().map(ValueRow::cells).collect();
                writer.csv("value.csv", &ValueRow::HEADER, &cells)?;
            }
        }
        if self.loaded.config.dump_samples {
            for v in valued {
                let cells: Vec<Vec<String>> = v
                    .valuation
                    .distribution
                    .samples()
                    .iter()
                    .map(|x| vec![num(*x)])
                    .collect();
                writer.csv(&format!("{}_samples.csv", v.asset.id), &["price"], &cells)?;
            }
        }
        Ok(())
    }

    fn write_safety(&self, valued: &[Valued], reports: &[SafetyReport], writer: &mut Writer) -> Result<(), CliError> {
        let points: Vec<SafetyPoint> = reports.iter().map(SafetyReport::point).collect();
        let efficient = efficient_set(&points, false);
        let rows: Vec<SafetyRow> = valued
            .iter()
            .zip(reports)
            .enumerate()
            .map(|(i, (v, r))| SafetyRow::new(v, r, efficient.contains(&i)))
            .collect();
        match self.format {
            Format::Json => writer.json("safety.json", &SafetyReportFile { assets: rows }),
            Format::Csv => {
                let cells: Vec<Vec<String>> = rows.iter().map(SafetyRow::cells).collect();
                writer.csv("safety.csv", &SafetyRow::HEADER, &cells)
            }
        }
    }

    fn write_screen(&self, valued: &[Valued], reports: &[SafetyReport], writer: &mut Writer) -> Result<(), CliError> {
        let min_gb = self.loaded.config.min_gb;
        let by_id: BTreeMap<String, SafetyReport> = valued
            .iter()
            .zip(reports)
            .map(|(v, r)| (v.asset.id.clone(), *r))
            .collect();
        let passing: Vec<ScreenRow> = screen(&by_id, min_gb)
            .into_iter()
            .enumerate()
            .map(|(rank, id)| {
                let r = &by_id[&id];
                ScreenRow {
                    rank: rank + 1,
                    gb_ratio: r.gb_ratio.unwrap_or(f64::NAN),
                    delta: r.delta,
                    dispersion: r.dispersion,
                    asset: id,
                }
            })
            .collect();
        let zero_dispersion: Vec<String> = by_id
            .iter()
            .filter(|(_, r)| r.gb_ratio.is_none())
            .map(|(id, _)| id.clone())
            .collect();
        match self.format {
            Format::Json => writer.json(
                "screen.json",
                &ScreenFile {
                    min_gb,
                    passing,
                    zero_dispersion,
                },
            ),
            Format::Csv => {
                let mut cells: Vec<Vec<String>> = passing
                    .iter()
                    .map(|r| {
                        vec![
                            r.rank.to_string(),
                            r.asset.clone(),
                            num(r.gb_ratio),
                            num(r.delta),
                            num(r.dispersion),
                        ]
                    })
                    .collect();
                // zero-dispersion assets have no GB-ratio and no rank
                cells.extend(zero_dispersion.iter().map(|id| {
                    let r = &by_id[id];
                    vec![
                        String::new(),
                        id.clone(),
                        String::new(),
                        num(r.delta),
                        num(r.dispersion),
                    ]
                }));
                writer.csv(
                    "screen.csv",
                    &["rank", "asset", "gb_ratio", "delta", "dispersion"],
                    &cells,
                )
            }
        }
    }

    fn write_allocation(&self, valued: &[Valued], writer: &mut Writer) -> Result<(), CliError> {
        let kelly = self.loaded.kelly()?;
        let results: Vec<Result<KellyDecision, CliError>> = valued
            .par_iter()
            .map(|v| {
                let price = v.market_price();
                if !(price > 0.0) {
                    return Err(CliError::numerical(
                        &v.asset.id,
                        format!("market price {price} must be positive"),
                    ));
                }
                size_position(&v.valuation, price, kelly, None).map_err(|e| CliError::numerical(&v.asset.id, e))
            })
            .collect();
        let decisions: BTreeMap<String, KellyDecision> = valued
            .iter()
            .map(|v| v.asset.id.clone())
            .zip(first_error(results)?)
            .collect();

        let mut allocation =
            allocate(&decisions, self.loaded.config.ruin_cap).map_err(|e| CliError::Portfolio(e.to_string()))?;
        let histories = valued
            .iter()
            .map(|v| (v.asset.id.clone(), v.asset.series.prices().to_vec()))
            .collect();
        allocation.correlation = Some(correlation_report(&histories).map_err(|e| CliError::Portfolio(e.to_string()))?);
        let correlation = allocation.correlation.clone().unwrap_or_else(|| unreachable!());

        match self.format {
            Format::Json => {
                let file = AllocationFile {
                    assets: correlation.assets.clone(),
                    weights: allocation.weights.clone(),
                    cash_weight: allocation.cash_weight,
                    gross_invested: allocation.gross_invested,
                    ruin_cap: allocation.ruin_cap,
                    correlations: correlation.values.clone(),
                    decisions: decisions
                        .iter()
                        .map(|(id, d)| (id.clone(), DecisionRow::from(d)))
                        .collect(),
                };
                writer.json("allocation.json", &file)?;
            }
            Format::Csv => {
                let mut cells: Vec<Vec<String>> = decisions
                    .iter()
                    .map(|(id, d)| {
                        vec![
                            id.clone(),
                            num(allocation.weights[id]),
                            num(d.p),
                            num(d.edge),
                            num(d.wager),
                            signal_name(d.signal).into(),
                        ]
                    })
                    .collect();
                cells.push(vec![
                    "CASH".into(),
                    num(allocation.cash_weight),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
                writer.csv(
                    "allocation.csv",
                    &["asset", "weight", "p", "edge", "wager", "signal"],
                    &cells,
                )?;
                let mut header = vec!["asset"];
                header.extend(correlation.assets.iter().map(String::as_str));
                let rows: Vec<Vec<String>> = correlation
                    .assets
                    .iter()
                    .zip(&correlation.values)
                    .map(|(id, row)| std::iter::once(id.clone()).chain(row.iter().map(|x| num(*x))).collect())
                    .collect();
                writer.csv("correlation.csv", &header, &rows)?;
            }
        }

        for v in valued {
            let dist = &v.valuation.distribution;
            let grid = price_grid(2.0 * dist.mean(), self.loaded.config.curve_points);
            let curve =
                wager_curve(dist.mean(), dist.std(), kelly, &grid).map_err(|e| CliError::numerical(&v.asset.id, e))?;
            let cells: Vec<Vec<String>> = curve.iter().map(|(p, w)| vec![num(*p), num(*w)]).collect();
            writer.csv(&format!("{}_curve.csv", v.asset.id), &["price", "wager"], &cells)?;
        }
        Ok(())
    }
}

fn signal_name(s: Signal) -> &'static str {
    match s {
        Signal::Add => "add",
        Signal::Hold => "hold",
        Signal::Trim => "trim",
        Signal::Exit => "exit",
        Signal::MarketWeight => "market_weight",
    }
}

#[derive(Serialize)]
struct ValueReport {
    assets: Vec<ValueRow>,
}

#[derive(Serialize)]
struct ValueRow {
    asset: String,
    seed: u64,
    p_t: f64,
    sigma_0: f64,
    growth_constant: f64,
    price_multiple: f64,
    unit_flow: f64,
    point_value: f64,
    samples: usize,
    rejected: usize,
    min: f64,
    p05: f64,
    median: f64,
    p95: f64,
    max: f64,
}

/// Nearest-rank quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

impl ValueRow {
    const HEADER: [&'static str; 15] = [
        "asset",
        "seed",
        "p_t",
        "sigma_0",
        "growth_constant",
        "price_multiple",
        "unit_flow",
        "point_value",
        "samples",
        "rejected",
        "min",
        "p05",
        "median",
        "p95",
        "max",
    ];

    fn new(v: &Valued) -> Self {
        let d = &v.valuation.distribution;
        let mut sorted = d.samples().to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            asset: v.asset.id.clone(),
            seed: v.valuation.seed,
            p_t: d.mean(),
            sigma_0: d.std(),
            growth_constant: v.valuation.growth_constant.get(),
            price_multiple: v.valuation.price_multiple,
            unit_flow: v.valuation.unit_flow,
            point_value: v.valuation.point_value,
            samples: sorted.len(),
            rejected: d.rejected(),
            min: sorted[0],
            p05: quantile(&sorted, 0.05),
            median: quantile(&sorted, 0.5),
            p95: quantile(&sorted, 0.95),
            max: sorted[sorted.len() - 1],
        }
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.asset.clone(),
            self.seed.to_string(),
            num(self.p_t),
            num(self.sigma_0),
            num(self.growth_constant),
            num(self.price_multiple),
            num(self.unit_flow),
            num(self.point_value),
            self.samples.to_string(),
            self.rejected.to_string(),
            num(self.min),
            num(self.p05),
            num(self.median),
            num(self.p95),
            num(self.max),
        ]
    }
}

#[derive(Serialize)]
struct SafetyReportFile {
    assets: Vec<SafetyRow>,
}

#[derive(Serialize)]
struct SafetyRow {
    asset: String,
    market_price: f64,
    p_t: f64,
    required_rate: f64,
    market_rate: f64,
    delta: f64,
    classic: f64,
    dispersion: f64,
    gb_ratio: Option<f64>,
    efficient: bool,
}

impl SafetyRow {
    const HEADER: [&'static str; 10] = [
        "asset",
        "market_price",
        "p_t",
        "required_rate",
        "market_rate",
        "delta",
        "classic",
        "dispersion",
        "gb_ratio",
        "efficient",
    ];

    fn new(v: &Valued, r: &SafetyReport, efficient: bool) -> Self {
        Self {
            asset: v.asset.id.clone(),
            market_price: v.market_price(),
            p_t: v.valuation.distribution.mean(),
            required_rate: r.required_rate,
            market_rate: r.market_rate,
            delta: r.delta,
            classic: r.classic,
            dispersion: r.dispersion,
            gb_ratio: r.gb_ratio,
            efficient,
        }
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.asset.clone(),
            num(self.market_price),
            num(self.p_t),
            num(self.required_rate),
            num(self.market_rate),
            num(self.delta),
            num(self.classic),
            num(self.dispersion),
            opt(self.gb_ratio),
            self.efficient.to_string(),
        ]
    }
}

#[derive(Serialize)]
struct ScreenFile {
    min_gb: f64,
    passing: Vec<ScreenRow>,
    zero_dispersion: Vec<String>,
}

#[derive(Serialize)]
struct ScreenRow {
    rank: usize,
    asset: String,
    gb_ratio: f64,
    delta: f64,
    dispersion: f64,
}

#[derive(Serialize)]
struct AllocationFile {
    assets: Vec<String>,
    weights: BTreeMap<String, f64>,
    cash_weight: f64,
    gross_invested: f64,
    ruin_cap: f64,
    correlations: Vec<Vec<f64>>,
    decisions: BTreeMap<String, DecisionRow>,
}

#[derive(Serialize)]
struct DecisionRow {
    p: f64,
    q: f64,
    edge: f64,
    raw_wager: f64,
    wager: f64,
    signal: &'static str,
    degenerate: bool,
}

impl From<&KellyDecision> for DecisionRow {
    fn from(d: &KellyDecision) -> Self {
        Self {
            p: d.p,
            q: d.q,
            edge: d.edge,
            raw_wager: d.raw_wager,
            wager: d.wager,
            signal: signal_name(d.signal),
            degenerate: d.degenerate,
        }
    }
}
