//! CSV ingestion of fundamentals and prices.

use std::path::Path;

use marginkit_core::fundamentals::{AssetKind, FundamentalSeries, Period, PricePoint};

use crate::error::CliError;

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>, CliError> {
    let file = std::fs::File::open(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

fn headers(path: &Path, rdr: &mut csv::Reader<std::fs::File>) -> Result<Vec<String>, CliError> {
    Ok(rdr
        .headers()
        .map_err(|e| CliError::parse(path, e))?
        .iter()
        .map(str::to_string)
        .collect())
}

fn field<T: std::str::FromStr>(path: &Path, line: u64, column: &str, raw: &str) -> Result<T, CliError> {
    raw.trim()
        .parse()
        .map_err(|_| CliError::parse(path, format!("line {line}: cannot parse {column} `{raw}`")))
}

/// Reads `period,revenue,<factor>...` rows.
pub fn read_fundamentals(path: &Path) -> Result<(Vec<String>, Vec<Period>), CliError> {
    let mut rdr = reader(path)?;
    let header = headers(path, &mut rdr)?;
    if header.len() < 2 || header[0] != "period" || header[1] != "revenue" {
        return Err(CliError::parse(path, "header must start with `period,revenue`"));
    }
    let factor_names = header[2..].to_vec();
    let mut periods = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::parse(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let index = field(path, line, "period", &record[0])?;
        let revenue = field(path, line, "revenue", &record[1])?;
        let factors = factor_names
            .iter()
            .zip(record.iter().skip(2))
            .map(|(name, raw)| field(path, line, name, raw))
            .collect::<Result<Vec<f64>, _>>()?;
        periods.push(Period {
            index,
            revenue,
            factors,
        });
    }
    Ok((factor_names, periods))
}

/// Reads `period,price` rows.
pub fn read_prices(path: &Path) -> Result<Vec<PricePoint>, CliError> {
    let mut rdr = reader(path)?;
    let header = headers(path, &mut rdr)?;
    if header != ["period", "price"] {
        return Err(CliError::parse(path, "header must be `period,price`"));
    }
    let mut prices = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::parse(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        prices.push(PricePoint {
            index: field(path, line, "period", &record[0])?,
            price: field(path, line, "price", &record[1])?,
        });
    }
    if prices.is_empty() {
        return Err(CliError::parse(path, "no prices"));
    }
    if let Some(w) = prices.windows(2).find(|w| w[1].index <= w[0].index) {
        return Err(CliError::parse(
            path,
            format!("period {} follows period {}", w[1].index, w[0].index),
        ));
    }
    Ok(prices)
}

/// Loads one asset's panel. Structural problems are input errors and name
/// the offending file.
pub fn load_series(id: &str, fundamentals: &Path, prices: &Path) -> Result<FundamentalSeries, CliError> {
    let (names, periods) = read_fundamentals(fundamentals)?;
    let prices = read_prices(prices)?;
    FundamentalSeries::new(id, AssetKind::Dynamic, names, periods, prices).map_err(|e| CliError::parse(fundamentals, e))
}
