//! Aggregating per-asset wagers into a capped allocation.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::fundamentals::PricePoint;
use crate::kelly::KellyDecision;
use crate::safety::SafetyReport;
use crate::stats::correlation;

/// Default ceiling on gross investment.
pub const DEFAULT_RUIN_CAP: f64 = 0.8;

/// Portfolio errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PortfolioError {
    /// No decisions to allocate.
    #[error("no assets to allocate")]
    Empty,
    /// Ruin cap outside `(0, 1]`.
    #[error("ruin cap {0} outside (0, 1]")]
    InvalidRuinCap(f64),
    /// A wager is negative or not finite.
    #[error("invalid wager {wager} for `{asset}`")]
    InvalidWager {
        /// Asset id.
        asset: String,
        /// Offending wager.
        wager: f64,
    },
    /// Two assets share fewer than two one-period returns.
    #[error("`{first}` and `{second}` share {overlap} returns, need at least 2")]
    InsufficientOverlap {
        /// First asset.
        first: String,
        /// Second asset.
        second: String,
        /// Shared returns.
        overlap: usize,
    },
    /// A price is zero or negative.
    #[error("non-positive price {price} for `{asset}` at period {period}")]
    NonPositivePrice {
        /// Asset id.
        asset: String,
        /// Period index.
        period: i64,
        /// Offending price.
        price: f64,
    },
}

/// Pairwise correlations of one-period log returns.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorrelationMatrix {
    /// Row and column labels.
    pub assets: Vec<String>,
    /// Symmetric, unit diagonal, entries in `[-1, 1]`.
    pub values: Vec<Vec<f64>>,
}

/// Fractions of capital per asset plus cash.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Allocation {
    /// Weight per asset id.
    pub weights: BTreeMap<String, f64>,
    /// `1 - gross_invested`.
    pub cash_weight: f64,
    /// Sum of the weights.
    pub gross_invested: f64,
    /// Ceiling on `gross_invested`.
    pub ruin_cap: f64,
    /// Return correlations, when computed.
    pub correlation: Option<CorrelationMatrix>,
}

/// Allocates each asset its wager, scaled down proportionally when the
/// total would exceed `ruin_cap`.
pub fn allocate(decisions: &BTreeMap<String, KellyDecision>, ruin_cap: f64) -> Result<Allocation, PortfolioError> {
    let wagers: BTreeMap<String, f64> = decisions.iter().map(|(id, d)| (id.clone(), d.wager)).collect();
    allocate_wagers(&wagers, ruin_cap)
}

/// [`allocate`] over bare wagers.
pub fn allocate_wagers(wagers: &BTreeMap<String, f64>, ruin_cap: f64) -> Result<Allocation, PortfolioError> {
    if wagers.is_empty() {
        return Err(PortfolioError::Empty);
    }
    if !(ruin_cap > 0.0 && ruin_cap <= 1.0) {
        return Err(PortfolioError::InvalidRuinCap(ruin_cap));
    }
    if let Some((asset, &wager)) = wagers.iter().find(|(_, w)| !(**w >= 0.0) || !w.is_finite()) {
        return Err(PortfolioError::InvalidWager {
            asset: asset.clone(),
            wager,
        });
    }

    let raw_total: f64 = wagers.values().sum();
    let mut weights = wagers.clone();
    let mut gross = raw_total;
    if raw_total > ruin_cap {
        let mut scale = ruin_cap / raw_total;
        loop {
            for (w, raw) in weights.values_mut().zip(wagers.values()) {
                *w = raw * scale;
            }
            gross = weights.values().sum();
            if gross <= ruin_cap {
                break;
            }
            // rounding pushed the sum an ulp over the cap
            scale = scale.next_down();
        }
    }

    Ok(Allocation {
        weights,
        cash_weight: 1.0 - gross,
        gross_invested: gross,
        ruin_cap,
        correlation: None,
    })
}

fn period_returns(asset: &str, prices: &[PricePoint]) -> Result<BTreeMap<i64, f64>, PortfolioError> {
    if let Some(p) = prices.iter().find(|p| !(p.price > 0.0)) {
        return Err(PortfolioError::NonPositivePrice {
            asset: asset.into(),
            period: p.index,
            price: p.price,
        });
    }
    Ok(prices
        .windows(2)
        .filter(|w| w[1].index == w[0].index + 1)
        .map(|w| (w[1].index, libm::log(w[1].price / w[0].price)))
        .collect())
}

/// Pairwise sample correlation of one-period log returns over the periods
/// each pair has in common.
///
/// A return is attributed to the later of two consecutive periods; gaps in
/// the period index break the return. A pair where either side has no
/// variation over the overlap is reported as `0.0`.
pub fn correlation_report(histories: &BTreeMap<String, Vec<PricePoint>>) -> Result<CorrelationMatrix, PortfolioError> {
    let returns = histories
        .iter()
        .map(|(id, prices)| period_returns(id, prices))
        .collect::<Result<Vec<_>, _>>()?;
    let assets: Vec<String> = histories.keys().cloned().collect();
    let n = assets.len();
    let mut values = alloc::vec![alloc::vec![0.0; n]; n];
    for i in 0..n {
        values[i][i] = 1.0;
        for j in (i + 1)..n {
            let (xs, ys): (Vec<f64>, Vec<f64>) = returns[i]
                .iter()
                .filter_map(|(t, x)| returns[j].get(t).map(|y| (*x, *y)))
                .unzip();
            if xs.len() < 2 {
                return Err(PortfolioError::InsufficientOverlap {
                    first: assets[i].clone(),
                    second: assets[j].clone(),
                    overlap: xs.len(),
                });
            }
            let rho = correlation(&xs, &ys).unwrap_or(0.0);
            values[i][j] = rho;
            values[j][i] = rho;
        }
    }
    Ok(CorrelationMatrix { assets, values })
}

/// Assets whose GB-ratio is at least `min_gb`, best first.
///
/// Ties on GB-ratio go to the larger `δ`, then to the smaller asset id.
/// Assets without a GB-ratio (zero dispersion) are left out.
pub fn screen(reports: &BTreeMap<String, SafetyReport>, min_gb: f64) -> Vec<String> {
    let mut passing: Vec<(&String, f64, f64)> = reports
        .iter()
        .filter_map(|(id, r)| r.gb_ratio.map(|gb| (id, gb, r.delta)))
        .filter(|(_, gb, _)| *gb >= min_gb)
        .collect();
    passing.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.2.total_cmp(&a.2)).then(a.0.cmp(b.0)));
    passing.into_iter().map(|(id, _, _)| id.clone()).collect()
}
