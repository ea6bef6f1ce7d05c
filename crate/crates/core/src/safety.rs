//! Margins of safety, the GB-ratio and the efficient set of assets.
//!
//! Two margins are provided. The classic one compares prices,
//! `S = 1 - P_market / P_valuation`. The rate-based one compares the
//! required rate `N` with the rate `M` implied by the market price at the
//! valuation's growth constant, `δ = 1 - N / M`. Because `M` is not linear in
//! price, assets with equal `S` can have different `δ`.
//!
//! The GB-ratio `δ / σ` divides the rate margin by the dispersion of one-period
//! log price returns. Assets are ordered two ways: by Pareto dominance in the
//! `(δ, σ)` plane ([`efficient_set`]) and by the scalar GB-ratio
//! ([`crate::portfolio::screen`]).

use alloc::vec::Vec;

use thiserror::Error;

use crate::stats::{log_returns, Welford};
use crate::valuation::Rate;

/// Errors from margin-of-safety routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SafetyError {
    /// The valuation is zero or negative.
    #[error("valuation {0} must be positive")]
    NonPositiveValuation(f64),
    /// The market price is zero or negative.
    #[error("market price {0} must be positive")]
    NonPositiveMarketPrice(f64),
    /// Dispersion is zero, so the GB-ratio is undefined.
    #[error("price dispersion is zero")]
    ZeroDispersion,
    /// Dispersion is negative or not finite.
    #[error("invalid price dispersion {0}")]
    InvalidDispersion(f64),
    /// Fewer than two prices.
    #[error("at least 2 prices are required, got {0}")]
    TooFewPrices(usize),
    /// A price is zero or negative.
    #[error("price {price} at position {index} must be positive")]
    NonPositivePrice {
        /// Position in the series.
        index: usize,
        /// Offending price.
        price: f64,
    },
}

/// `δ = 1 - N / M`.
///
/// Positive exactly when the market rate exceeds the required rate.
pub fn margin_of_safety_delta(required: Rate, market: Rate) -> f64 {
    1.0 - required.get() / market.get()
}

/// `S = 1 - P_market / P_valuation`.
pub fn margin_of_safety_classic(valuation: f64, market_price: f64) -> Result<f64, SafetyError> {
    if !(valuation > 0.0) {
        return Err(SafetyError::NonPositiveValuation(valuation));
    }
    Ok(1.0 - market_price / valuation)
}

/// `δ / σ`.
pub fn gb_ratio(delta: f64, dispersion: f64) -> Result<f64, SafetyError> {
    if dispersion == 0.0 {
        return Err(SafetyError::ZeroDispersion);
    }
    if !(dispersion > 0.0) || !dispersion.is_finite() {
        return Err(SafetyError::InvalidDispersion(dispersion));
    }
    Ok(delta / dispersion)
}

/// Which spread of log returns to report as dispersion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DispersionMeasure {
    /// Sample standard deviation.
    #[default]
    StdDev,
    /// Sample variance.
    Variance,
}

/// Dispersion of one-period log returns over the last `window` prices.
///
/// A window longer than the series uses the whole series. Sample statistics
/// use divisor `n - 1`; a single return has zero dispersion.
pub fn price_dispersion(prices: &[f64], window: usize) -> Result<f64, SafetyError> {
    price_dispersion_with(prices, window, DispersionMeasure::StdDev)
}

/// [`price_dispersion`] with an explicit measure.
pub fn price_dispersion_with(prices: &[f64], window: usize, measure: DispersionMeasure) -> Result<f64, SafetyError> {
    let start = prices.len().saturating_sub(window);
    let recent = &prices[start..];
    if recent.len() < 2 {
        return Err(SafetyError::TooFewPrices(recent.len()));
    }
    if let Some((i, &price)) = recent.iter().enumerate().find(|(_, p)| !(**p > 0.0)) {
        return Err(SafetyError::NonPositivePrice {
            index: start + i,
            price,
        });
    }
    let acc: Welford = log_returns(recent).into_iter().collect();
    Ok(match measure {
        DispersionMeasure::StdDev => acc.sample_std(),
        DispersionMeasure::Variance => acc.sample_variance(),
    })
}

/// Rate and price margins for one asset.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SafetyReport {
    /// Required rate `N`.
    pub required_rate: f64,
    /// Market-implied rate `M`.
    pub market_rate: f64,
    /// `δ = 1 - N / M`.
    pub delta: f64,
    /// `S = 1 - P_market / P_valuation`.
    pub classic: f64,
    /// Historical price dispersion `σ`.
    pub dispersion: f64,
    /// `δ / σ`, absent when `σ = 0`.
    pub gb_ratio: Option<f64>,
}

impl SafetyReport {
    /// Assembles the report from both rates, both prices and the dispersion.
    pub fn new(
        required: Rate,
        market: Rate,
        valuation: f64,
        market_price: f64,
        dispersion: f64,
    ) -> Result<Self, SafetyError> {
        if !(market_price > 0.0) {
            return Err(SafetyError::NonPositiveMarketPrice(market_price));
        }
        let delta = margin_of_safety_delta(required, market);
        let classic = margin_of_safety_classic(valuation, market_price)?;
        let gb_ratio = match gb_ratio(delta, dispersion) {
            Ok(gb) => Some(gb),
            Err(SafetyError::ZeroDispersion) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            required_rate: required.get(),
            market_rate: market.get(),
            delta,
            classic,
            dispersion,
            gb_ratio,
        })
    }

    /// The report's position in the `(δ, σ)` plane.
    pub fn point(&self) -> SafetyPoint {
        SafetyPoint {
            delta: self.delta,
            dispersion: self.dispersion,
        }
    }
}

/// An asset's coordinates in the margin/dispersion plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetyPoint {
    /// Margin of safety `δ`.
    pub delta: f64,
    /// Dispersion `σ`.
    pub dispersion: f64,
}

impl SafetyPoint {
    /// Whether `self` dominates `other`: no worse on both axes and strictly
    /// better on at least one.
    pub fn dominates(&self, other: &SafetyPoint) -> bool {
        self.delta >= other.delta
            && self.dispersion <= other.dispersion
            && (self.delta > other.delta || self.dispersion < other.dispersion)
    }
}

/// Indices of the non-dominated points, sorted by dispersion ascending (ties
/// in input order).
///
/// Points with negative `δ` are skipped unless `include_negative` is set.
/// Runs in `O(n log n)`.
pub fn efficient_set(points: &[SafetyPoint], include_negative: bool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len())
        .filter(|&i| include_negative || points[i].delta >= 0.0)
        .collect();
    order.sort_by(|&a, &b| {
        points[a]
            .dispersion
            .total_cmp(&points[b].dispersion)
            .then(points[b].delta.total_cmp(&points[a].delta))
            .then(a.cmp(&b))
    });

    let mut kept = Vec::new();
    // best δ among strictly smaller dispersions
    let mut best_below = f64::NEG_INFINITY;
    let mut i = 0;
    while i < order.len() {
        let sigma = points[order[i]].dispersion;
        let group_end = order[i..]
            .iter()
            .position(|&k| points[k].dispersion != sigma)
            .map_or(order.len(), |p| i + p);
        // the group is sorted by δ descending, so its head holds the max
        let top = points[order[i]].delta;
        if top > best_below {
            kept.extend(order[i..group_end].iter().copied().filter(|&k| points[k].delta == top));
        }
        best_below = best_below.max(top);
        i = group_end;
    }
    kept.sort_by(|&a, &b| points[a].dispersion.total_cmp(&points[b].dispersion).then(a.cmp(&b)));
    kept
}
