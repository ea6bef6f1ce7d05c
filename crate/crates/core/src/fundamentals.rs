//! Historical fundamentals and their revenue-normalized statistics.
//!
//! Every factor is expressed as a share of revenue, `f_i(t) / R(t)`, and
//! revenue growth uses the current period as denominator:
//!
//! ```text
//! g(t) = (R(t) - R(t-1)) / R(t)
//! ```
//!
//! This is not the usual `R(t-1)` denominator. It is the exact inverse of
//! the projection `R(t) = R(t-1) / (1 - g)` used by [`project_revenue`], so
//! growth rates computed here must not be compared with conventional
//! period-over-period growth figures.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::stats::Welford;

/// Growth means closer than this to one are rejected.
pub const GROWTH_UNITY_EPSILON: f64 = 1e-12;

/// Errors raised while validating or normalizing fundamentals.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FundamentalsError {
    /// Some revenue was zero or negative.
    #[error("revenue must be positive, got {revenue} at period {period}")]
    NonPositiveRevenue {
        /// Offending period index.
        period: i64,
        /// Offending revenue.
        revenue: f64,
    },
    /// Fewer than three periods.
    #[error("at least 3 periods are required, got {0}")]
    TooFewPeriods(usize),
    /// Mean growth is at or above one; the revenue projection diverges.
    #[error("mean revenue growth {0} is at or above 1")]
    GrowthMeanAtUnity(f64),
    /// Period indices are not strictly increasing.
    #[error("period indices must be strictly increasing ({previous} then {next})")]
    UnorderedPeriods {
        /// Earlier index.
        previous: i64,
        /// Index that followed it.
        next: i64,
    },
    /// A period does not carry every named factor.
    #[error("period {period} has {found} factor values, expected {expected}")]
    MissingFactor {
        /// Offending period index.
        period: i64,
        /// Number of named factors.
        expected: usize,
        /// Number of values present.
        found: usize,
    },
    /// Two factors share a name.
    #[error("duplicate factor name `{0}`")]
    DuplicateFactor(String),
    /// A value is NaN or infinite.
    #[error("non-finite value at period {0}")]
    NonFinite(i64),
    /// Monte-Carlo valuation needs a dynamic asset.
    #[error("normalization requires a dynamic asset, got {0:?}")]
    NotDynamic(AssetKind),
    /// Discrete assets need a maturity of at least one period.
    #[error("discrete assets need a maturity of at least one period")]
    ZeroMaturity,
    /// The winsorizing fraction must lie in `[0, 0.5)`.
    #[error("winsorizing fraction {0} outside [0, 0.5)")]
    InvalidWinsorFraction(f64),
}

/// Asset classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AssetKind {
    /// Cash: worth its face amount.
    Cash,
    /// A finite-life claim such as a bond.
    Discrete {
        /// Remaining life in periods.
        maturity: u32,
    },
    /// An indefinite-life operating business.
    Dynamic,
}

impl AssetKind {
    /// A discrete asset maturing after `maturity` periods.
    pub fn discrete(maturity: u32) -> Result<Self, FundamentalsError> {
        if maturity == 0 {
            return Err(FundamentalsError::ZeroMaturity);
        }
        Ok(AssetKind::Discrete { maturity })
    }
}

/// One row of the fundamentals panel.
#[derive(Debug, Clone, PartialEq)]
pub struct Period {
    /// Time step.
    pub index: i64,
    /// Total revenue `R(t)`.
    pub revenue: f64,
    /// Factor values `f_i(t)` in the order of [`FundamentalSeries::factor_names`].
    pub factors: Vec<f64>,
}

/// One observed market price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricePoint {
    /// Time step.
    pub index: i64,
    /// Price per share or per unit.
    pub price: f64,
}

/// Historical revenue, factor and price panel for one asset.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalSeries {
    asset_id: String,
    kind: AssetKind,
    factor_names: Vec<String>,
    periods: Vec<Period>,
    prices: Vec<PricePoint>,
}

impl FundamentalSeries {
    /// Validates ordering, factor completeness and finiteness.
    ///
    /// Revenue positivity and the minimum period count are checked by
    /// [`normalize`], which is where they matter.
    pub fn new(
        asset_id: impl Into<String>,
        kind: AssetKind,
        factor_names: Vec<String>,
        periods: Vec<Period>,
        prices: Vec<PricePoint>,
    ) -> Result<Self, FundamentalsError> {
        for (i, name) in factor_names.iter().enumerate() {
            if factor_names[..i].contains(name) {
                return Err(FundamentalsError::DuplicateFactor(name.clone()));
            }
        }
        for w in periods.windows(2) {
            if w[1].index <= w[0].index {
                return Err(FundamentalsError::UnorderedPeriods {
                    previous: w[0].index,
                    next: w[1].index,
                });
            }
        }
        for p in &periods {
            if p.factors.len() != factor_names.len() {
                return Err(FundamentalsError::MissingFactor {
                    period: p.index,
                    expected: factor_names.len(),
                    found: p.factors.len(),
                });
            }
            if !p.revenue.is_finite() || p.factors.iter().any(|f| !f.is_finite()) {
                return Err(FundamentalsError::NonFinite(p.index));
            }
        }
        for w in prices.windows(2) {
            if w[1].index <= w[0].index {
                return Err(FundamentalsError::UnorderedPeriods {
                    previous: w[0].index,
                    next: w[1].index,
                });
            }
        }
        if let Some(p) = prices.iter().find(|p| !p.price.is_finite()) {
            return Err(FundamentalsError::NonFinite(p.index));
        }
        Ok(Self {
            asset_id: asset_id.into(),
            kind,
            factor_names,
            periods,
            prices,
        })
    }

    /// Asset identifier.
    pub fn asset_id(&self) -> &str {
        &self.asset_id
    }

    /// Asset classification.
    pub fn kind(&self) -> AssetKind {
        self.kind
    }

    /// Factor names, in column order.
    pub fn factor_names(&self) -> &[String] {
        &self.factor_names
    }

    /// Fundamentals rows.
    pub fn periods(&self) -> &[Period] {
        &self.periods
    }

    /// Observed market prices.
    pub fn prices(&self) -> &[PricePoint] {
        &self.prices
    }

    /// Revenue of the most recent period.
    pub fn last_revenue(&self) -> Option<f64> {
        self.periods.last().map(|p| p.revenue)
    }

    /// Most recent market price.
    pub fn last_price(&self) -> Option<f64> {
        self.prices.last().map(|p| p.price)
    }
}

/// Mean and sample standard deviation of one normalized factor.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FactorStats {
    /// Mean revenue share `μ_i`.
    pub mean: f64,
    /// Sample standard deviation `σ_i`.
    pub std: f64,
}

/// Options for [`normalize_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NormalizeOptions {
    /// Clip growth samples to their empirical `[q, 1 - q]` quantiles before
    /// taking statistics. `None` keeps every sample.
    pub winsorize_growth: Option<f64>,
}

/// Revenue-relative factor statistics and growth statistics.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormalizedFactors {
    factor_names: Vec<String>,
    factor_stats: Vec<FactorStats>,
    growth_mean: f64,
    growth_std: f64,
    /// Per factor, the normalized value of every period.
    samples: Vec<Vec<f64>>,
    /// Growth of every period after the first.
    growth_samples: Vec<f64>,
}

impl NormalizedFactors {
    /// Builds statistics directly from moments, with no historical samples.
    ///
    /// Useful for synthetic assets. Bootstrap sampling is unavailable for the
    /// result.
    pub fn from_moments(
        factor_names: Vec<String>,
        factor_stats: Vec<FactorStats>,
        growth_mean: f64,
        growth_std: f64,
    ) -> Result<Self, FundamentalsError> {
        if factor_names.len() != factor_stats.len() {
            return Err(FundamentalsError::MissingFactor {
                period: 0,
                expected: factor_names.len(),
                found: factor_stats.len(),
            });
        }
        let finite = factor_stats
            .iter()
            .all(|s| s.mean.is_finite() && s.std.is_finite() && s.std >= 0.0)
            && growth_mean.is_finite()
            && growth_std.is_finite()
            && growth_std >= 0.0;
        if !finite {
            return Err(FundamentalsError::NonFinite(0));
        }
        if growth_mean >= 1.0 - GROWTH_UNITY_EPSILON {
            return Err(FundamentalsError::GrowthMeanAtUnity(growth_mean));
        }
        Ok(Self {
            factor_names,
            factor_stats,
            growth_mean,
            growth_std,
            samples: Vec::new(),
            growth_samples: Vec::new(),
        })
    }

    /// Factor names, in column order.
    pub fn factor_names(&self) -> &[String] {
        &self.factor_names
    }

    /// Per-factor mean and standard deviation.
    pub fn factor_stats(&self) -> &[FactorStats] {
        &self.factor_stats
    }

    /// Mean growth `ḡ`.
    pub fn growth_mean(&self) -> f64 {
        self.growth_mean
    }

    /// Sample standard deviation of growth.
    pub fn growth_std(&self) -> f64 {
        self.growth_std
    }

    /// Historical normalized values of each factor, one vector per factor.
    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    /// Historical growth samples (one fewer than the number of periods).
    pub fn growth_samples(&self) -> &[f64] {
        &self.growth_samples
    }

    /// Whether joint historical rows are available for bootstrapping.
    pub fn has_history(&self) -> bool {
        !self.growth_samples.is_empty()
    }
}

/// Growth of `current` over `previous`, with `current` as denominator.
pub fn growth(previous: f64, current: f64) -> f64 {
    (current - previous) / current
}

/// Normalizes a dynamic asset's fundamentals with default options.
pub fn normalize(series: &FundamentalSeries) -> Result<NormalizedFactors, FundamentalsError> {
    normalize_with(series, NormalizeOptions::default())
}

/// Normalizes a dynamic asset's fundamentals.
pub fn normalize_with(
    series: &FundamentalSeries,
    options: NormalizeOptions,
) -> Result<NormalizedFactors, FundamentalsError> {
    if series.kind != AssetKind::Dynamic {
        return Err(FundamentalsError::NotDynamic(series.kind));
    }
    if series.periods.len() < 3 {
        return Err(FundamentalsError::TooFewPeriods(series.periods.len()));
    }
    if let Some(p) = series.periods.iter().find(|p| p.revenue <= 0.0) {
        return Err(FundamentalsError::NonPositiveRevenue {
            period: p.index,
            revenue: p.revenue,
        });
    }

    let samples: Vec<Vec<f64>> = (0..series.factor_names.len())
        .map(|i| series.periods.iter().map(|p| p.factors[i] / p.revenue).collect())
        .collect();
    let factor_stats = samples
        .iter()
        .map(|xs| {
            let acc: Welford = xs.iter().copied().collect();
            FactorStats {
                mean: acc.mean(),
                std: acc.sample_std(),
            }
        })
        .collect();

    let mut growth_samples: Vec<f64> = series
        .periods
        .windows(2)
        .map(|w| growth(w[0].revenue, w[1].revenue))
        .collect();
    if let Some(q) = options.winsorize_growth {
        winsorize(&mut growth_samples, q)?;
    }
    let acc: Welford = growth_samples.iter().copied().collect();
    let growth_mean = acc.mean();
    if growth_mean >= 1.0 - GROWTH_UNITY_EPSILON {
        return Err(FundamentalsError::GrowthMeanAtUnity(growth_mean));
    }

    Ok(NormalizedFactors {
        factor_names: series.factor_names.clone(),
        factor_stats,
        growth_mean,
        growth_std: acc.sample_std(),
        samples,
        growth_samples,
    })
}

fn winsorize(xs: &mut [f64], q: f64) -> Result<(), FundamentalsError> {
    if !(0.0..0.5).contains(&q) {
        return Err(FundamentalsError::InvalidWinsorFraction(q));
    }
    if xs.len() < 2 {
        return Ok(());
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let last = (sorted.len() - 1) as f64;
    let lo = sorted[libm::floor(q * last) as usize];
    let hi = sorted[libm::ceil((1.0 - q) * last) as usize];
    for x in xs.iter_mut() {
        *x = x.clamp(lo, hi);
    }
    Ok(())
}

/// Next-period revenue `R_prev / (1 - g)`.
pub fn project_revenue(previous: f64, growth_mean: f64) -> Result<f64, FundamentalsError> {
    if growth_mean >= 1.0 - GROWTH_UNITY_EPSILON || growth_mean.is_nan() {
        return Err(FundamentalsError::GrowthMeanAtUnity(growth_mean));
    }
    Ok(previous / (1.0 - growth_mean))
}

/// Projected factor value `R(t) · μ_i`.
pub fn project_factor(revenue: f64, share: f64) -> f64 {
    revenue * share
}
