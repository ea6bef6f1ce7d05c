//! End-to-end evaluation of one asset.
//!
//! Totals from the fundamentals panel are converted to per-share amounts by
//! dividing by the share count. Growth-constant and implied-rate arithmetic
//! works on price multiples of the unit flow `F(1) / (1 + N)`, where `F(1)`
//! is the first projected cash flow of the mean path.

use alloc::string::String;

use crate::fundamentals::{normalize_with, FundamentalSeries, NormalizeOptions, NormalizedFactors};
use crate::kelly::{kelly_decision, KellyConfig, KellyDecision};
use crate::montecarlo::{derive_seed, mean_path, CashFlowMap, PriceDistribution, SimulationConfig, ValuationSimulator};
use crate::safety::{price_dispersion_with, DispersionMeasure, SafetyError, SafetyReport};
use crate::valuation::{
    finite_present_value, growth_constant, implied_rate, CashFlowPath, GrowthConstant, NrrConfig, Rate, ValuationError,
};
use crate::Error;

/// Settings shared by every asset in a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    /// Required rate and tail tolerance.
    pub nrr: NrrConfig,
    /// Sampling settings; the seed is mixed with each asset id.
    pub simulation: SimulationConfig,
    /// Normalization options.
    pub normalize: NormalizeOptions,
}

/// Simulated valuation of one asset, per share.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetValuation {
    /// Asset id.
    pub asset_id: String,
    /// Seed actually used for this asset's streams.
    pub seed: u64,
    /// Normalized fundamentals behind the simulation.
    pub factors: NormalizedFactors,
    /// Simulated intrinsic prices per share.
    pub distribution: PriceDistribution,
    /// Value of the mean path per share.
    pub point_value: f64,
    /// Per-share unit flow `F(1) / (1 + N)` of the mean path.
    pub unit_flow: f64,
    /// `P_t / unit_flow`.
    pub price_multiple: f64,
    /// Growth constant of the valuation at the required rate.
    pub growth_constant: GrowthConstant,
}

/// Normalizes, simulates and extracts the growth constant.
pub fn value_asset<M: CashFlowMap + ?Sized>(
    series: &FundamentalSeries,
    shares_outstanding: f64,
    config: &PipelineConfig,
    map: &M,
) -> Result<AssetValuation, Error> {
    if !(shares_outstanding > 0.0) || !shares_outstanding.is_finite() {
        return Err(ValuationError::NonPositivePrice(shares_outstanding).into());
    }
    let factors = normalize_with(series, config.normalize)?;
    let revenue = series
        .last_revenue()
        .expect("normalize guarantees at least three periods");
    let seed = derive_seed(config.simulation.seed, series.asset_id());
    let simulation = SimulationConfig {
        seed,
        ..config.simulation
    };
    let totals = ValuationSimulator::new(&factors, revenue, &config.nrr, simulation, map)?.run()?;
    let distribution = totals.scaled(shares_outstanding);

    let path = mean_path(&factors, revenue, simulation.horizon, map)?;
    let point_value = config.nrr.present_value(&path)? / shares_outstanding;
    let unit_flow = path.flows()[0] / (1.0 + config.nrr.rate().get()) / shares_outstanding;
    if !(unit_flow > 0.0) {
        return Err(ValuationError::PriceAtOrBelowUnity(f64::NAN).into());
    }
    let price_multiple = distribution.mean() / unit_flow;
    let growth_constant = growth_constant(price_multiple, config.nrr.rate())?;

    Ok(AssetValuation {
        asset_id: series.asset_id().into(),
        seed,
        factors,
        distribution,
        point_value,
        unit_flow,
        price_multiple,
        growth_constant,
    })
}

/// Both margins of safety and the GB-ratio against the latest market price.
pub fn assess_safety(
    valuation: &AssetValuation,
    required: Rate,
    market_price: f64,
    prices: &[f64],
    window: usize,
    measure: DispersionMeasure,
) -> Result<SafetyReport, Error> {
    if !(market_price > 0.0) {
        return Err(SafetyError::NonPositiveMarketPrice(market_price).into());
    }
    let market_multiple = market_price / valuation.unit_flow;
    let market_rate = implied_rate(market_multiple, valuation.growth_constant)?;
    let dispersion = price_dispersion_with(prices, window, measure)?;
    Ok(SafetyReport::new(
        required,
        market_rate,
        valuation.distribution.mean(),
        market_price,
        dispersion,
    )?)
}

/// Kelly sizing against the latest market price.
pub fn size_position(
    valuation: &AssetValuation,
    market_price: f64,
    config: KellyConfig,
    prior: Option<f64>,
) -> Result<KellyDecision, Error> {
    Ok(kelly_decision(
        valuation.distribution.mean(),
        valuation.distribution.std(),
        market_price,
        config,
        prior,
    )?)
}

/// Value of a finite-life claim: discounted flows with no tail.
pub fn value_discrete(flows: &CashFlowPath, rate: Rate) -> f64 {
    finite_present_value(flows, rate)
}

/// Cash is worth its face amount.
pub fn value_cash(face: f64) -> f64 {
    face
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fundamentals::{AssetKind, Period};
    use crate::montecarlo::{Distribution, Generator, StandardMap};
    use alloc::string::ToString;
    use alloc::vec;
    use alloc::vec::Vec;

    fn growing_series() -> FundamentalSeries {
        // 4% revenue growth (current-period denominator), costs near 85%
        let mut revenue = 1000.0;
        let costs = [0.84, 0.86, 0.85, 0.85, 0.84, 0.86];
        let periods: Vec<Period> = costs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if i > 0 {
                    revenue /= 1.0 - 0.04;
                }
                Period {
                    index: i as i64,
                    revenue,
                    factors: vec![revenue * c],
                }
            })
            .collect();
        FundamentalSeries::new("GROW", AssetKind::Dynamic, vec!["costs".to_string()], periods, vec![]).unwrap()
    }

    fn config() -> PipelineConfig {
        PipelineConfig {
            nrr: NrrConfig::new(0.10, 20, 1e-9).unwrap(),
            simulation: SimulationConfig {
                n_samples: 500,
                seed: 7,
                distribution: Distribution::Normal,
                horizon: 20,
                generator: Generator::ChaCha20,
            },
            normalize: NormalizeOptions::default(),
        }
    }

    #[test]
    fn growth_constant_tracks_revenue_growth() {
        let v = value_asset(&growing_series(), 10.0, &config(), &StandardMap::default()).unwrap();
        // the mean path grows by 1 / (1 - 0.04) per period
        let unit = v.point_value / v.unit_flow;
        let c_point = crate::valuation::growth_constant(unit, Rate::new(0.10).unwrap()).unwrap();
        assert!((c_point.get() - 1.0 / 0.96).abs() < 1e-9, "{}", c_point.get());
        assert!(v.growth_constant.get() > 1.0 && v.growth_constant.get() < 1.1);
    }

    #[test]
    fn fair_price_has_zero_margins() {
        let v = value_asset(&growing_series(), 10.0, &config(), &StandardMap::default()).unwrap();
        let p = v.distribution.mean();
        let prices = [p * 0.9, p * 1.1, p];
        let r = assess_safety(&v, Rate::new(0.10).unwrap(), p, &prices, 10, DispersionMeasure::StdDev).unwrap();
        assert!(r.delta.abs() < 1e-9, "{}", r.delta);
        assert_eq!(r.classic, 0.0);
        let k = size_position(&v, p, KellyConfig::default(), None).unwrap();
        assert_eq!(k.wager, 0.0);
    }

    #[test]
    fn cheap_price_has_positive_margins() {
        let v = value_asset(&growing_series(), 10.0, &config(), &StandardMap::default()).unwrap();
        let p = 0.6 * v.distribution.mean();
        let r = assess_safety(
            &v,
            Rate::new(0.10).unwrap(),
            p,
            &[p, p * 1.05, p],
            10,
            DispersionMeasure::StdDev,
        )
        .unwrap();
        assert!(r.delta > 0.0 && r.classic > 0.0);
        assert!(r.gb_ratio.unwrap() > 0.0);
        assert!(assess_safety(
            &v,
            Rate::new(0.10).unwrap(),
            0.0,
            &[1.0, 1.0],
            10,
            DispersionMeasure::StdDev
        )
        .is_err());
    }

    #[test]
    fn other_asset_kinds() {
        let bond = CashFlowPath::new(vec![5.0, 105.0]).unwrap();
        assert!((value_discrete(&bond, Rate::new(0.05).unwrap()) - 100.0).abs() < 1e-12);
        assert_eq!(value_cash(250.0), 250.0);
    }
}
