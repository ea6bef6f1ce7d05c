//! Present value, the growth constant and the market-implied rate.
//!
//! Prices handled by [`growth_constant`], [`implied_rate`] and
//! [`closed_form_price`] are *multiples*: a valuation divided by the first
//! discounted term of its cash-flow series, `F(1) / (1 + N)`. In that unit a
//! series growing geometrically by `c` per period is worth
//!
//! ```text
//! P = 1 / (1 - c / (1 + N)) = (1 + N) / (1 + N - c)
//! ```
//!
//! and `c` is exactly the growth factor of the flows. Absolute prices are
//! recovered by multiplying by the unit.

use thiserror::Error;

use crate::roots::{bisect, RootError};

/// Default margin below one for the tail ratio test.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-9;

/// Bisection bracket for [`implied_rate`].
pub const IMPLIED_RATE_BRACKET: (f64, f64) = (1e-6, 1.0 - 1e-6);

/// Largest tolerated gap between the closed form and bisection.
pub const IMPLIED_RATE_AGREEMENT: f64 = 1e-9;

/// Errors raised by valuation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValuationError {
    /// A rate outside `(0, 1)`.
    #[error("rate {0} outside (0, 1)")]
    RateOutOfRange(f64),
    /// The projection horizon is zero.
    #[error("horizon must be at least one period")]
    ZeroHorizon,
    /// The tail tolerance is not a small positive number.
    #[error("tail tolerance {0} must lie in (0, 1)")]
    InvalidTailTolerance(f64),
    /// A cash flow is NaN or infinite.
    #[error("cash flow {index} is not finite")]
    NonFiniteFlow {
        /// Zero-based position in the path.
        index: usize,
    },
    /// The path is empty, or too short to estimate a tail ratio.
    #[error("cash-flow path of length {0} is too short")]
    PathTooShort(usize),
    /// The tail ratio test failed.
    #[error("series diverges: tail ratio {ratio} is not below 1")]
    DivergentSeries {
        /// Estimated `|F(T) / (F(T-1) (1 + N))|`.
        ratio: f64,
    },
    /// A starting price at or below zero.
    #[error("price {0} must be positive")]
    NonPositivePrice(f64),
    /// Price multiple at or below one.
    #[error("price multiple {0} must exceed 1")]
    PriceAtOrBelowUnity(f64),
    /// A growth constant outside `(1, 1 + rate)`.
    #[error("growth constant {c} outside (1, {upper})")]
    NonConvergentRegime {
        /// Offending growth constant.
        c: f64,
        /// `1 + rate`.
        upper: f64,
    },
    /// The market-implied rate lies outside `(0, 1)`.
    #[error("implied rate {0} outside (0, 1)")]
    NoRootInUnitInterval(f64),
    /// A Table 1 derivative was requested at a pole.
    #[error("singular point: P = {price}, M = {rate}, c = {c}")]
    SingularPoint {
        /// Price multiple.
        price: f64,
        /// Rate.
        rate: f64,
        /// Growth constant.
        c: f64,
    },
}

/// A per-period rate in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "f64", into = "f64"))]
pub struct Rate(f64);

impl Rate {
    /// Validates `0 < value < 1`.
    pub fn new(value: f64) -> Result<Self, ValuationError> {
        if value > 0.0 && value < 1.0 {
            Ok(Rate(value))
        } else {
            Err(ValuationError::RateOutOfRange(value))
        }
    }

    /// The rate as a fraction.
    pub fn get(self) -> f64 {
        self.0
    }

    /// The multiple `1 / rate` an investor pays per unit of flow.
    pub fn multiple(self) -> f64 {
        1.0 / self.0
    }
}

impl TryFrom<f64> for Rate {
    type Error = ValuationError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Rate::new(value)
    }
}

impl From<Rate> for f64 {
    fn from(rate: Rate) -> f64 {
        rate.0
    }
}

/// The investor's required rate together with the projection horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NrrConfig {
    rate: Rate,
    horizon: u32,
    tail_tolerance: f64,
}

impl NrrConfig {
    /// Validates and builds a configuration.
    pub fn new(rate: f64, horizon: u32, tail_tolerance: f64) -> Result<Self, ValuationError> {
        let rate = Rate::new(rate)?;
        if horizon == 0 {
            return Err(ValuationError::ZeroHorizon);
        }
        if !(tail_tolerance > 0.0 && tail_tolerance < 1.0) {
            return Err(ValuationError::InvalidTailTolerance(tail_tolerance));
        }
        Ok(Self {
            rate,
            horizon,
            tail_tolerance,
        })
    }

    /// Required rate `N`.
    pub fn rate(&self) -> Rate {
        self.rate
    }

    /// Explicit projection horizon.
    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    /// Margin below one demanded of the tail ratio.
    pub fn tail_tolerance(&self) -> f64 {
        self.tail_tolerance
    }

    /// `1 / N`.
    pub fn nrrm(&self) -> f64 {
        self.rate.multiple()
    }

    /// [`present_value_with_tail`] using this configuration.
    pub fn present_value(&self, path: &CashFlowPath) -> Result<f64, ValuationError> {
        present_value_with_tail(path, self.rate, self.tail_tolerance)
    }
}

/// Projected free cash flows `F(1), ..., F(T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CashFlowPath(alloc::vec::Vec<f64>);

impl CashFlowPath {
    /// Validates that the path is non-empty and finite.
    pub fn new(flows: alloc::vec::Vec<f64>) -> Result<Self, ValuationError> {
        if flows.is_empty() {
            return Err(ValuationError::PathTooShort(0));
        }
        if let Some(index) = flows.iter().position(|f| !f.is_finite()) {
            return Err(ValuationError::NonFiniteFlow { index });
        }
        Ok(Self(flows))
    }

    /// The flows, first period first.
    pub fn flows(&self) -> &[f64] {
        &self.0
    }

    /// Horizon `T`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; paths are non-empty.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Discounted sum of the explicit flows, with no tail.
///
/// This is the value of a finite-life (discrete) asset.
pub fn finite_present_value(path: &CashFlowPath, rate: Rate) -> f64 {
    let base = 1.0 + rate.get();
    path.flows()
        .iter()
        .enumerate()
        .map(|(j, f)| f / libm::pow(base, (j + 1) as f64))
        .sum()
}

/// [`present_value_with_tail`] with [`DEFAULT_TAIL_TOLERANCE`].
pub fn present_value(path: &CashFlowPath, rate: Rate) -> Result<f64, ValuationError> {
    present_value_with_tail(path, rate, DEFAULT_TAIL_TOLERANCE)
}

/// Value of an indefinite cash-flow series.
///
/// The explicit flows are discounted at `rate`; the remainder of the series
/// is closed with a geometric tail whose ratio is the last step,
/// `F(T) / (F(T-1) (1 + N))`. The series is rejected as divergent unless that
/// ratio is below `1 - tail_tolerance` in absolute value.
pub fn present_value_with_tail(path: &CashFlowPath, rate: Rate, tail_tolerance: f64) -> Result<f64, ValuationError> {
    let flows = path.flows();
    let horizon = flows.len();
    if horizon < 2 {
        return Err(ValuationError::PathTooShort(horizon));
    }
    let base = 1.0 + rate.get();
    let explicit = finite_present_value(path, rate);

    let last = flows[horizon - 1];
    let before = flows[horizon - 2];
    if last == 0.0 {
        return Ok(explicit);
    }
    if before == 0.0 {
        return Err(ValuationError::DivergentSeries { ratio: f64::INFINITY });
    }
    let ratio = last / (before * base);
    if !(ratio.abs() < 1.0 - tail_tolerance) {
        return Err(ValuationError::DivergentSeries { ratio });
    }
    let last_discounted = last / libm::pow(base, horizon as f64);
    Ok(explicit + last_discounted * ratio / (1.0 - ratio))
}

/// Gross one-period return `(p_next + d_next) / p_t`.
pub fn holding_period_return(price: f64, next_price: f64, dividend: f64) -> Result<f64, ValuationError> {
    if !(price > 0.0) {
        return Err(ValuationError::NonPositivePrice(price));
    }
    Ok((next_price + dividend) / price)
}

/// Equivalent geometric growth factor of a valuation.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct GrowthConstant(f64);

impl GrowthConstant {
    /// Validates `c > 1`. The rate-dependent upper bound is checked where a
    /// rate is known.
    pub fn new(c: f64) -> Result<Self, ValuationError> {
        if c > 1.0 && c.is_finite() {
            Ok(GrowthConstant(c))
        } else {
            Err(ValuationError::NonConvergentRegime {
                c,
                upper: f64::INFINITY,
            })
        }
    }

    /// The factor `c`.
    pub fn get(self) -> f64 {
        self.0
    }
}

/// Growth constant `c = (P - 1)(1 + M) / P` of a price multiple at `rate`.
///
/// Fails with [`ValuationError::PriceAtOrBelowUnity`] for `P <= 1`, and with
/// [`ValuationError::NonConvergentRegime`] when `c` falls outside
/// `(1, 1 + rate)`.
pub fn growth_constant(price: f64, rate: Rate) -> Result<GrowthConstant, ValuationError> {
    if !(price > 1.0) || price.is_nan() {
        return Err(ValuationError::PriceAtOrBelowUnity(price));
    }
    let upper = 1.0 + rate.get();
    let c = (price - 1.0) * upper / price;
    if !(c > 1.0 && c < upper) {
        return Err(ValuationError::NonConvergentRegime { c, upper });
    }
    Ok(GrowthConstant(c))
}

/// Price multiple `(1 + M) / (1 + M - c)` of a series growing by `c`.
pub fn closed_form_price(c: GrowthConstant, rate: Rate) -> Result<f64, ValuationError> {
    let upper = 1.0 + rate.get();
    if c.get() >= upper {
        return Err(ValuationError::DivergentSeries { ratio: c.get() / upper });
    }
    Ok(upper / (upper - c.get()))
}

/// Both routes to the market-implied rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpliedRate {
    /// The published rate: the closed form, unless bisection disagrees by
    /// more than [`IMPLIED_RATE_AGREEMENT`].
    pub rate: Rate,
    /// `P c / (P - 1) - 1`.
    pub closed_form: f64,
    /// Root of the series price equation found by bisection.
    pub bisection: f64,
    /// `|closed_form_price(c, bisection) - P|`.
    pub price_residual: f64,
}

/// Rate `M` at which a series growing by `c` is worth `price`.
pub fn implied_rate(price: f64, c: GrowthConstant) -> Result<Rate, ValuationError> {
    implied_rate_detailed(price, c).map(|r| r.rate)
}

/// [`implied_rate`] with the closed-form and bisection results exposed.
pub fn implied_rate_detailed(price: f64, c: GrowthConstant) -> Result<ImpliedRate, ValuationError> {
    if !(price > 1.0) || price.is_nan() {
        return Err(ValuationError::PriceAtOrBelowUnity(price));
    }
    let c_val = c.get();
    let closed_form = price / (price - 1.0) * c_val - 1.0;
    if !(closed_form > 0.0 && closed_form < 1.0) {
        return Err(ValuationError::NoRootInUnitInterval(closed_form));
    }

    // Reciprocal of the price equation: monotone in M and free of the pole at
    // M = c - 1.
    let inverse_price = 1.0 / price;
    let residual = |m: f64| 1.0 - c_val / (1.0 + m) - inverse_price;
    let (lo, hi) = IMPLIED_RATE_BRACKET;
    let root = bisect(residual, lo, hi, 0.0, 200).map_err(|e| match e {
        RootError::NoSignChange { .. } | RootError::NonFinite(_) => ValuationError::NoRootInUnitInterval(closed_form),
    })?;
    let bisection = root.x;

    let published = if (bisection - closed_form).abs() > IMPLIED_RATE_AGREEMENT {
        bisection
    } else {
        closed_form
    };
    let rate = Rate::new(published)?;
    let price_residual = (closed_form_price(c, Rate::new(bisection)?)? - price).abs();
    Ok(ImpliedRate {
        rate,
        closed_form,
        bisection,
        price_residual,
    })
}

/// The six partial derivatives relating price multiple, rate and growth
/// constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensitivities {
    /// `∂P/∂c = (1 + M) / (1 + M - c)^2`.
    pub dp_dc: f64,
    /// `∂P/∂M = -c / (1 + M - c)^2`.
    pub dp_dm: f64,
    /// `∂c/∂M = (P - 1) / P`.
    pub dc_dm: f64,
    /// `∂c/∂P = (1 + M) / P^2`.
    pub dc_dp: f64,
    /// `∂M/∂c = P / (P - 1)`.
    pub dm_dc: f64,
    /// `∂M/∂P = -c / (P - 1)^2`.
    pub dm_dp: f64,
}

/// Evaluates [`Sensitivities`] at `(price, rate, c)`.
///
/// Each derivative is taken of its own explicit relation, so the three
/// arguments need not be mutually consistent.
pub fn sensitivities(price: f64, rate: f64, c: f64) -> Result<Sensitivities, ValuationError> {
    let gap = 1.0 + rate - c;
    if gap == 0.0 || price == 1.0 || price == 0.0 {
        return Err(ValuationError::SingularPoint { price, rate, c });
    }
    let s = Sensitivities {
        dp_dc: (1.0 + rate) / (gap * gap),
        dp_dm: -c / (gap * gap),
        dc_dm: (price - 1.0) / price,
        dc_dp: (1.0 + rate) / (price * price),
        dm_dc: price / (price - 1.0),
        dm_dp: -c / ((price - 1.0) * (price - 1.0)),
    };
    let all_finite = [s.dp_dc, s.dp_dm, s.dc_dm, s.dc_dp, s.dm_dc, s.dm_dp]
        .iter()
        .all(|d| d.is_finite());
    if !all_finite {
        return Err(ValuationError::SingularPoint { price, rate, c });
    }
    Ok(s)
}
