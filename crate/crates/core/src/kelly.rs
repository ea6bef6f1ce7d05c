//! Kelly probability, edge and wager from a simulated valuation.
//!
//! With valuation mean `P_t`, spread `σ_0` and market price `P_m`:
//!
//! ```text
//! p     = max(0, 1 - 2 Φ((P_m - P_t) / σ_0))
//! q     = 1 - p
//! e     = P_t p - P_m q
//! wager = clamp(e / P_t, 0, cap)
//! ```
//!
//! `p` is zero at and above fair value, and approaches one as the market
//! price falls several standard deviations below the valuation.

use alloc::vec::Vec;

use thiserror::Error;

/// Default cap on a single wager.
pub const DEFAULT_WAGER_CAP: f64 = 0.25;

/// Default exit threshold on `|e|`, relative to `P_t`.
pub const DEFAULT_EDGE_EPSILON: f64 = 1e-6;

/// Errors from Kelly sizing.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KellyError {
    /// `σ_0 = 0` where a spread is needed.
    #[error("standard deviation is zero")]
    ZeroSigma,
    /// `σ_0` negative or not finite.
    #[error("invalid standard deviation {0}")]
    InvalidSigma(f64),
    /// A negative market price.
    #[error("price {0} is negative")]
    NegativePrice(f64),
    /// The valuation is not positive.
    #[error("valuation {0} must be positive")]
    NonPositiveValuation(f64),
    /// Cap outside `(0, 1]` or a negative epsilon.
    #[error("invalid Kelly configuration: cap {cap}, epsilon {epsilon}")]
    InvalidConfig {
        /// Wager cap.
        cap: f64,
        /// Exit threshold.
        epsilon: f64,
    },
}

/// Standard normal cumulative distribution function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// `Φ((x - mean) / std)`.
pub fn normal_cdf(x: f64, mean: f64, std: f64) -> Result<f64, KellyError> {
    check_sigma(std)?;
    Ok(std_normal_cdf((x - mean) / std))
}

/// `ψ(x) = 1 - 2 Φ((x - mean) / std)`, in `(-1, 1)`.
pub fn psi(x: f64, mean: f64, std: f64) -> Result<f64, KellyError> {
    Ok(1.0 - 2.0 * normal_cdf(x, mean, std)?)
}

fn check_sigma(std: f64) -> Result<(), KellyError> {
    if std == 0.0 {
        Err(KellyError::ZeroSigma)
    } else if !(std > 0.0) || !std.is_finite() {
        Err(KellyError::InvalidSigma(std))
    } else {
        Ok(())
    }
}

/// Position-sizing limits.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KellyConfig {
    /// Largest wager; `1.0` is full Kelly.
    pub wager_cap: f64,
    /// Exit when `|e| <= edge_epsilon * P_t`.
    pub edge_epsilon: f64,
}

impl Default for KellyConfig {
    fn default() -> Self {
        Self {
            wager_cap: DEFAULT_WAGER_CAP,
            edge_epsilon: DEFAULT_EDGE_EPSILON,
        }
    }
}

impl KellyConfig {
    /// A config with the given cap and the default epsilon.
    pub fn with_cap(wager_cap: f64) -> Self {
        Self {
            wager_cap,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), KellyError> {
        if self.wager_cap > 0.0 && self.wager_cap <= 1.0 && self.edge_epsilon >= 0.0 {
            Ok(())
        } else {
            Err(KellyError::InvalidConfig {
                cap: self.wager_cap,
                epsilon: self.edge_epsilon,
            })
        }
    }
}

/// What to do with the position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Signal {
    /// Wager above the prior position.
    Add,
    /// Wager equal to the prior position.
    Hold,
    /// Wager below the prior position but positive.
    Trim,
    /// Edge has vanished or turned negative.
    Exit,
    /// `p = 0`: the price is at or above the valuation; hold market weight.
    MarketWeight,
}

/// Sizing outcome for one asset.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KellyDecision {
    /// Win probability.
    pub p: f64,
    /// `1 - p`.
    pub q: f64,
    /// `P_t p - P_m q`, in price units.
    pub edge: f64,
    /// `e / P_t` before clamping.
    pub raw_wager: f64,
    /// Published fraction of capital, in `[0, cap]`.
    pub wager: f64,
    /// Position action relative to the prior wager.
    pub signal: Signal,
    /// `σ_0 = 0`: `p` is the step limit of `ψ`.
    pub degenerate: bool,
}

/// Sizes a position.
///
/// `prior` is the currently held wager (zero if none) and only affects the
/// signal. A zero `σ_0` is treated as the step limit of `ψ`: full cap below
/// the valuation, nothing at or above it, flagged `degenerate`.
pub fn kelly_decision(
    valuation: f64,
    sigma: f64,
    market_price: f64,
    config: KellyConfig,
    prior: Option<f64>,
) -> Result<KellyDecision, KellyError> {
    config.validate()?;
    if !(valuation > 0.0) || !valuation.is_finite() {
        return Err(KellyError::NonPositiveValuation(valuation));
    }
    if market_price < 0.0 || market_price.is_nan() {
        return Err(KellyError::NegativePrice(market_price));
    }
    let degenerate = sigma == 0.0;
    let p = if degenerate {
        if market_price < valuation {
            1.0
        } else {
            0.0
        }
    } else {
        psi(market_price, valuation, sigma)?.max(0.0)
    };
    let q = 1.0 - p;
    let edge = valuation * p - market_price * q;
    let raw_wager = edge / valuation;
    let wager = raw_wager.clamp(0.0, config.wager_cap);

    let prior = prior.unwrap_or(0.0);
    let signal = if p == 0.0 {
        Signal::MarketWeight
    } else if edge.abs() <= config.edge_epsilon * valuation || wager == 0.0 {
        Signal::Exit
    } else if wager > prior {
        Signal::Add
    } else if wager < prior {
        Signal::Trim
    } else {
        Signal::Hold
    };

    Ok(KellyDecision {
        p,
        q,
        edge,
        raw_wager,
        wager,
        signal,
        degenerate,
    })
}

/// `(price, wager)` pairs for plotting the sizing curve.
pub fn wager_curve(
    valuation: f64,
    sigma: f64,
    config: KellyConfig,
    prices: &[f64],
) -> Result<Vec<(f64, f64)>, KellyError> {
    prices
        .iter()
        .map(|&price| kelly_decision(valuation, sigma, price, config, None).map(|d| (price, d.wager)))
        .collect()
}

/// `points` evenly spaced prices from zero to `upper`, inclusive.
pub fn price_grid(upper: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => alloc::vec![0.0],
        _ => {
            let step = upper / (points - 1) as f64;
            (0..points).map(|i| i as f64 * step).collect()
        }
    }
}
