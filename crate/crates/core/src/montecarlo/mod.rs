//! Monte-Carlo estimation and the simulated distribution of intrinsic prices.

mod rng;

pub use rng::{Generator, Substream};

use alloc::vec::Vec;

use thiserror::Error;

use crate::fundamentals::{project_revenue, NormalizedFactors};
use crate::stats::Welford;
use crate::valuation::{CashFlowPath, NrrConfig, ValuationError};

/// Smallest accepted sample count for a valuation run.
pub const MIN_SAMPLES: usize = 100;

/// Redraws allowed for a sample whose projected series diverges.
pub const MAX_ATTEMPTS: u32 = 100;

/// Largest fraction of samples that may be rejected before a run aborts.
pub const MAX_REJECTED_FRACTION: f64 = 0.01;

/// Rejection draws for a truncated normal before falling back to clamping.
const TRUNCATION_ATTEMPTS: u32 = 64;

/// Monte-Carlo errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonteCarloError {
    /// A draw of the integrand was NaN or infinite.
    #[error("non-finite sample at draw {0}")]
    NonFiniteSample(usize),
    /// Too many samples had divergent projections.
    #[error("{rejected} of {total} samples rejected as divergent")]
    AllSamplesRejected {
        /// Samples rejected after all redraws.
        rejected: usize,
        /// Samples requested.
        total: usize,
    },
    /// Fewer samples than [`MIN_SAMPLES`].
    #[error("at least {MIN_SAMPLES} samples are required, got {0}")]
    TooFewSamples(usize),
    /// The horizon cannot support a tail estimate.
    #[error("horizon must be at least 2 periods, got {0}")]
    HorizonTooShort(u32),
    /// Bootstrap requested on factors with no history.
    #[error("bootstrap sampling needs historical samples")]
    NoHistory,
    /// The cash-flow map refers to a factor that does not exist.
    #[error("cash-flow map refers to factor {index}, but only {count} exist")]
    UnknownFactor {
        /// Requested factor.
        index: usize,
        /// Available factors.
        count: usize,
    },
    /// Starting revenue must be positive and finite.
    #[error("starting revenue {0} must be positive")]
    NonPositiveRevenue(f64),
    /// A valuation error that is not a divergence.
    #[error(transparent)]
    Valuation(#[from] ValuationError),
}

/// How factor shares and growth are drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Distribution {
    /// Independent `Normal(μ_i, σ_i)` shares truncated to `[0, 1]`, and
    /// `Normal(ḡ, σ_g)` growth.
    #[default]
    Normal,
    /// One historical period drawn uniformly; its shares and growth are used
    /// together, preserving cross-factor dependence.
    Bootstrap,
}

/// Sampling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimulationConfig {
    /// Number of price samples.
    pub n_samples: usize,
    /// Seed of every stream.
    pub seed: u64,
    /// Sampling scheme.
    pub distribution: Distribution,
    /// Explicit projection periods before the tail.
    pub horizon: u32,
    /// Stream generator.
    pub generator: Generator,
}

impl SimulationConfig {
    /// Checks the sample count and horizon.
    pub fn validate(&self) -> Result<(), MonteCarloError> {
        if self.n_samples < MIN_SAMPLES {
            return Err(MonteCarloError::TooFewSamples(self.n_samples));
        }
        if self.horizon < 2 {
            return Err(MonteCarloError::HorizonTooShort(self.horizon));
        }
        Ok(())
    }
}

/// Mean and spread of a Monte-Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    /// Sample mean of the integrand.
    pub mean: f64,
    /// Sample standard deviation of the integrand.
    pub std: f64,
    /// Number of draws.
    pub n: usize,
}

impl Estimate {
    /// Standard error of the mean, `std / sqrt(n)`.
    pub fn std_error(&self) -> f64 {
        self.std / libm::sqrt(self.n as f64)
    }
}

/// `E[g(X)] ≈ (1/n) Σ g(X_i)` over `n` draws of `sample`.
///
/// Draws come from stream 0 of `generator` keyed by `seed`, so identical
/// arguments produce bit-identical results.
pub fn mc_expectation<S, G>(sample: S, g: G, n: usize, seed: u64, generator: Generator) -> Result<f64, MonteCarloError>
where
    S: FnMut(&mut Substream) -> f64,
    G: FnMut(f64) -> f64,
{
    mc_estimate(sample, g, n, seed, generator).map(|e| e.mean)
}

/// [`mc_expectation`] with the sample standard deviation.
pub fn mc_estimate<S, G>(
    mut sample: S,
    mut g: G,
    n: usize,
    seed: u64,
    generator: Generator,
) -> Result<Estimate, MonteCarloError>
where
    S: FnMut(&mut Substream) -> f64,
    G: FnMut(f64) -> f64,
{
    assert!(n >= 1, "at least one draw is required");
    let mut stream = generator.stream(seed, 0);
    let mut acc = Welford::new();
    for i in 0..n {
        let y = g(sample(&mut stream));
        if !y.is_finite() {
            return Err(MonteCarloError::NonFiniteSample(i));
        }
        acc.push(y);
    }
    Ok(Estimate {
        mean: acc.mean(),
        std: acc.sample_std(),
        n,
    })
}

/// Maps revenue and drawn factor shares to one period's free cash flow.
pub trait CashFlowMap {
    /// Free cash flow for a period with `revenue` and drawn `shares`.
    fn flow(&self, revenue: f64, shares: &[f64]) -> f64;

    /// Highest factor index the map reads, if any.
    fn required_factor(&self) -> Option<usize> {
        None
    }
}

impl<F> CashFlowMap for F
where
    F: Fn(f64, &[f64]) -> f64,
{
    fn flow(&self, revenue: f64, shares: &[f64]) -> f64 {
        self(revenue, shares)
    }
}

/// Built-in cash-flow maps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum StandardMap {
    /// Revenue net of every factor: `R (1 - Σ shares)`.
    #[default]
    RevenueLessCosts,
    /// One factor is itself the free-cash-flow share: `R · share[i]`.
    Factor(usize),
}

impl CashFlowMap for StandardMap {
    fn flow(&self, revenue: f64, shares: &[f64]) -> f64 {
        match *self {
            StandardMap::RevenueLessCosts => revenue * (1.0 - shares.iter().sum::<f64>()),
            StandardMap::Factor(i) => revenue * shares[i],
        }
    }

    fn required_factor(&self) -> Option<usize> {
        match *self {
            StandardMap::RevenueLessCosts => None,
            StandardMap::Factor(i) => Some(i),
        }
    }
}

/// Projects `horizon` periods of revenue at constant `growth` from
/// `revenue`, mapping each to a cash flow.
pub fn project_path<M: CashFlowMap + ?Sized>(
    revenue: f64,
    growth: f64,
    shares: &[f64],
    horizon: u32,
    map: &M,
) -> Result<CashFlowPath, ValuationError> {
    let mut flows = Vec::with_capacity(horizon as usize);
    let mut r = revenue;
    for _ in 0..horizon {
        r = project_revenue(r, growth).map_err(|_| ValuationError::DivergentSeries { ratio: f64::INFINITY })?;
        flows.push(map.flow(r, shares));
    }
    CashFlowPath::new(flows)
}

/// The path obtained from the mean shares and mean growth.
pub fn mean_path<M: CashFlowMap + ?Sized>(
    factors: &NormalizedFactors,
    revenue: f64,
    horizon: u32,
    map: &M,
) -> Result<CashFlowPath, ValuationError> {
    let shares: Vec<f64> = factors.factor_stats().iter().map(|s| s.mean).collect();
    project_path(revenue, factors.growth_mean(), &shares, horizon, map)
}

/// Simulated intrinsic prices.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PriceDistribution {
    samples: Vec<f64>,
    mean: f64,
    std: f64,
    rejected: usize,
}

impl PriceDistribution {
    /// Computes the mean and sample standard deviation of `samples`.
    pub fn from_samples(samples: Vec<f64>, rejected: usize) -> Self {
        let acc: Welford = samples.iter().copied().collect();
        Self {
            mean: acc.mean(),
            std: acc.sample_std(),
            samples,
            rejected,
        }
    }

    /// Accepted samples in sample-index order.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Mean price `P_t`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Standard deviation `σ_0`.
    pub fn std(&self) -> f64 {
        self.std
    }

    /// Samples rejected after exhausting redraws.
    pub fn rejected(&self) -> usize {
        self.rejected
    }

    /// Every price divided by `k`; used to express totals per share.
    pub fn scaled(&self, k: f64) -> Self {
        Self::from_samples(self.samples.iter().map(|x| x / k).collect(), self.rejected)
    }
}

/// Per-sample valuation engine.
///
/// Sample `i` reads only streams `i * (n_factors + 1) + slot`, so samples can
/// be evaluated in any order, or in parallel, and collected by index with
/// results identical to [`ValuationSimulator::run`].
pub struct ValuationSimulator<'a, M: ?Sized> {
    factors: &'a NormalizedFactors,
    revenue: f64,
    nrr: &'a NrrConfig,
    config: SimulationConfig,
    map: &'a M,
}

impl<'a, M: CashFlowMap + ?Sized> ValuationSimulator<'a, M> {
    /// Validates inputs.
    pub fn new(
        factors: &'a NormalizedFactors,
        revenue: f64,
        nrr: &'a NrrConfig,
        config: SimulationConfig,
        map: &'a M,
    ) -> Result<Self, MonteCarloError> {
        config.validate()?;
        if !(revenue > 0.0 && revenue.is_finite()) {
            return Err(MonteCarloError::NonPositiveRevenue(revenue));
        }
        let count = factors.factor_names().len();
        if let Some(index) = map.required_factor() {
            if index >= count {
                return Err(MonteCarloError::UnknownFactor { index, count });
            }
        }
        if config.distribution == Distribution::Bootstrap && !factors.has_history() {
            return Err(MonteCarloError::NoHistory);
        }
        Ok(Self {
            factors,
            revenue,
            nrr,
            config,
            map,
        })
    }

    /// Price of sample `index`, or `None` if every redraw diverged.
    pub fn sample(&self, index: usize) -> Result<Option<f64>, MonteCarloError> {
        let n_factors = self.factors.factor_names().len();
        let slots = n_factors as u64 + 1;
        let base = index as u64 * slots;
        let seed = self.config.seed;
        let generator = self.config.generator;
        let mut growth_stream = generator.stream(seed, base);
        let mut share_streams: Vec<Substream> = (1..slots).map(|slot| generator.stream(seed, base + slot)).collect();
        let mut shares = alloc::vec![0.0; n_factors];

        for _ in 0..MAX_ATTEMPTS {
            let growth = match self.config.distribution {
                Distribution::Normal => {
                    for ((share, stream), stats) in shares
                        .iter_mut()
                        .zip(share_streams.iter_mut())
                        .zip(self.factors.factor_stats())
                    {
                        *share = truncated_normal(stream, stats.mean, stats.std);
                    }
                    growth_stream.normal(self.factors.growth_mean(), self.factors.growth_std())
                }
                Distribution::Bootstrap => {
                    let history = self.factors.growth_samples();
                    let row = growth_stream.index(history.len());
                    // growth sample k belongs to period k + 1
                    for (share, column) in shares.iter_mut().zip(self.factors.samples()) {
                        *share = column[row + 1];
                    }
                    history[row]
                }
            };

            match project_path(self.revenue, growth, &shares, self.config.horizon, self.map)
                .and_then(|path| self.nrr.present_value(&path))
            {
                Ok(price) => return Ok(Some(price)),
                Err(ValuationError::DivergentSeries { .. }) => continue,
                Err(ValuationError::NonFiniteFlow { .. }) => return Err(MonteCarloError::NonFiniteSample(index)),
                Err(other) => return Err(other.into()),
            }
        }
        Ok(None)
    }

    /// Evaluates every sample in order.
    pub fn run(&self) -> Result<PriceDistribution, MonteCarloError> {
        let results = (0..self.config.n_samples)
            .map(|i| self.sample(i))
            .collect::<Result<Vec<_>, _>>()?;
        collect_samples(results)
    }
}

/// Builds the distribution from per-sample results in index order,
/// enforcing the rejection budget.
pub fn collect_samples(results: Vec<Option<f64>>) -> Result<PriceDistribution, MonteCarloError> {
    let total = results.len();
    let samples: Vec<f64> = results.into_iter().flatten().collect();
    let rejected = total - samples.len();
    if rejected as f64 > MAX_REJECTED_FRACTION * total as f64 || samples.is_empty() {
        return Err(MonteCarloError::AllSamplesRejected { rejected, total });
    }
    Ok(PriceDistribution::from_samples(samples, rejected))
}

/// Simulates the distribution of intrinsic prices.
///
/// Each sample draws factor shares and a growth rate once, projects revenue
/// for `config.horizon` periods, maps it to cash flows and discounts the
/// path at the required rate. Samples whose series diverges are redrawn up
/// to [`MAX_ATTEMPTS`] times, then rejected; more than
/// [`MAX_REJECTED_FRACTION`] rejections abort the run.
pub fn simulate_valuation<M: CashFlowMap + ?Sized>(
    factors: &NormalizedFactors,
    revenue: f64,
    nrr: &NrrConfig,
    config: SimulationConfig,
    map: &M,
) -> Result<PriceDistribution, MonteCarloError> {
    ValuationSimulator::new(factors, revenue, nrr, config, map)?.run()
}

fn truncated_normal(stream: &mut Substream, mean: f64, std: f64) -> f64 {
    for _ in 0..TRUNCATION_ATTEMPTS {
        let x = stream.normal(mean, std);
        if (0.0..=1.0).contains(&x) {
            return x;
        }
    }
    mean.clamp(0.0, 1.0)
}

/// Mixes `label` into `seed` so unrelated runs sharing a base seed get
/// unrelated streams.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, then a splitmix64 finalizer
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
