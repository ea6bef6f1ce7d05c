use thiserror::Error;

use crate::fundamentals::FundamentalsError;
use crate::kelly::KellyError;
use crate::montecarlo::MonteCarloError;
use crate::portfolio::PortfolioError;
use crate::safety::SafetyError;
use crate::valuation::ValuationError;

/// Any error raised by this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// See [`FundamentalsError`].
    #[error(transparent)]
    Fundamentals(#[from] FundamentalsError),
    /// See [`ValuationError`].
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    /// See [`MonteCarloError`].
    #[error(transparent)]
    MonteCarlo(#[from] MonteCarloError),
    /// See [`SafetyError`].
    #[error(transparent)]
    Safety(#[from] SafetyError),
    /// See [`KellyError`].
    #[error(transparent)]
    Kelly(#[from] KellyError),
    /// See [`PortfolioError`].
    #[error(transparent)]
    Portfolio(#[from] PortfolioError),
}
