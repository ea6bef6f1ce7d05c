//! Intrinsic valuation, margin of safety and Kelly position sizing.
//!
//! The crate is `no_std` (it needs `alloc`). Every numerical routine uses
//! [`libm`] for transcendental functions so that seeded simulations are
//! reproducible bit-for-bit across targets.
//!
//! The pipeline for one asset is:
//!
//! 1. [`fundamentals::normalize`] turns a revenue/factor panel into
//!    revenue-relative statistics.
//! 2. [`montecarlo::simulate_valuation`] draws factor shares and revenue
//!    growth, projects cash flows and discounts them with
//!    [`valuation::present_value`], yielding a [`montecarlo::PriceDistribution`].
//! 3. [`safety`] compares the valuation with the market price through the
//!    growth constant and the market-implied rate.
//! 4. [`kelly::kelly_decision`] sizes the position and
//!    [`portfolio::allocate`] caps the book.
//!
//! [`pipeline`] wires the steps together for callers that just want the
//! per-asset result.

#![cfg_attr(not(test), no_std)]
#![deny(missing_docs)]
// `!(x > 0.0)` guards reject NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod fundamentals;
pub mod kelly;
pub mod montecarlo;
pub mod pipeline;
pub mod portfolio;
pub mod roots;
pub mod safety;
pub mod stats;
pub mod valuation;

mod error;

pub use error::Error;
pub use fundamentals::{AssetKind, FundamentalSeries, NormalizedFactors};
pub use kelly::{KellyConfig, KellyDecision, Signal};
pub use montecarlo::{PriceDistribution, SimulationConfig};
pub use portfolio::Allocation;
pub use safety::SafetyReport;
pub use valuation::{CashFlowPath, GrowthConstant, NrrConfig, Rate};
