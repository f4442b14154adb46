//! Agent-based Monte Carlo risk engine for Comet-style single-base-asset
//! lending markets.
//!
//! The crate is organized around five subsystems:
//!
//! - [`market`] — deterministic market state machine: collateral accounting,
//!   kinked rate curves, interest accrual, absorb / discounted collateral
//!   sales, and the protocol-loss ledger.
//! - [`price`] — ARMA-GARCH log-return fitting and correlated multi-asset
//!   price path simulation on a counter-addressable RNG.
//! - [`slippage`] — fitted order-size → slippage-percent curves.
//! - [`agents`] — borrower admission filters and the liquidator bot policy.
//! - [`engine`] — per-path simulation, the staged VaR convergence protocol,
//!   and LaR aggregation.
//!
//! All USD amounts use 128-bit fixed-point arithmetic ([`fixed::Usd`]) and all
//! randomness flows through seekable per-path streams ([`price::rng`]), so a
//! scenario run is bit-identical across runs, worker counts, and machines.

pub mod agents;
pub mod detmath;
pub mod engine;
pub mod fixed;
pub mod market;
pub mod price;
pub mod slippage;

pub use agents::{BorrowerFilter, LiquidatorConfig, ProfitReport};
pub use engine::{
    estimate_lar, percentile, LarReport, PathOutcome, Scenario, VarConfig, VarReport,
};
pub use fixed::{Fraction, Rate, TokenAmount, Usd};
pub use market::{
    Account, AbsorbEvent, AssetId, CollateralConfig, IRParams, LossCause, LossRecord,
    MarketParams, MarketState, PriceVector,
};
pub use price::{CorrelationMatrix, GarchSpec, GarchState, PricePathSet};
pub use slippage::{SlippageForm, SlippageModel, SlippageSample};
