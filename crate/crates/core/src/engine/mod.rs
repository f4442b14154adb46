//! Monte Carlo orchestration: path-local market replicas, the staged VaR
//! convergence protocol, and LaR aggregation.
//!
//! Within a step the ordering is fixed — price update, interest accrual,
//! absorb scan in ascending account id, then the liquidator — and every path
//! owns a private market replica, so results are independent of worker count
//! and path execution order.

pub mod lar;
pub mod var;

pub use lar::{estimate_lar, Histogram, LarColumn, LarReport, PercentileSet, DEFAULT_LAR_BINS};
pub use var::{
    bootstrap_p95_se, percentile, var_protocol, EpsilonSpec, VarConfig, VarReport,
    DEFAULT_MAX_ROUNDS, DEFAULT_PATHS_PER_ROUND,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{execute_liquidation, LiquidatorConfig};
use crate::fixed::{Usd, SCALE_8};
use crate::market::{MarketError, MarketState, PriceVector};
use crate::price::{
    psd_factor, CholFactor, CorrelationMatrix, CounterInnovations, GarchSpec, PathGenerator,
    PriceModelError, StreamKey,
};
use crate::slippage::SlippageModel;

pub const DEFAULT_HORIZON_STEPS: u32 = 1728;
pub const DEFAULT_STEP_SECONDS: u32 = 50;

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("empty sample set")]
    EmptySamples,
    #[error("quantile {0} outside (0, 1]")]
    InvalidQuantile(f64),
    #[error("scenario dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("horizon must be at least one step")]
    EmptyHorizon,
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    PriceModel(#[from] PriceModelError),
}

/// Everything one Monte Carlo run needs, validated and immutable. Paths
/// clone the market replica and stream their own prices.
pub struct Scenario {
    market: MarketState,
    garch: Vec<GarchSpec>,
    slippage: Vec<SlippageModel>,
    liquidator: LiquidatorConfig,
    horizon_steps: u32,
    step_seconds: u32,
    master_seed: u64,
    origin_prices: PriceVector,
    factor: CholFactor,
    key: StreamKey,
    /// Per-account `(limit_at_origin − slack, (debt + slack + 1)·SCALE)`
    /// used by the conservative liquidation-scan skip bound.
    scan_bounds: Vec<(i128, i128)>,
}

impl Scenario {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        market: MarketState,
        origin_prices: PriceVector,
        garch: Vec<GarchSpec>,
        correlation: &CorrelationMatrix,
        slippage: Vec<SlippageModel>,
        liquidator: LiquidatorConfig,
        horizon_steps: u32,
        step_seconds: u32,
        master_seed: u64,
    ) -> Result<Self, EngineError> {
        let n = market.params().n_collaterals();
        if garch.len() != n {
            return Err(EngineError::DimensionMismatch(format!(
                "{} GARCH specs for {n} collaterals",
                garch.len()
            )));
        }
        if slippage.len() != n {
            return Err(EngineError::DimensionMismatch(format!(
                "{} slippage models for {n} collaterals",
                slippage.len()
            )));
        }
        if correlation.n() != n {
            return Err(EngineError::DimensionMismatch(format!(
                "correlation is {}×{} for {n} collaterals",
                correlation.n(),
                correlation.n()
            )));
        }
        if horizon_steps == 0 {
            return Err(EngineError::EmptyHorizon);
        }
        for spec in &garch {
            spec.validate()?;
        }
        let factor = psd_factor(correlation)?;
        let slack = n as i128;
        let scan_bounds = market
            .accounts()
            .iter()
            .map(|a| {
                let limit = market.params().liquidation_limit(a, &origin_prices).raw();
                let debt = market.params().debt_value(a, &origin_prices).raw();
                (limit - slack, (debt + slack + 1) * SCALE_8)
            })
            .collect();
        Ok(Scenario {
            market,
            garch,
            slippage,
            liquidator,
            horizon_steps,
            step_seconds,
            master_seed,
            origin_prices,
            factor,
            key: StreamKey::from_master_seed(master_seed),
            scan_bounds,
        })
    }

    pub fn market(&self) -> &MarketState {
        &self.market
    }

    pub fn origin_prices(&self) -> &PriceVector {
        &self.origin_prices
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn horizon_steps(&self) -> u32 {
        self.horizon_steps
    }

    pub fn step_seconds(&self) -> u32 {
        self.step_seconds
    }

    pub fn n_collaterals(&self) -> usize {
        self.market.params().n_collaterals()
    }

    pub fn collateral_symbols(&self) -> Vec<String> {
        self.market
            .params()
            .collaterals
            .iter()
            .map(|c| c.asset.symbol.clone())
            .collect()
    }
}

/// Per-path result: protocol loss, liquidation volume, and the price
/// envelope the path traced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathOutcome {
    pub path_index: u64,
    pub protocol_loss_usd: Usd,
    /// Market value of collateral absorbed, per collateral asset.
    pub liquidated_value_usd: Vec<Usd>,
    pub liquidated_total_usd: Usd,
    pub absorb_count: u32,
    pub final_prices: Vec<Usd>,
    /// Largest drop below the origin per asset, as a fraction (0.19 = −19%).
    pub max_drop_pct: Vec<f64>,
    /// Largest rise above the origin per asset, as a fraction.
    pub max_rise_pct: Vec<f64>,
}

/// Runs one path end to end. Bit-identical for identical
/// `(scenario, path_index)` regardless of execution order or thread count.
pub fn run_path(scenario: &Scenario, path_index: u64) -> PathOutcome {
    let mut generator = PathGenerator::new(&scenario.garch, &scenario.factor, origin_slice(scenario))
        .expect("scenario validated");
    let mut source = CounterInnovations::new(&scenario.key, path_index);
    simulate_path(scenario, path_index, |step, out| {
        generator.step(&mut source, step, out);
    })
}

/// Runs one path against a scripted price sequence (one row of collateral
/// prices per step). Used by stress harnesses and golden tests that need
/// exact price moves; the market mechanics are identical to [`run_path`].
pub fn run_scripted_path(scenario: &Scenario, steps: &[Vec<Usd>]) -> PathOutcome {
    assert_eq!(
        steps.len(),
        scenario.horizon_steps as usize,
        "script must cover the full horizon"
    );
    simulate_path(scenario, 0, |step, out| {
        let row = &steps[(step - 1) as usize];
        out.copy_from_slice(row);
    })
}

fn origin_slice(scenario: &Scenario) -> &[Usd] {
    scenario.origin_prices.collateral_prices()
}

fn simulate_path<F: FnMut(u32, &mut [Usd])>(
    scenario: &Scenario,
    path_index: u64,
    mut next_prices: F,
) -> PathOutcome {
    let n_assets = scenario.n_collaterals();
    let mut market = scenario.market.clone();
    let mut prices = scenario.origin_prices.clone();
    let origins: Vec<i128> = origin_slice(scenario).iter().map(|p| p.raw()).collect();
    let mut min_price = origins.clone();
    let mut max_price = origins.clone();

    let mut liquidated = vec![Usd::ZERO; n_assets];
    let mut absorb_count = 0u32;

    for step in 1..=scenario.horizon_steps {
        next_prices(step, prices.collateral_mut());

        // Smallest price ratio vs origin this step, floored; used by the
        // conservative skip bound below.
        let mut r_min = i128::MAX;
        for (i, p) in prices.collateral_prices().iter().enumerate() {
            let raw = p.raw();
            if raw < min_price[i] {
                min_price[i] = raw;
            }
            if raw > max_price[i] {
                max_price[i] = raw;
            }
            let ratio = raw * SCALE_8 / origins[i];
            if ratio < r_min {
                r_min = ratio;
            }
        }

        market.accrue(scenario.step_seconds as u64);

        // Absorb scan, ascending account id. An account whose origin-price
        // liquidation limit scaled by the worst price ratio still clears its
        // debt (with rounding slack) cannot be liquidatable; skip it without
        // touching prices.
        for idx in 0..market.accounts().len() {
            let account = &market.accounts()[idx];
            if !account.has_debt() {
                continue;
            }
            let (limit_slacked, debt_scaled) = scenario.scan_bounds[idx];
            if r_min.saturating_mul(limit_slacked) >= debt_scaled {
                continue;
            }
            if market.params().is_liquidatable(account, &prices) {
                let event = market.absorb_at(idx, &prices, step);
                absorb_count += 1;
                for (asset_index, _qty, value) in &event.seized {
                    liquidated[*asset_index] += *value;
                }
            }
        }

        for asset_index in 0..n_assets {
            execute_liquidation(
                &mut market,
                asset_index,
                &prices,
                &scenario.slippage[asset_index],
                &scenario.liquidator,
                step,
            );
        }
    }

    let protocol_loss = market.settle_horizon(&prices);
    let liquidated_total = liquidated.iter().copied().sum();
    PathOutcome {
        path_index,
        protocol_loss_usd: protocol_loss,
        liquidated_value_usd: liquidated,
        liquidated_total_usd: liquidated_total,
        absorb_count,
        final_prices: prices.collateral_prices().to_vec(),
        max_drop_pct: min_price
            .iter()
            .zip(origins.iter())
            .map(|(m, o)| ((o - m) as f64 / *o as f64).max(0.0))
            .collect(),
        max_rise_pct: max_price
            .iter()
            .zip(origins.iter())
            .map(|(m, o)| ((m - o) as f64 / *o as f64).max(0.0))
            .collect(),
    }
}

/// Runs paths `round_index·n .. round_index·n + n` in parallel, returning
/// outcomes ordered by path index. Rounds never reuse path indices, so their
/// RNG streams are disjoint.
pub fn run_round(scenario: &Scenario, round_index: u32, n: usize) -> Vec<PathOutcome> {
    let start = round_index as u64 * n as u64;
    (0..n as u64)
        .into_par_iter()
        .map(|offset| run_path(scenario, start + offset))
        .collect()
}

/// Staged VaR estimation over full path simulations; returns the report and
/// every outcome executed (for LaR aggregation over the same sample set).
pub fn estimate_var(scenario: &Scenario, cfg: &VarConfig) -> (VarReport, Vec<PathOutcome>) {
    let mut outcomes: Vec<PathOutcome> = Vec::new();
    let report = var_protocol(cfg, |round| {
        let batch = run_round(scenario, round, cfg.paths_per_round);
        let losses: Vec<Usd> = batch.iter().map(|o| o.protocol_loss_usd).collect();
        outcomes.extend(batch);
        losses
    });
    (report, outcomes)
}
