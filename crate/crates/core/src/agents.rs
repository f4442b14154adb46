//! Actor policies: borrower admission, the liquidator bot, and supplier
//! liquidity.
//!
//! Borrowers are passive once admitted — their balances change only through
//! absorption. The liquidator runs once per step per asset: it checks that
//! slippage plus the trading fee stays within the storefront discount
//! (`lp × sfp`), sizes a lot by halving from the full inventory, and executes
//! the purchase atomically (the flash-swap leg is modeled as zero-cost
//! intra-step credit; gas is excluded).

use serde::{Deserialize, Serialize};

use crate::fixed::{token_value_usd, usd_to_token_floor, Fraction, TokenAmount, Usd};
use crate::market::{Account, MarketParams, MarketState, PriceVector};
use crate::slippage::SlippageModel;

/// Admission criteria for borrower accounts taken from a snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorrowerFilter {
    pub min_borrow_usd: Usd,
    /// Inclusive upper bound on the health factor.
    pub max_health_factor: Fraction,
}

impl Default for BorrowerFilter {
    fn default() -> Self {
        BorrowerFilter {
            min_borrow_usd: Usd::from_dollars(1000),
            max_health_factor: Fraction::from_f64(2.0),
        }
    }
}

/// Keeps accounts with debt of at least `min_borrow_usd` and a health factor
/// at or below `max_health_factor` (both boundaries inclusive where stated).
/// Admitted borrowers are immutable for the rest of the simulation.
pub fn init_borrowers(
    candidates: Vec<Account>,
    prices: &PriceVector,
    params: &MarketParams,
    filter: &BorrowerFilter,
) -> Vec<Account> {
    candidates
        .into_iter()
        .filter(|a| {
            if !a.has_debt() {
                return false;
            }
            let debt = params.debt_value(a, prices);
            debt >= filter.min_borrow_usd
                && params.health_factor_at_most(a, prices, filter.max_health_factor)
        })
        .collect()
}

/// Sums supplier snapshot rows into the pooled base supply. Duplicate
/// supplier ids simply contribute additively.
pub fn init_supplier_liquidity<'a, I>(rows: I) -> TokenAmount
where
    I: IntoIterator<Item = &'a (String, TokenAmount)>,
{
    TokenAmount(rows.into_iter().map(|(_, qty)| qty.0).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiquidatorConfig {
    /// DEX trading fee rate (0.003 = 0.3%).
    pub trading_fee: Fraction,
    /// Largest single purchase, sized in USD of collateral market value.
    pub max_lot_usd: Usd,
    /// Lots are halved down to this value before the bot gives up.
    pub floor_lot_usd: Usd,
    /// Whether the fee term joins slippage on the left side of the buy
    /// condition. The discount test reads
    /// `slippage% (+ fee%) <= lp·sfp%`.
    pub include_fee_in_threshold: bool,
}

impl Default for LiquidatorConfig {
    fn default() -> Self {
        LiquidatorConfig {
            trading_fee: Fraction::from_f64(0.003),
            max_lot_usd: Usd::from_dollars(250_000),
            floor_lot_usd: Usd::from_dollars(100),
            include_fee_in_threshold: true,
        }
    }
}

/// One executed liquidation purchase. The identity
/// `profit = sale_proceeds − purchase_cost − fee_paid − slippage_cost`
/// holds exactly in fixed point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfitReport {
    pub asset_index: usize,
    pub qty: TokenAmount,
    /// S_C: market value realized selling the collateral on.
    pub sale_proceeds: Usd,
    /// P_C: discounted price paid to the protocol.
    pub purchase_cost: Usd,
    /// f × S_C.
    pub fee_paid: Usd,
    /// Slippage cost on the onward sale.
    pub slippage_cost: Usd,
    pub profit: Usd,
}

/// Buy condition: the storefront discount must cover slippage (plus the
/// trading fee in the fee-inclusive mode), and the storefront must be open.
pub fn should_buy(
    market: &MarketState,
    asset_index: usize,
    qty: TokenAmount,
    prices: &PriceVector,
    slippage: &SlippageModel,
    cfg: &LiquidatorConfig,
) -> bool {
    if !market.sale_open() || qty.is_zero() {
        return false;
    }
    if qty.0 > market.for_sale_qty(asset_index).0 {
        return false;
    }
    let collateral = market.params().collateral(asset_index);
    let sale_value = token_value_usd(
        qty,
        prices.collateral_price(asset_index),
        collateral.asset.decimals,
    );
    if sale_value <= Usd::ZERO {
        return false;
    }
    let slippage_pct = match slippage.eval(sale_value.to_f64()) {
        Ok(v) => v,
        Err(_) => return false,
    };
    let mut cost_pct = slippage_pct;
    if cfg.include_fee_in_threshold {
        cost_pct += 100.0 * cfg.trading_fee.to_f64();
    }
    let threshold_pct = 100.0 * (collateral.lp() * market.params().sfp).to_f64();
    cost_pct <= threshold_pct
}

/// Runs the bot for one asset: size a lot (capped at `max_lot_usd`, halved
/// until the buy condition passes or the `floor_lot_usd` floor is hit), then
/// execute the five steps atomically — fetch the quote, flash-borrow base,
/// buy from the storefront, sell the collateral on at market less slippage
/// and fee, repay the flash loan.
///
/// Returns `None` when nothing was bought (gate closed, empty inventory, or
/// no lot size passes the condition). State is untouched in that case.
pub fn execute_liquidation(
    market: &mut MarketState,
    asset_index: usize,
    prices: &PriceVector,
    slippage: &SlippageModel,
    cfg: &LiquidatorConfig,
    step: u32,
) -> Option<ProfitReport> {
    if !market.sale_open() {
        return None;
    }
    let inventory = market.for_sale_qty(asset_index);
    if inventory.is_zero() {
        return None;
    }
    let collateral = market.params().collateral(asset_index);
    let decimals = collateral.asset.decimals;
    let asset = collateral.asset.clone();
    let price = prices.collateral_price(asset_index);
    let full_value = token_value_usd(inventory, price, decimals);

    let mut qty = if full_value <= cfg.max_lot_usd {
        inventory
    } else {
        TokenAmount(usd_to_token_floor(cfg.max_lot_usd, price, decimals).0.min(inventory.0))
    };

    loop {
        if qty.is_zero() {
            return None;
        }
        let lot_value = token_value_usd(qty, price, decimals);
        if lot_value < cfg.floor_lot_usd {
            return None;
        }
        if should_buy(market, asset_index, qty, prices, slippage, cfg) {
            break;
        }
        qty = TokenAmount(qty.0 / 2);
    }

    let purchase = market
        .buy_collateral(&asset, qty, prices, step)
        .expect("buy passed should_buy");
    let sale_proceeds = token_value_usd(qty, price, decimals);
    let slippage_pct = slippage
        .eval(sale_proceeds.to_f64())
        .expect("positive sale value");
    let slippage_cost = sale_proceeds.mul_fraction(Fraction::from_f64(slippage_pct / 100.0));
    let fee_paid = sale_proceeds.mul_fraction(cfg.trading_fee);
    let profit = sale_proceeds - purchase.proceeds_usd - fee_paid - slippage_cost;
    Some(ProfitReport {
        asset_index,
        qty,
        sale_proceeds,
        purchase_cost: purchase.proceeds_usd,
        fee_paid,
        slippage_cost,
        profit,
    })
}
