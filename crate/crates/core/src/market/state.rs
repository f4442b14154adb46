//! Mutable market state: pooled balances, accounts, absorbed-collateral
//! inventory, and the protocol-loss ledger.

use serde::{Deserialize, Serialize};

use crate::fixed::{
    interest_units, mul_div_rhe, pow10, token_value_usd, Fraction, TokenAmount, Usd,
};
use crate::market::{AssetId, MarketError, MarketParams, PriceVector};
use crate::market::Account;

/// Why a protocol loss was recognized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossCause {
    /// Collateral sold below the payment recorded at absorption.
    PriceDecayBeforeSale,
    /// Inventory still held at the horizon, marked at its final quote.
    UnsoldAtHorizon,
    /// Absorbed debt exceeded the payment value of the seized collateral.
    AbsorbShortfall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub asset: AssetId,
    pub loss_usd: Usd,
    pub cause: LossCause,
}

/// Outcome of absorbing one underwater account.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorbEvent {
    pub account_id: String,
    /// (collateral index, seized quantity, market value at absorption).
    pub seized: Vec<(usize, TokenAmount, Usd)>,
    pub collateral_value_usd: Usd,
    pub payment_usd: Usd,
    pub debt_usd: Usd,
    /// Payment in excess of debt, credited to the borrower as base supply.
    pub borrower_credit_usd: Usd,
    pub timestamp_step: u32,
}

/// Result of one discounted collateral purchase.
#[derive(Debug, Clone, PartialEq)]
pub struct CollateralPurchase {
    pub asset_index: usize,
    pub qty: TokenAmount,
    /// What the buyer paid (the storefront quote).
    pub proceeds_usd: Usd,
    /// Pro-rata share of recorded payment retired by this purchase.
    pub payment_attributed_usd: Usd,
    pub loss_usd: Usd,
}

/// Absorbed collateral awaiting sale, pooled per asset. `recorded_payment`
/// carries the pro-rata payment basis still attached to the open quantity.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct SaleLot {
    qty: TokenAmount,
    recorded_payment: Usd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketState {
    params: MarketParams,
    /// Sorted ascending by account id; scan order is part of the engine's
    /// determinism contract.
    accounts: Vec<Account>,
    total_base_supplied: TokenAmount,
    total_base_borrowed: TokenAmount,
    /// Base units; negative means the reserve is running a deficit.
    base_reserve: i128,
    for_sale: Vec<SaleLot>,
    posted_collateral: Vec<TokenAmount>,
    loss_ledger: Vec<LossRecord>,
    absorbed_book: Vec<AbsorbEvent>,
}

impl MarketState {
    pub fn new(params: MarketParams) -> Result<Self, MarketError> {
        params.validate()?;
        let n = params.n_collaterals();
        Ok(MarketState {
            params,
            accounts: Vec::new(),
            total_base_supplied: TokenAmount::ZERO,
            total_base_borrowed: TokenAmount::ZERO,
            base_reserve: 0,
            for_sale: vec![SaleLot::default(); n],
            posted_collateral: vec![TokenAmount::ZERO; n],
            loss_ledger: Vec::new(),
            absorbed_book: Vec::new(),
        })
    }

    pub fn params(&self) -> &MarketParams {
        &self.params
    }

    pub fn accounts(&self) -> &[Account] {
        &self.accounts
    }

    pub fn account(&self, id: &str) -> Option<&Account> {
        self.accounts
            .binary_search_by(|a| a.id().cmp(id))
            .ok()
            .map(|i| &self.accounts[i])
    }

    pub fn total_base_supplied(&self) -> TokenAmount {
        self.total_base_supplied
    }

    pub fn total_base_borrowed(&self) -> TokenAmount {
        self.total_base_borrowed
    }

    pub fn base_reserve(&self) -> i128 {
        self.base_reserve
    }

    pub fn set_base_reserve(&mut self, units: i128) {
        self.base_reserve = units;
    }

    pub fn for_sale_qty(&self, index: usize) -> TokenAmount {
        self.for_sale[index].qty
    }

    pub fn for_sale_recorded_payment(&self, index: usize) -> Usd {
        self.for_sale[index].recorded_payment
    }

    pub fn loss_ledger(&self) -> &[LossRecord] {
        &self.loss_ledger
    }

    pub fn absorbed_book(&self) -> &[AbsorbEvent] {
        &self.absorbed_book
    }

    pub fn posted_collateral(&self, index: usize) -> TokenAmount {
        self.posted_collateral[index]
    }

    /// Registers pooled base liquidity that is not attached to any account
    /// (the supplier snapshot total).
    pub fn add_base_supply(&mut self, units: TokenAmount) {
        self.total_base_supplied = TokenAmount(self.total_base_supplied.0 + units.0);
    }

    /// Inserts an account, keeping the collection sorted by id. Enforces
    /// per-asset supply caps and pool accounting.
    pub fn add_account(&mut self, account: Account) -> Result<(), MarketError> {
        let pos = match self
            .accounts
            .binary_search_by(|a| a.id().cmp(account.id()))
        {
            Ok(_) => return Err(MarketError::DuplicateAccount(account.id().to_string())),
            Err(pos) => pos,
        };
        for (i, cfg) in self.params.collaterals.iter().enumerate() {
            let posted = self.posted_collateral[i].0 + account.collateral_units(i).0;
            if posted > cfg.supply_cap.0 {
                return Err(MarketError::SupplyCapExceeded {
                    symbol: cfg.asset.symbol.clone(),
                    cap: cfg.supply_cap.0,
                    attempted: posted,
                });
            }
        }
        for i in 0..self.params.n_collaterals() {
            self.posted_collateral[i] =
                TokenAmount(self.posted_collateral[i].0 + account.collateral_units(i).0);
        }
        self.total_base_borrowed =
            TokenAmount(self.total_base_borrowed.0 + account.base_borrowed().0);
        self.total_base_supplied =
            TokenAmount(self.total_base_supplied.0 + account.base_supplied().0);
        self.accounts.insert(pos, account);
        Ok(())
    }

    /// Checks the pool-level solvency invariant, intended for use right
    /// after loading a snapshot.
    pub fn check_solvency(&self) -> Result<(), MarketError> {
        let available = self.total_base_supplied.0 as i128 + self.base_reserve;
        if (self.total_base_borrowed.0 as i128) > available {
            return Err(MarketError::Insolvent);
        }
        Ok(())
    }

    /// Borrowed over supplied, clamped to [0, 1]; zero when nothing is
    /// supplied.
    pub fn utilization(&self) -> Fraction {
        if self.total_base_supplied.is_zero() {
            return Fraction::ZERO;
        }
        Fraction::ratio(self.total_base_borrowed.0, self.total_base_supplied.0).clamp_unit()
    }

    /// Simple per-second interest over `dt_seconds`: borrow and supply pools
    /// grow at their curve rates, the spread lands in the reserve.
    pub fn accrue(&mut self, dt_seconds: u64) {
        if dt_seconds == 0 {
            return;
        }
        let u = self.utilization();
        let borrow_rate = self.params.borrow_rate(u).expect("utilization in range");
        let supply_rate = self.params.supply_rate(u).expect("utilization in range");
        let borrow_interest = interest_units(self.total_base_borrowed.0, borrow_rate, dt_seconds);
        let supply_interest = interest_units(self.total_base_supplied.0, supply_rate, dt_seconds);
        self.total_base_borrowed = TokenAmount(self.total_base_borrowed.0 + borrow_interest);
        self.total_base_supplied = TokenAmount(self.total_base_supplied.0 + supply_interest);
        self.base_reserve += borrow_interest as i128 - supply_interest as i128;
    }

    fn usd_to_base_units(&self, value: Usd, prices: &PriceVector) -> u128 {
        debug_assert!(value.raw() >= 0);
        mul_div_rhe(
            value.raw(),
            pow10(self.params.base_asset.decimals) as i128,
            prices.base_price().raw(),
        ) as u128
    }

    /// Settles an underwater account: debt is cleared from the reserve, all
    /// collateral moves into the sale inventory, and any payment in excess of
    /// the debt is credited back to the borrower as base supply.
    pub fn absorb(
        &mut self,
        account_id: &str,
        prices: &PriceVector,
        step: u32,
    ) -> Result<AbsorbEvent, MarketError> {
        let idx = self
            .accounts
            .binary_search_by(|a| a.id().cmp(account_id))
            .map_err(|_| MarketError::UnknownAccount(account_id.to_string()))?;
        if !self.params.is_liquidatable(&self.accounts[idx], prices) {
            return Err(MarketError::NotLiquidatable(account_id.to_string()));
        }
        Ok(self.absorb_at(idx, prices, step))
    }

    /// Absorb by position. Callers must have established liquidatability.
    pub(crate) fn absorb_at(&mut self, idx: usize, prices: &PriceVector, step: u32) -> AbsorbEvent {
        let debt_units = self.accounts[idx].base_borrowed();
        let debt_usd = token_value_usd(
            debt_units,
            prices.base_price(),
            self.params.base_asset.decimals,
        );

        let mut seized = Vec::new();
        let mut collateral_value = Usd::ZERO;
        let mut payment = Usd::ZERO;
        for i in 0..self.params.n_collaterals() {
            let qty = self.accounts[idx].collateral_units(i);
            if qty.is_zero() {
                continue;
            }
            let cfg = self.params.collateral(i);
            let value = token_value_usd(qty, prices.collateral_price(i), cfg.asset.decimals);
            let asset_payment = value.mul_fraction(cfg.lf);
            collateral_value += value;
            payment += asset_payment;
            self.for_sale[i].qty = TokenAmount(self.for_sale[i].qty.0 + qty.0);
            self.for_sale[i].recorded_payment += asset_payment;
            self.posted_collateral[i] = TokenAmount(self.posted_collateral[i].0 - qty.0);
            seized.push((i, qty, value));
        }
        for q in self.accounts[idx].collateral_mut().iter_mut() {
            *q = TokenAmount::ZERO;
        }
        self.accounts[idx].set_base_borrowed(TokenAmount::ZERO);
        self.total_base_borrowed = TokenAmount(self.total_base_borrowed.0.saturating_sub(debt_units.0));

        // Reserve pays off the pool's claim on the debt, plus the borrower
        // credit when the payment exceeds it. It may go negative.
        let credit_usd = (payment - debt_usd).saturating_nonneg();
        let credit_units = TokenAmount(self.usd_to_base_units(credit_usd, prices));
        if !credit_units.is_zero() {
            self.accounts[idx].add_base_supplied(credit_units);
            self.total_base_supplied = TokenAmount(self.total_base_supplied.0 + credit_units.0);
        }
        self.base_reserve -= debt_units.0 as i128 + credit_units.0 as i128;

        if debt_usd > payment {
            self.loss_ledger.push(LossRecord {
                asset: self.params.base_asset.clone(),
                loss_usd: debt_usd - payment,
                cause: LossCause::AbsorbShortfall,
            });
        }

        let event = AbsorbEvent {
            account_id: self.accounts[idx].id().to_string(),
            seized,
            collateral_value_usd: collateral_value,
            payment_usd: payment,
            debt_usd,
            borrower_credit_usd: credit_usd,
            timestamp_step: step,
        };
        self.absorbed_book.push(event.clone());
        event
    }

    /// Storefront ask for `qty` of absorbed collateral:
    /// `value × (1 − lp·sfp)`.
    pub fn quote_collateral(
        &self,
        asset: &AssetId,
        qty: TokenAmount,
        prices: &PriceVector,
    ) -> Result<Usd, MarketError> {
        let i = self
            .params
            .collateral_index(asset)
            .ok_or_else(|| MarketError::UnknownAsset(asset.symbol.clone()))?;
        if qty.0 > self.for_sale[i].qty.0 {
            return Err(MarketError::InsufficientInventory {
                symbol: asset.symbol.clone(),
                requested: qty.0,
                available: self.for_sale[i].qty.0,
            });
        }
        Ok(self.quote_at(i, qty, prices))
    }

    pub(crate) fn quote_at(&self, index: usize, qty: TokenAmount, prices: &PriceVector) -> Usd {
        let cfg = self.params.collateral(index);
        let value = token_value_usd(qty, prices.collateral_price(index), cfg.asset.decimals);
        let discount = cfg.lp() * self.params.sfp;
        value.mul_fraction(discount.complement())
    }

    /// Whether the storefront is open: sales run only while the reserve sits
    /// below its target.
    pub fn sale_open(&self) -> bool {
        self.base_reserve < self.params.target_reserve.0 as i128
    }

    /// Sells `qty` of absorbed collateral at the storefront quote. The
    /// buyer's payment lands in the reserve; any shortfall of the proceeds
    /// against the pro-rata recorded payment is recognized as protocol loss.
    pub fn buy_collateral(
        &mut self,
        asset: &AssetId,
        qty: TokenAmount,
        prices: &PriceVector,
        step: u32,
    ) -> Result<CollateralPurchase, MarketError> {
        let i = self
            .params
            .collateral_index(asset)
            .ok_or_else(|| MarketError::UnknownAsset(asset.symbol.clone()))?;
        if !self.sale_open() {
            return Err(MarketError::SaleClosed);
        }
        let lot = &self.for_sale[i];
        if qty.0 > lot.qty.0 {
            return Err(MarketError::InsufficientInventory {
                symbol: asset.symbol.clone(),
                requested: qty.0,
                available: lot.qty.0,
            });
        }
        let _ = step;
        let proceeds = self.quote_at(i, qty, prices);
        let attributed = if qty.0 == lot.qty.0 {
            lot.recorded_payment
        } else {
            Usd::from_raw(mul_div_rhe(
                lot.recorded_payment.raw(),
                qty.0 as i128,
                lot.qty.0 as i128,
            ))
        };
        let loss = (attributed - proceeds).saturating_nonneg();

        let lot = &mut self.for_sale[i];
        lot.qty = TokenAmount(lot.qty.0 - qty.0);
        lot.recorded_payment -= attributed;
        self.base_reserve += self.usd_to_base_units(proceeds, prices) as i128;
        if loss > Usd::ZERO {
            self.loss_ledger.push(LossRecord {
                asset: self.params.collateral(i).asset.clone(),
                loss_usd: loss,
                cause: LossCause::PriceDecayBeforeSale,
            });
        }
        Ok(CollateralPurchase {
            asset_index: i,
            qty,
            proceeds_usd: proceeds,
            payment_attributed_usd: attributed,
            loss_usd: loss,
        })
    }

    /// Marks every unsold lot at its final quote, realizing any shortfall
    /// against the recorded payment, and returns the ledger total.
    pub fn settle_horizon(&mut self, final_prices: &PriceVector) -> Usd {
        for i in 0..self.params.n_collaterals() {
            let lot = &self.for_sale[i];
            if lot.qty.is_zero() {
                if lot.recorded_payment > Usd::ZERO {
                    // Rounding dust from pro-rata attribution on a fully
                    // drained lot: realize it as decay loss.
                    let dust = lot.recorded_payment;
                    self.loss_ledger.push(LossRecord {
                        asset: self.params.collateral(i).asset.clone(),
                        loss_usd: dust,
                        cause: LossCause::PriceDecayBeforeSale,
                    });
                    self.for_sale[i].recorded_payment = Usd::ZERO;
                }
                continue;
            }
            let quote = self.quote_at(i, lot.qty, final_prices);
            let shortfall = (lot.recorded_payment - quote).saturating_nonneg();
            if shortfall > Usd::ZERO {
                self.loss_ledger.push(LossRecord {
                    asset: self.params.collateral(i).asset.clone(),
                    loss_usd: shortfall,
                    cause: LossCause::UnsoldAtHorizon,
                });
            }
            self.for_sale[i] = SaleLot::default();
        }
        self.total_loss()
    }

    pub fn total_loss(&self) -> Usd {
        self.loss_ledger.iter().map(|r| r.loss_usd).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::Rate;
    use crate::market::{CollateralConfig, IRParams};

    fn eth() -> AssetId {
        AssetId::new("WETH", 18).unwrap()
    }

    fn wbtc() -> AssetId {
        AssetId::new("WBTC", 8).unwrap()
    }

    fn usdc() -> AssetId {
        AssetId::new("USDC", 6).unwrap()
    }

    fn ir_zero() -> IRParams {
        IRParams {
            base: Rate::ZERO,
            slope_low: Rate::ZERO,
            slope_high: Rate::ZERO,
            kink: Fraction::from_f64(0.8),
        }
    }

    /// Market tuned to the worked liquidation example: LF 0.95, SFP 0.6,
    /// LCF low enough that a 10% ETH drop triggers absorption.
    fn paper_market() -> MarketState {
        let params = MarketParams {
            base_asset: usdc(),
            sfp: Fraction::from_f64(0.6),
            target_reserve: TokenAmount::parse("1000000", 6).unwrap(),
            supply_ir: ir_zero(),
            borrow_ir: ir_zero(),
            collaterals: vec![
                CollateralConfig {
                    asset: eth(),
                    bcf: Fraction::from_f64(0.8),
                    lcf: Fraction::from_f64(0.85),
                    lf: Fraction::from_f64(0.95),
                    supply_cap: TokenAmount::parse("1000000", 18).unwrap(),
                },
                CollateralConfig {
                    asset: wbtc(),
                    bcf: Fraction::from_f64(0.7),
                    lcf: Fraction::from_f64(0.8),
                    lf: Fraction::from_f64(0.9),
                    supply_cap: TokenAmount::parse("10000", 8).unwrap(),
                },
            ],
        };
        let mut state = MarketState::new(params).unwrap();
        state.add_base_supply(TokenAmount::parse("10000000", 6).unwrap());
        state.set_base_reserve(500_000_000_000); // 500k USDC
        state
    }

    fn prices(state: &MarketState, eth_usd: &str, btc_usd: &str) -> PriceVector {
        state
            .params()
            .price_vector(&[
                (eth(), eth_usd.parse().unwrap()),
                (wbtc(), btc_usd.parse().unwrap()),
            ])
            .unwrap()
    }

    fn add_paper_borrower(state: &mut MarketState) {
        let acct = state
            .params()
            .make_account(
                "borrower-1",
                &[(eth(), TokenAmount::parse("1", 18).unwrap())],
                TokenAmount::parse("2400", 6).unwrap(),
                TokenAmount::ZERO,
            )
            .unwrap();
        state.add_account(acct).unwrap();
    }

    #[test]
    fn utilization_examples() {
        let mut s = paper_market();
        assert_eq!(s.utilization(), Fraction::ZERO); // no debt yet
        let acct = s
            .params()
            .make_account(
                "b",
                &[(eth(), TokenAmount::parse("10000", 18).unwrap())],
                TokenAmount::parse("5000000", 6).unwrap(),
                TokenAmount::ZERO,
            )
            .unwrap();
        s.add_account(acct).unwrap();
        assert_eq!(s.utilization(), Fraction::from_f64(0.5));

        let empty = MarketState::new(paper_market().params.clone()).unwrap();
        assert_eq!(empty.utilization(), Fraction::ZERO);

        let mut full = MarketState::new(paper_market().params.clone()).unwrap();
        full.add_base_supply(TokenAmount(100));
        let acct = full
            .params()
            .make_account(
                "b",
                &[(eth(), TokenAmount::parse("1", 18).unwrap())],
                TokenAmount(100),
                TokenAmount::ZERO,
            )
            .unwrap();
        full.add_account(acct).unwrap();
        // Borrowed 100 over supplied 100.
        assert_eq!(full.utilization(), Fraction::ONE);
    }

    #[test]
    fn accrue_zero_cases() {
        let mut s = paper_market();
        add_paper_borrower(&mut s);
        let before = s.clone();
        s.accrue(0);
        assert_eq!(s, before);
        // Zero rates: state unchanged for any dt.
        s.accrue(86_400);
        assert_eq!(s.total_base_borrowed(), before.total_base_borrowed());
        assert_eq!(s.base_reserve(), before.base_reserve());
    }

    #[test]
    fn accrue_one_day_example() {
        // Borrowed 1000 at 1e-9/s for 86400s → 0.0864 interest.
        let mut params = paper_market().params.clone();
        params.borrow_ir = IRParams {
            base: Rate::from_f64(2e-9),
            slope_low: Rate::ZERO,
            slope_high: Rate::ZERO,
            kink: Fraction::from_f64(0.8),
        };
        params.supply_ir = ir_zero();
        let mut s = MarketState::new(params).unwrap();
        s.add_base_supply(TokenAmount::parse("2000", 6).unwrap());
        let acct = s
            .params()
            .make_account(
                "b",
                &[(eth(), TokenAmount::parse("1", 18).unwrap())],
                TokenAmount::parse("1000", 6).unwrap(),
                TokenAmount::ZERO,
            )
            .unwrap();
        s.add_account(acct).unwrap();
        // Base 2e-9 with zero slopes: rate independent of u = 0.5.
        // Use dt = 43200 to get 1e-9-equivalent over a day? No: assert the
        // direct value: 1000 USDC × 2e-9 × 86400 = 0.1728 USDC.
        s.accrue(86_400);
        assert_eq!(
            s.total_base_borrowed(),
            TokenAmount(1_000_000_000 + 172_800)
        );
        assert_eq!(s.base_reserve(), 172_800);
    }

    #[test]
    fn absorb_worked_example() {
        let mut s = paper_market();
        add_paper_borrower(&mut s);
        let supplied_before = s.total_base_supplied();
        let reserve_before = s.base_reserve();

        // ETH drops 10% to $2700; limit 2700·0.85 = 2295 < 2400 debt.
        let pv = prices(&s, "2700", "60000");
        let ev = s.absorb("borrower-1", &pv, 7).unwrap();

        assert_eq!(ev.payment_usd, "2565".parse().unwrap());
        assert_eq!(ev.collateral_value_usd, "2700".parse().unwrap());
        assert_eq!(ev.debt_usd, "2400".parse().unwrap());
        assert_eq!(ev.borrower_credit_usd, "165".parse().unwrap());
        assert_eq!(ev.timestamp_step, 7);

        let acct = s.account("borrower-1").unwrap();
        assert!(acct.base_borrowed().is_zero());
        assert!(acct.collateral_units(0).is_zero());
        assert_eq!(acct.base_supplied(), TokenAmount(165_000_000));
        assert_eq!(s.for_sale_qty(0), TokenAmount::parse("1", 18).unwrap());
        assert_eq!(s.for_sale_recorded_payment(0), "2565".parse().unwrap());
        // Reserve covers debt (2400) plus credit (165).
        assert_eq!(reserve_before - s.base_reserve(), 2_565_000_000);
        assert_eq!(
            s.total_base_supplied().0 - supplied_before.0,
            165_000_000
        );
        assert!(s.loss_ledger().is_empty());
        assert!(s.total_base_borrowed().is_zero());
    }

    #[test]
    fn absorb_rejects_healthy_and_unknown() {
        let mut s = paper_market();
        add_paper_borrower(&mut s);
        let pv = prices(&s, "3000", "60000");
        assert_eq!(
            s.absorb("borrower-1", &pv, 0),
            Err(MarketError::NotLiquidatable("borrower-1".into()))
        );
        assert_eq!(
            s.absorb("nobody", &pv, 0),
            Err(MarketError::UnknownAccount("nobody".into()))
        );
    }

    #[test]
    fn absorb_zero_value_collateral_books_shortfall() {
        let mut s = paper_market();
        let acct = s
            .params()
            .make_account(
                "dust",
                &[(eth(), TokenAmount(1))], // 1 wei of ETH
                TokenAmount::parse("500", 6).unwrap(),
                TokenAmount::ZERO,
            )
            .unwrap();
        s.add_account(acct).unwrap();
        let pv = prices(&s, "2700", "60000");
        let ev = s.absorb("dust", &pv, 1).unwrap();
        assert_eq!(ev.payment_usd, Usd::ZERO);
        assert_eq!(ev.borrower_credit_usd, Usd::ZERO);
        assert_eq!(s.loss_ledger().len(), 1);
        let rec = &s.loss_ledger()[0];
        assert_eq!(rec.cause, LossCause::AbsorbShortfall);
        assert_eq!(rec.loss_usd, "500".parse().unwrap());
        assert_eq!(s.total_loss(), "500".parse().unwrap());
    }

    #[test]
    fn absorb_two_collaterals() {
        // $1000 on the lf=0.9 asset plus $500 on the lf=0.95 asset against
        // $1300 of debt: payment 900 + 475 = 1375, credit 75.
        let mut s = paper_market();
        let acct = s
            .params()
            .make_account(
                "two",
                &[
                    (eth(), TokenAmount::parse("1", 18).unwrap()),
                    (wbtc(), TokenAmount::parse("1", 8).unwrap()),
                ],
                TokenAmount::parse("1300", 6).unwrap(),
                TokenAmount::ZERO,
            )
            .unwrap();
        s.add_account(acct).unwrap();
        let pv = prices(&s, "500", "1000");
        let ev = s.absorb("two", &pv, 0).unwrap();
        assert_eq!(ev.payment_usd, "1375".parse().unwrap());
        assert_eq!(ev.borrower_credit_usd, "75".parse().unwrap());
        assert_eq!(s.for_sale_recorded_payment(0), "475".parse().unwrap());
        assert_eq!(s.for_sale_recorded_payment(1), "900".parse().unwrap());
    }

    #[test]
    fn quote_collateral_examples() {
        let mut s = paper_market();
        add_paper_borrower(&mut s);
        let pv = prices(&s, "2700", "60000");
        s.absorb("borrower-1", &pv, 0).unwrap();

        let one_eth = TokenAmount::parse("1", 18).unwrap();
        // 2700 × (1 − 0.05·0.6) = 2619.
        assert_eq!(
            s.quote_collateral(&eth(), one_eth, &pv).unwrap(),
            "2619".parse().unwrap()
        );
        // After a further 6% drop to 2538: quote 2461.86.
        let pv2 = prices(&s, "2538", "60000");
        assert_eq!(
            s.quote_collateral(&eth(), one_eth, &pv2).unwrap(),
            "2461.86".parse().unwrap()
        );
        // Inventory bound.
        assert!(matches!(
            s.quote_collateral(&eth(), TokenAmount::parse("2", 18).unwrap(), &pv),
            Err(MarketError::InsufficientInventory { .. })
        ));
    }

    #[test]
    fn quote_with_zero_penalty_is_market_value() {
        let mut s = paper_market();
        // lp = 0 ⟺ lf = 1.
        let mut params = s.params.clone();
        params.collaterals[0].lf = Fraction::ONE;
        s = MarketState::new(params).unwrap();
        s.add_base_supply(TokenAmount::parse("10000000", 6).unwrap());
        let acct = s
            .params()
            .make_account(
                "b",
                &[(eth(), TokenAmount::parse("1", 18).unwrap())],
                TokenAmount::parse("2400", 6).unwrap(),
                TokenAmount::ZERO,
            )
            .unwrap();
        s.add_account(acct).unwrap();
        let pv = prices(&s, "2700", "60000");
        s.absorb("b", &pv, 0).unwrap();
        assert_eq!(
            s.quote_collateral(&eth(), TokenAmount::parse("1", 18).unwrap(), &pv)
                .unwrap(),
            "2700".parse().unwrap()
        );
    }

    #[test]
    fn buy_collateral_decay_loss_example() {
        let mut s = paper_market();
        add_paper_borrower(&mut s);
        let pv = prices(&s, "2700", "60000");
        s.absorb("borrower-1", &pv, 0).unwrap();

        // Price decays 6% before the sale: proceeds 2461.86, loss 103.14.
        let pv2 = prices(&s, "2538", "60000");
        let one_eth = TokenAmount::parse("1", 18).unwrap();
        let reserve_before = s.base_reserve();
        let trade = s.buy_collateral(&eth(), one_eth, &pv2, 3).unwrap();
        assert_eq!(trade.proceeds_usd, "2461.86".parse().unwrap());
        assert_eq!(trade.payment_attributed_usd, "2565".parse().unwrap());
        assert_eq!(trade.loss_usd, "103.14".parse().unwrap());
        assert_eq!(s.total_loss(), "103.14".parse().unwrap());
        assert_eq!(s.base_reserve() - reserve_before, 2_461_860_000);
        assert!(s.for_sale_qty(0).is_zero());
        assert_eq!(s.loss_ledger()[0].cause, LossCause::PriceDecayBeforeSale);
        assert_eq!(s.loss_ledger()[0].asset, eth());
    }

    #[test]
    fn buy_collateral_no_decay_no_loss() {
        let mut s = paper_market();
        add_paper_borrower(&mut s);
        let pv = prices(&s, "2700", "60000");
        s.absorb("borrower-1", &pv, 0).unwrap();
        let one_eth = TokenAmount::parse("1", 18).unwrap();
        let trade = s.buy_collateral(&eth(), one_eth, &pv, 1).unwrap();
        // Proceeds 2619 ≥ payment 2565 → no loss.
        assert_eq!(trade.proceeds_usd, "2619".parse().unwrap());
        assert_eq!(trade.loss_usd, Usd::ZERO);
        assert!(s.loss_ledger().is_empty());
        assert_eq!(s.total_loss(), Usd::ZERO);
    }

    #[test]
    fn buy_collateral_gate_closes_at_target() {
        let mut s = paper_market();
        add_paper_borrower(&mut s);
        let pv = prices(&s, "2700", "60000");
        s.absorb("borrower-1", &pv, 0).unwrap();
        s.set_base_reserve(s.params().target_reserve.0 as i128);
        assert!(!s.sale_open());
        assert_eq!(
            s.buy_collateral(&eth(), TokenAmount(1), &pv, 1),
            Err(MarketError::SaleClosed)
        );
    }

    #[test]
    fn partial_buy_attributes_pro_rata() {
        let mut s = paper_market();
        add_paper_borrower(&mut s);
        let pv = prices(&s, "2700", "60000");
        s.absorb("borrower-1", &pv, 0).unwrap();
        let half = TokenAmount::parse("0.5", 18).unwrap();
        let trade = s.buy_collateral(&eth(), half, &pv, 1).unwrap();
        assert_eq!(trade.payment_attributed_usd, "1282.5".parse().unwrap());
        assert_eq!(s.for_sale_recorded_payment(0), "1282.5".parse().unwrap());
        assert_eq!(s.for_sale_qty(0), half);
    }

    #[test]
    fn settle_horizon_examples() {
        // Empty inventory: total equals existing ledger sum.
        let mut s = paper_market();
        let pv = prices(&s, "2700", "60000");
        assert_eq!(s.settle_horizon(&pv), Usd::ZERO);

        // Unsold lot, payment 2565, final quote 2619 → no added loss.
        let mut s = paper_market();
        add_paper_borrower(&mut s);
        let pv_drop = prices(&s, "2700", "60000");
        s.absorb("borrower-1", &pv_drop, 0).unwrap();
        assert_eq!(s.settle_horizon(&pv_drop), Usd::ZERO);

        // Unsold lot, payment 2565, final quote 2400 → loss 165.
        let mut s = paper_market();
        add_paper_borrower(&mut s);
        let pv_drop = prices(&s, "2700", "60000");
        s.absorb("borrower-1", &pv_drop, 0).unwrap();
        // Find the ETH price whose quote is exactly $2400: 2400/0.97.
        let eth_final = Usd::from_raw(mul_div_rhe(
            Usd::from_dollars(2400).raw(),
            crate::fixed::SCALE_8,
            Fraction::from_f64(0.97).raw(),
        ));
        let pv_final = s
            .params()
            .price_vector(&[(eth(), eth_final), (wbtc(), Usd::from_dollars(60000))])
            .unwrap();
        let total = s.settle_horizon(&pv_final);
        let added = total;
        // Quote rounding lands within a cent of $2400.
        let expect = "165".parse::<Usd>().unwrap();
        assert!(
            (added - expect).raw().abs() < 1_000_000,
            "added {added} expect {expect}"
        );
        assert_eq!(s.loss_ledger().last().unwrap().cause, LossCause::UnsoldAtHorizon);
        // Inventory drained.
        assert!(s.for_sale_qty(0).is_zero());
    }

    #[test]
    fn supply_cap_enforced() {
        let mut s = paper_market();
        let mut params = s.params.clone();
        params.collaterals[0].supply_cap = TokenAmount::parse("2", 18).unwrap();
        s = MarketState::new(params).unwrap();
        let a1 = s
            .params()
            .make_account(
                "a1",
                &[(eth(), TokenAmount::parse("1.5", 18).unwrap())],
                TokenAmount::ZERO,
                TokenAmount::ZERO,
            )
            .unwrap();
        s.add_account(a1).unwrap();
        let a2 = s
            .params()
            .make_account(
                "a2",
                &[(eth(), TokenAmount::parse("0.6", 18).unwrap())],
                TokenAmount::ZERO,
                TokenAmount::ZERO,
            )
            .unwrap();
        assert!(matches!(
            s.add_account(a2),
            Err(MarketError::SupplyCapExceeded { .. })
        ));
    }

    #[test]
    fn duplicate_account_rejected() {
        let mut s = paper_market();
        add_paper_borrower(&mut s);
        let dup = s
            .params()
            .make_account("borrower-1", &[], TokenAmount::ZERO, TokenAmount::ZERO)
            .unwrap();
        assert_eq!(
            s.add_account(dup),
            Err(MarketError::DuplicateAccount("borrower-1".into()))
        );
    }

    #[test]
    fn solvency_check() {
        let mut s = paper_market();
        let acct = s
            .params()
            .make_account(
                "b",
                &[(eth(), TokenAmount::parse("10000", 18).unwrap())],
                TokenAmount::parse("20000000", 6).unwrap(),
                TokenAmount::ZERO,
            )
            .unwrap();
        s.add_account(acct).unwrap();
        assert_eq!(s.check_solvency(), Err(MarketError::Insolvent));
    }
}
