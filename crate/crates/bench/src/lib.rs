//! Shared scenario builders for the engine benchmarks.

use cometsim_core::agents::LiquidatorConfig;
use cometsim_core::engine::Scenario;
use cometsim_core::fixed::{Fraction, Rate, TokenAmount, Usd};
use cometsim_core::market::{
    AssetId, CollateralConfig, IRParams, MarketParams, MarketState, PriceVector,
};
use cometsim_core::price::{CorrelationMatrix, GarchSpec};
use cometsim_core::slippage::{SlippageForm, SlippageModel};

pub fn bench_assets() -> Vec<AssetId> {
    vec![
        AssetId::new("WETH", 18).unwrap(),
        AssetId::new("WBTC", 8).unwrap(),
        AssetId::new("ARB", 18).unwrap(),
        AssetId::new("GMX", 18).unwrap(),
    ]
}

pub fn bench_params() -> MarketParams {
    let assets = bench_assets();
    let ir = IRParams {
        base: Rate::from_f64(1e-10),
        slope_low: Rate::from_f64(1e-9),
        slope_high: Rate::from_f64(1.3e-8),
        kink: Fraction::from_f64(0.9),
    };
    MarketParams {
        base_asset: AssetId::new("USDC", 6).unwrap(),
        sfp: Fraction::from_f64(0.6),
        target_reserve: TokenAmount::parse("2000000", 6).unwrap(),
        supply_ir: ir.clone(),
        borrow_ir: ir,
        collaterals: assets
            .into_iter()
            .enumerate()
            .map(|(i, asset)| CollateralConfig {
                asset,
                bcf: Fraction::from_f64(0.6 + 0.04 * i as f64),
                lcf: Fraction::from_f64(0.7 + 0.04 * i as f64),
                lf: Fraction::from_f64(0.9),
                supply_cap: TokenAmount(u128::MAX / 4),
            })
            .collect(),
    }
}

pub fn bench_prices(params: &MarketParams) -> PriceVector {
    params
        .price_vector(&[
            (params.collaterals[0].asset.clone(), Usd::from_dollars(3000)),
            (params.collaterals[1].asset.clone(), Usd::from_dollars(60000)),
            (
                params.collaterals[2].asset.clone(),
                "0.55".parse().unwrap(),
            ),
            (
                params.collaterals[3].asset.clone(),
                "25.4".parse().unwrap(),
            ),
        ])
        .unwrap()
}

/// A market shaped like the demo fixture: ~200 borrowers spread across the
/// four collaterals with health factors clustered toward the boundary.
pub fn bench_market(n_accounts: usize) -> MarketState {
    let params = bench_params();
    let prices = bench_prices(&params);
    let mut state = MarketState::new(params.clone()).unwrap();
    state.add_base_supply(TokenAmount::parse("80000000", 6).unwrap());
    state.set_base_reserve(1_500_000_000_000);
    let mut seed = 0x5EEDu64;
    let mut next = move || {
        seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (seed >> 33) as f64 / (1u64 << 31) as f64
    };
    for i in 0..n_accounts {
        let asset_index = i % 4;
        let cfg = params.collateral(asset_index).clone();
        let value_usd = 2_000.0 + 150_000.0 * next();
        let hf = 1.02 + next();
        let price = prices.collateral_price(asset_index).to_f64();
        let qty = value_usd / price;
        let decimals = cfg.asset.decimals;
        let qty_units = TokenAmount((qty * 10f64.powi(decimals as i32)) as u128);
        let limit = value_usd * cfg.lcf.to_f64();
        let debt_units = TokenAmount((limit / hf * 1e6) as u128);
        let account = params
            .make_account(
                format!("acct-{i:05}"),
                &[(cfg.asset.clone(), qty_units)],
                debt_units,
                TokenAmount::ZERO,
            )
            .unwrap();
        state.add_account(account).unwrap();
    }
    state
}

pub fn bench_scenario(n_accounts: usize, horizon: u32) -> Scenario {
    let market = bench_market(n_accounts);
    let prices = bench_prices(market.params());
    let garch = (0..4)
        .map(|i| GarchSpec {
            mu: 0.0,
            ar: vec![],
            ma: vec![],
            alpha0: 1e-9 * (i + 1) as f64,
            alpha: vec![0.15],
            beta: vec![0.8],
        })
        .collect();
    let slippage = market
        .params()
        .collaterals
        .iter()
        .map(|c| SlippageModel::new(c.asset.clone(), SlippageForm::LogLinear, 0.05, 0.003).unwrap())
        .collect();
    let corr = CorrelationMatrix::from_rows(&[
        vec![1.00, 0.82, 0.68, 0.55],
        vec![0.82, 1.00, 0.60, 0.50],
        vec![0.68, 0.60, 1.00, 0.52],
        vec![0.55, 0.50, 0.52, 1.00],
    ])
    .unwrap();
    Scenario::new(
        market,
        prices,
        garch,
        &corr,
        slippage,
        LiquidatorConfig::default(),
        horizon,
        50,
        42,
    )
    .unwrap()
}
