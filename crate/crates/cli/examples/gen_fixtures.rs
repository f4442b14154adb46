//! Regenerates the bundled demo fixtures (market config + on-chain-style
//! snapshot) deterministically.
//!
//!     cargo run -p cometsim-cli --example gen_fixtures
//!
//! Two configs share one snapshot: `demo_config.json` is the full-size
//! scenario (1728 steps, 5000 paths per round, 4 collaterals, 200+
//! borrowers); `smoke_config.json` shrinks the horizon and round size for
//! fast CLI-level tests.

use std::collections::BTreeMap;
use std::path::Path;

use cometsim_cli::config::{
    AssetSection, BorrowerFilterSection, CollateralSection, ConfigFile, CorrelationSection,
    EpsilonSection, IrSection, LiquidatorSection, MarketSection, ScenarioSection,
    SlippageSection, YUnits,
};
use cometsim_cli::snapshot::{build_market, AccountRow, SnapshotFile, SupplierRow};
use cometsim_core::price::GarchSpec;
use cometsim_core::slippage::SlippageForm;

const SECONDS_PER_YEAR: f64 = 31_536_000.0;

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn uniform(state: &mut u64, lo: f64, hi: f64) -> f64 {
    let u = (splitmix(state) >> 11) as f64 / 9_007_199_254_740_992.0;
    lo + u * (hi - lo)
}

struct AssetDef {
    symbol: &'static str,
    decimals: u8,
    price: f64,
    bcf: f64,
    lcf: f64,
    lf: f64,
    supply_cap: &'static str,
    /// Target one-day return volatility for the GARCH calibration.
    daily_vol: f64,
    arch: f64,
    garch: f64,
    slippage_form: SlippageForm,
    slippage_a: f64,
    slippage_b: f64,
}

fn assets() -> Vec<AssetDef> {
    vec![
        AssetDef {
            symbol: "WETH",
            decimals: 18,
            price: 3000.0,
            bcf: 0.78,
            lcf: 0.85,
            lf: 0.95,
            supply_cap: "20000",
            daily_vol: 0.04,
            arch: 0.10,
            garch: 0.85,
            slippage_form: SlippageForm::LogLinear,
            slippage_a: 0.057,
            slippage_b: 0.0023,
        },
        AssetDef {
            symbol: "WBTC",
            decimals: 8,
            price: 60000.0,
            bcf: 0.70,
            lcf: 0.77,
            lf: 0.93,
            supply_cap: "1500",
            daily_vol: 0.028,
            arch: 0.09,
            garch: 0.86,
            slippage_form: SlippageForm::LogLinear,
            slippage_a: 0.0421,
            slippage_b: 0.0129,
        },
        AssetDef {
            symbol: "ARB",
            decimals: 18,
            price: 0.55,
            bcf: 0.55,
            lcf: 0.60,
            lf: 0.90,
            supply_cap: "40000000",
            daily_vol: 0.05,
            arch: 0.10,
            garch: 0.85,
            slippage_form: SlippageForm::LogLinear,
            slippage_a: -0.124,
            slippage_b: 0.0244,
        },
        AssetDef {
            symbol: "GMX",
            decimals: 18,
            price: 25.40,
            bcf: 0.40,
            lcf: 0.45,
            lf: 0.88,
            supply_cap: "900000",
            daily_vol: 0.05,
            arch: 0.10,
            garch: 0.85,
            slippage_form: SlippageForm::Linear,
            slippage_a: 0.186,
            slippage_b: 2e-4,
        },
    ]
}

fn per_year(rate: f64) -> f64 {
    rate / SECONDS_PER_YEAR
}

fn market_section(defs: &[AssetDef]) -> MarketSection {
    MarketSection {
        base: AssetSection {
            symbol: "USDC".to_string(),
            decimals: 6,
        },
        sfp: 0.8,
        target_reserve: "2000000".to_string(),
        supply_ir: IrSection {
            base: 0.0,
            slope_low: per_year(0.0325),
            slope_high: per_year(0.4),
            kink: 0.9,
        },
        borrow_ir: IrSection {
            base: per_year(0.015),
            slope_low: per_year(0.0333),
            slope_high: per_year(0.4167),
            kink: 0.9,
        },
        collaterals: defs
            .iter()
            .map(|d| CollateralSection {
                symbol: d.symbol.to_string(),
                decimals: d.decimals,
                bcf: d.bcf,
                lcf: d.lcf,
                lf: d.lf,
                supply_cap: d.supply_cap.to_string(),
            })
            .collect(),
    }
}

fn garch_section(defs: &[AssetDef]) -> BTreeMap<String, GarchSpec> {
    defs.iter()
        .map(|d| {
            let step_var = d.daily_vol * d.daily_vol / 1728.0;
            let alpha0 = step_var * (1.0 - d.arch - d.garch);
            (
                d.symbol.to_string(),
                GarchSpec {
                    mu: 0.0,
                    ar: vec![],
                    ma: vec![],
                    alpha0,
                    alpha: vec![d.arch],
                    beta: vec![d.garch],
                },
            )
        })
        .collect()
}

fn correlation_section(defs: &[AssetDef]) -> CorrelationSection {
    CorrelationSection {
        assets: defs.iter().map(|d| d.symbol.to_string()).collect(),
        matrix: vec![
            vec![1.00, 0.82, 0.68, 0.55],
            vec![0.82, 1.00, 0.60, 0.50],
            vec![0.68, 0.60, 1.00, 0.52],
            vec![0.55, 0.50, 0.52, 1.00],
        ],
    }
}

fn slippage_section(defs: &[AssetDef]) -> BTreeMap<String, SlippageSection> {
    defs.iter()
        .map(|d| {
            (
                d.symbol.to_string(),
                SlippageSection {
                    form: d.slippage_form,
                    intercept: d.slippage_a,
                    coefficient: d.slippage_b,
                    y_units: YUnits::Percent,
                },
            )
        })
        .collect()
}

fn config(defs: &[AssetDef], scenario: ScenarioSection) -> ConfigFile {
    ConfigFile {
        schema_version: 1,
        market: Some(market_section(defs)),
        garch: Some(garch_section(defs)),
        correlation: Some(correlation_section(defs)),
        slippage: Some(slippage_section(defs)),
        liquidator: Some(LiquidatorSection {
            trading_fee: 0.003,
            max_lot_usd: "250000".to_string(),
            floor_lot_usd: "100".to_string(),
            include_fee_in_threshold: true,
        }),
        borrower_filter: Some(BorrowerFilterSection {
            min_borrow_usd: "1000".to_string(),
            max_health_factor: 2.0,
        }),
        scenario: Some(scenario),
    }
}

fn format_qty(value: f64, decimals: u8) -> String {
    let shown = decimals.min(8) as usize;
    format!("{value:.shown$}")
}

/// Weighted primary-collateral pick: WETH-heavy like the real book, with
/// enough ARB/GMX exposure to exercise the slippage-bound liquidation path.
fn primary_asset(i: usize) -> usize {
    match i % 10 {
        0..=5 => 0, // WETH
        6 | 7 => 1, // WBTC
        8 => 2,     // ARB
        _ => 3,     // GMX
    }
}

fn snapshot(defs: &[AssetDef]) -> SnapshotFile {
    let mut rng = 0xC0_FFEEu64;
    let mut accounts = Vec::new();

    // 240 borrower candidates: ids zero-padded so lexicographic order
    // matches numeric order. Some fall below the $1000 admission minimum or
    // above the health-factor cap on purpose.
    for i in 0..240usize {
        let id = format!("borrower-{i:04}");
        let whale = i >= 228;
        // Whales concentrate in the thin-liquidity assets, where the
        // slippage condition throttles the liquidator to small lots.
        let primary = if whale { 2 + i % 2 } else { primary_asset(i) };
        let secondary = (primary + 1 + i / 24 % 3) % 4;
        let two_assets = !whale && i % 3 == 0;
        let target_debt = if whale {
            uniform(&mut rng, 300_000.0, 900_000.0)
        } else if i % 17 == 0 {
            uniform(&mut rng, 200.0, 950.0) // below the admission minimum
        } else {
            uniform(&mut rng, 2_000.0, 120_000.0)
        };
        let hf = if i % 23 == 1 {
            uniform(&mut rng, 2.05, 2.6) // above the health-factor cap
        } else if whale {
            uniform(&mut rng, 1.03, 1.4)
        } else if i % 5 == 0 {
            uniform(&mut rng, 1.01, 1.08) // fragile cluster
        } else {
            uniform(&mut rng, 1.05, 1.98)
        };

        let needed_limit = target_debt * hf;
        let mut collateral = BTreeMap::new();
        let mut limit_usd = 0.0;
        {
            let mut post = |asset: &AssetDef, limit_share: f64| {
                let value_usd = limit_share / asset.lcf;
                let qty = value_usd / asset.price;
                collateral.insert(asset.symbol.to_string(), format_qty(qty, asset.decimals));
                limit_usd += value_usd * asset.lcf;
            };
            if two_assets && secondary != primary {
                let split = uniform(&mut rng, 0.35, 0.65);
                post(&defs[primary], needed_limit * split);
                post(&defs[secondary], needed_limit * (1.0 - split));
            } else {
                post(&defs[primary], needed_limit);
            }
        }
        // Rounding of quantities shifts the limit slightly; recompute the
        // debt from the target health factor against the intended limit.
        let debt = limit_usd.min(needed_limit) / hf;
        accounts.push(AccountRow {
            id,
            collateral,
            base_borrowed: Some(format!("{debt:.6}")),
            base_supplied: None,
        });
    }

    let suppliers = (0..12)
        .map(|i| SupplierRow {
            id: format!("supplier-{i:02}"),
            base_supplied: format!("{:.6}", uniform(&mut rng, 2_000_000.0, 11_000_000.0)),
        })
        .collect();

    let prices = defs
        .iter()
        .map(|d| (d.symbol.to_string(), format!("{}", d.price)))
        .chain(std::iter::once(("USDC".to_string(), "1".to_string())))
        .collect();

    SnapshotFile {
        schema_version: 1,
        block_height: 238_456_789,
        prices,
        base_reserve: Some("2600000".to_string()),
        accounts,
        suppliers,
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) {
    let mut bytes = serde_json::to_vec_pretty(value).unwrap();
    bytes.push(b'\n');
    std::fs::write(path, bytes).unwrap();
    println!("wrote {}", path.display());
}

fn main() {
    let defs = assets();
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    std::fs::create_dir_all(&dir).unwrap();

    let demo_scenario = ScenarioSection {
        horizon_steps: 1728,
        step_seconds: 50,
        paths_per_round: 5000,
        max_rounds: 10,
        epsilon: EpsilonSection::RelativePct(5.0),
        default_seed: 42,
    };
    // Full horizon but tiny rounds: fast enough for CLI-level tests while
    // keeping the loss distribution continuous.
    let smoke_scenario = ScenarioSection {
        horizon_steps: 1728,
        step_seconds: 50,
        paths_per_round: 60,
        max_rounds: 4,
        epsilon: EpsilonSection::RelativePct(5.0),
        default_seed: 42,
    };

    let demo = config(&defs, demo_scenario);
    let smoke = config(&defs, smoke_scenario);
    let snap = snapshot(&defs);

    // Self-check: the generated pair must load, validate, and admit a full
    // book of borrowers.
    let loaded = cometsim_cli::config::resolve_config(&demo).expect("demo config resolves");
    let (market, _) = build_market(&loaded, &snap).expect("demo snapshot builds");
    let admitted = market.accounts().len();
    assert!(admitted >= 200, "only {admitted} borrowers admitted");
    println!("demo market: {admitted} borrowers admitted");

    write_json(&dir.join("demo_config.json"), &demo);
    write_json(&dir.join("smoke_config.json"), &smoke);
    write_json(&dir.join("demo_snapshot.json"), &snap);
}
