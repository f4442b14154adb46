//! Config file schema (versioned JSON) and resolution into validated engine
//! inputs.
//!
//! Sections are individually optional so the fit commands can build a config
//! incrementally; `simulate`/`var` require a complete file. Maps are
//! `BTreeMap` so serialization (and the scenario fingerprint derived from
//! it) is order-independent of the input.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use cometsim_core::agents::{BorrowerFilter, LiquidatorConfig};
use cometsim_core::engine::{EpsilonSpec, VarConfig};
use cometsim_core::fixed::{Fraction, Rate, TokenAmount, Usd};
use cometsim_core::market::{AssetId, CollateralConfig, IRParams, MarketParams};
use cometsim_core::price::{CorrelationMatrix, GarchSpec, DEFAULT_MASTER_SEED};
use cometsim_core::slippage::{SlippageForm, SlippageModel};

use crate::{CliError, ValidationIssue};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub market: Option<MarketSection>,
    /// GARCH spec per collateral symbol.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub garch: Option<BTreeMap<String, GarchSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation: Option<CorrelationSection>,
    /// Slippage curve per collateral symbol.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slippage: Option<BTreeMap<String, SlippageSection>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub liquidator: Option<LiquidatorSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub borrower_filter: Option<BorrowerFilterSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSection>,
}

impl ConfigFile {
    pub fn empty() -> Self {
        ConfigFile {
            schema_version: SCHEMA_VERSION,
            market: None,
            garch: None,
            correlation: None,
            slippage: None,
            liquidator: None,
            borrower_filter: None,
            scenario: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetSection {
    pub symbol: String,
    pub decimals: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSection {
    pub base: AssetSection,
    pub sfp: f64,
    /// Base-token quantity (decimal string).
    pub target_reserve: String,
    pub supply_ir: IrSection,
    pub borrow_ir: IrSection,
    pub collaterals: Vec<CollateralSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrSection {
    /// Per-second rates.
    pub base: f64,
    pub slope_low: f64,
    pub slope_high: f64,
    pub kink: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollateralSection {
    pub symbol: String,
    pub decimals: u8,
    pub bcf: f64,
    pub lcf: f64,
    pub lf: f64,
    /// Token quantity (decimal string).
    pub supply_cap: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationSection {
    /// Must list the market's collateral symbols in collateral order.
    pub assets: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YUnits {
    Percent,
    Fraction,
}

fn default_y_units() -> YUnits {
    YUnits::Percent
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlippageSection {
    pub form: SlippageForm,
    pub intercept: f64,
    pub coefficient: f64,
    /// Units of the curve's output; fraction-valued curves are converted to
    /// percent on load.
    #[serde(default = "default_y_units")]
    pub y_units: YUnits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiquidatorSection {
    #[serde(default = "default_trading_fee")]
    pub trading_fee: f64,
    /// USD decimal string.
    pub max_lot_usd: String,
    #[serde(default = "default_floor_lot")]
    pub floor_lot_usd: String,
    #[serde(default = "default_true")]
    pub include_fee_in_threshold: bool,
}

fn default_trading_fee() -> f64 {
    0.003
}

fn default_floor_lot() -> String {
    "100".to_string()
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BorrowerFilterSection {
    #[serde(default = "default_min_borrow")]
    pub min_borrow_usd: String,
    #[serde(default = "default_max_hf")]
    pub max_health_factor: f64,
}

fn default_min_borrow() -> String {
    "1000".to_string()
}

fn default_max_hf() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonSection {
    /// Percent of the first round's p95.
    RelativePct(f64),
    /// Absolute USD (decimal string).
    AbsoluteUsd(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    #[serde(default = "default_horizon")]
    pub horizon_steps: u32,
    #[serde(default = "default_step_seconds")]
    pub step_seconds: u32,
    #[serde(default = "default_paths_per_round")]
    pub paths_per_round: usize,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: u32,
    #[serde(default = "default_epsilon")]
    pub epsilon: EpsilonSection,
    #[serde(default = "default_seed")]
    pub default_seed: u64,
}

fn default_horizon() -> u32 {
    cometsim_core::engine::DEFAULT_HORIZON_STEPS
}

fn default_step_seconds() -> u32 {
    cometsim_core::engine::DEFAULT_STEP_SECONDS
}

fn default_paths_per_round() -> usize {
    cometsim_core::engine::DEFAULT_PATHS_PER_ROUND
}

fn default_max_rounds() -> u32 {
    cometsim_core::engine::DEFAULT_MAX_ROUNDS
}

fn default_epsilon() -> EpsilonSection {
    EpsilonSection::RelativePct(1.0)
}

fn default_seed() -> u64 {
    DEFAULT_MASTER_SEED
}

pub fn load_config(path: &Path) -> Result<ConfigFile, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let cfg: ConfigFile = serde_json::from_slice(&bytes).map_err(|e| CliError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(CliError::Malformed {
            path: path.display().to_string(),
            message: format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            ),
        });
    }
    Ok(cfg)
}

pub fn save_config(cfg: &ConfigFile, path: &Path) -> Result<(), CliError> {
    let mut out = serde_json::to_vec_pretty(cfg).expect("config serializes");
    out.push(b'\n');
    std::fs::write(path, out).map_err(|e| CliError::io(path, e))
}

/// A complete config resolved into engine-ready values, collateral-aligned.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub params: MarketParams,
    pub garch: Vec<GarchSpec>,
    pub correlation: CorrelationMatrix,
    pub slippage: Vec<SlippageModel>,
    pub liquidator: LiquidatorConfig,
    pub filter: BorrowerFilter,
    pub horizon_steps: u32,
    pub step_seconds: u32,
    pub var: VarConfig,
    pub default_seed: u64,
}

fn check_fraction(at: &str, v: f64, issues: &mut Vec<ValidationIssue>) {
    if !v.is_finite() || !(0.0..=1.0).contains(&v) {
        issues.push(ValidationIssue {
            at: at.to_string(),
            message: format!("{v} is not a fraction in [0, 1]"),
        });
    }
}

fn parse_usd(at: &str, s: &str, issues: &mut Vec<ValidationIssue>) -> Usd {
    match s.parse::<Usd>() {
        Ok(v) if !v.is_negative() => v,
        Ok(_) => {
            issues.push(ValidationIssue {
                at: at.to_string(),
                message: format!("`{s}` must be nonnegative"),
            });
            Usd::ZERO
        }
        Err(e) => {
            issues.push(ValidationIssue {
                at: at.to_string(),
                message: e.to_string(),
            });
            Usd::ZERO
        }
    }
}

fn parse_tokens(
    at: &str,
    s: &str,
    decimals: u8,
    issues: &mut Vec<ValidationIssue>,
) -> TokenAmount {
    match TokenAmount::parse(s, decimals) {
        Ok(v) => v,
        Err(e) => {
            issues.push(ValidationIssue {
                at: at.to_string(),
                message: e.to_string(),
            });
            TokenAmount::ZERO
        }
    }
}

/// Cross-validates every section and returns engine-ready inputs. All
/// problems found are reported together.
pub fn resolve_config(cfg: &ConfigFile) -> Result<LoadedConfig, CliError> {
    let mut issues: Vec<ValidationIssue> = Vec::new();
    let mut need = |name: &str, present: bool| {
        if !present {
            issues.push(ValidationIssue {
                at: name.to_string(),
                message: "section is required for simulation".to_string(),
            });
        }
    };
    need("market", cfg.market.is_some());
    need("garch", cfg.garch.is_some());
    need("correlation", cfg.correlation.is_some());
    need("slippage", cfg.slippage.is_some());
    need("liquidator", cfg.liquidator.is_some());
    if !issues.is_empty() {
        return Err(CliError::Validation(issues));
    }
    let market = cfg.market.as_ref().unwrap();
    let garch_map = cfg.garch.as_ref().unwrap();
    let corr = cfg.correlation.as_ref().unwrap();
    let slippage_map = cfg.slippage.as_ref().unwrap();
    let liq = cfg.liquidator.as_ref().unwrap();

    // Market parameters.
    let base_asset = AssetId::new(market.base.symbol.clone(), market.base.decimals)
        .map_err(CliError::Market)?;
    check_fraction("market.sfp", market.sfp, &mut issues);
    let target_reserve = parse_tokens(
        "market.target_reserve",
        &market.target_reserve,
        market.base.decimals,
        &mut issues,
    );
    let ir = |section: &IrSection| IRParams {
        base: Rate::from_f64(section.base),
        slope_low: Rate::from_f64(section.slope_low),
        slope_high: Rate::from_f64(section.slope_high),
        kink: Fraction::from_f64(section.kink),
    };
    let mut collaterals = Vec::with_capacity(market.collaterals.len());
    for (i, c) in market.collaterals.iter().enumerate() {
        let at = format!("market.collaterals[{i}] ({})", c.symbol);
        for (name, v) in [("bcf", c.bcf), ("lcf", c.lcf), ("lf", c.lf)] {
            check_fraction(&format!("{at}.{name}"), v, &mut issues);
        }
        let asset = match AssetId::new(c.symbol.clone(), c.decimals) {
            Ok(a) => a,
            Err(e) => {
                issues.push(ValidationIssue {
                    at,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let supply_cap = parse_tokens(
            &format!("{at}.supply_cap"),
            &c.supply_cap,
            c.decimals,
            &mut issues,
        );
        collaterals.push(CollateralConfig {
            asset,
            bcf: Fraction::from_f64(c.bcf),
            lcf: Fraction::from_f64(c.lcf),
            lf: Fraction::from_f64(c.lf),
            supply_cap,
        });
    }
    let params = MarketParams {
        base_asset,
        sfp: Fraction::from_f64(market.sfp),
        target_reserve,
        supply_ir: ir(&market.supply_ir),
        borrow_ir: ir(&market.borrow_ir),
        collaterals,
    };
    if let Err(e) = params.validate() {
        issues.push(ValidationIssue {
            at: "market".to_string(),
            message: e.to_string(),
        });
    }

    // Per-collateral models.
    let mut garch = Vec::with_capacity(params.collaterals.len());
    let mut slippage = Vec::with_capacity(params.collaterals.len());
    for c in &params.collaterals {
        let sym = &c.asset.symbol;
        match garch_map.get(sym) {
            Some(spec) => {
                if let Err(e) = spec.validate() {
                    issues.push(ValidationIssue {
                        at: format!("garch.{sym}"),
                        message: e.to_string(),
                    });
                }
                garch.push(spec.clone());
            }
            None => issues.push(ValidationIssue {
                at: format!("garch.{sym}"),
                message: "no GARCH spec for configured collateral".to_string(),
            }),
        }
        match slippage_map.get(sym) {
            Some(s) => {
                let scale = match s.y_units {
                    YUnits::Percent => 1.0,
                    YUnits::Fraction => 100.0,
                };
                match SlippageModel::new(
                    c.asset.clone(),
                    s.form,
                    s.intercept * scale,
                    s.coefficient * scale,
                ) {
                    Ok(m) => slippage.push(m),
                    Err(e) => issues.push(ValidationIssue {
                        at: format!("slippage.{sym}"),
                        message: e.to_string(),
                    }),
                }
            }
            None => issues.push(ValidationIssue {
                at: format!("slippage.{sym}"),
                message: "no slippage model for configured collateral".to_string(),
            }),
        }
    }
    for key in garch_map.keys() {
        if !params.collaterals.iter().any(|c| &c.asset.symbol == key) {
            issues.push(ValidationIssue {
                at: format!("garch.{key}"),
                message: "spec references an unconfigured asset".to_string(),
            });
        }
    }
    for key in slippage_map.keys() {
        if !params.collaterals.iter().any(|c| &c.asset.symbol == key) {
            issues.push(ValidationIssue {
                at: format!("slippage.{key}"),
                message: "model references an unconfigured asset".to_string(),
            });
        }
    }

    // Correlation: symbols must match collateral order exactly.
    let expected: Vec<&str> = params
        .collaterals
        .iter()
        .map(|c| c.asset.symbol.as_str())
        .collect();
    let got: Vec<&str> = corr.assets.iter().map(|s| s.as_str()).collect();
    if got != expected {
        issues.push(ValidationIssue {
            at: "correlation.assets".to_string(),
            message: format!("must equal the collateral order {expected:?}, got {got:?}"),
        });
    }
    let correlation = match CorrelationMatrix::from_rows(&corr.matrix) {
        Ok(m) if m.n() == params.collaterals.len() => m,
        Ok(m) => {
            issues.push(ValidationIssue {
                at: "correlation.matrix".to_string(),
                message: format!("is {0}×{0} but {1} collaterals configured", m.n(), expected.len()),
            });
            CorrelationMatrix::identity(params.collaterals.len())
        }
        Err(e) => {
            issues.push(ValidationIssue {
                at: "correlation.matrix".to_string(),
                message: e.to_string(),
            });
            CorrelationMatrix::identity(params.collaterals.len())
        }
    };

    // Liquidator and borrower filter.
    check_fraction("liquidator.trading_fee", liq.trading_fee, &mut issues);
    let liquidator = LiquidatorConfig {
        trading_fee: Fraction::from_f64(liq.trading_fee),
        max_lot_usd: parse_usd("liquidator.max_lot_usd", &liq.max_lot_usd, &mut issues),
        floor_lot_usd: parse_usd("liquidator.floor_lot_usd", &liq.floor_lot_usd, &mut issues),
        include_fee_in_threshold: liq.include_fee_in_threshold,
    };
    let filter = match &cfg.borrower_filter {
        Some(f) => {
            if !f.max_health_factor.is_finite() || f.max_health_factor <= 0.0 {
                issues.push(ValidationIssue {
                    at: "borrower_filter.max_health_factor".to_string(),
                    message: "must be positive".to_string(),
                });
            }
            BorrowerFilter {
                min_borrow_usd: parse_usd(
                    "borrower_filter.min_borrow_usd",
                    &f.min_borrow_usd,
                    &mut issues,
                ),
                max_health_factor: Fraction::from_f64(f.max_health_factor),
            }
        }
        None => BorrowerFilter::default(),
    };

    // Scenario settings.
    let scen = cfg.scenario.clone().unwrap_or(ScenarioSection {
        horizon_steps: default_horizon(),
        step_seconds: default_step_seconds(),
        paths_per_round: default_paths_per_round(),
        max_rounds: default_max_rounds(),
        epsilon: default_epsilon(),
        default_seed: default_seed(),
    });
    if scen.horizon_steps == 0 {
        issues.push(ValidationIssue {
            at: "scenario.horizon_steps".to_string(),
            message: "must be at least 1".to_string(),
        });
    }
    if scen.paths_per_round == 0 {
        issues.push(ValidationIssue {
            at: "scenario.paths_per_round".to_string(),
            message: "must be at least 1".to_string(),
        });
    }
    let epsilon = match &scen.epsilon {
        EpsilonSection::RelativePct(pct) => {
            if !pct.is_finite() || *pct < 0.0 {
                issues.push(ValidationIssue {
                    at: "scenario.epsilon".to_string(),
                    message: "relative_pct must be nonnegative".to_string(),
                });
            }
            EpsilonSpec::RelativePctOfFirstRound(*pct)
        }
        EpsilonSection::AbsoluteUsd(s) => {
            EpsilonSpec::AbsoluteUsd(parse_usd("scenario.epsilon", s, &mut issues))
        }
    };

    if !issues.is_empty() {
        return Err(CliError::Validation(issues));
    }
    Ok(LoadedConfig {
        params,
        garch,
        correlation,
        slippage,
        liquidator,
        filter,
        horizon_steps: scen.horizon_steps,
        step_seconds: scen.step_seconds,
        var: VarConfig {
            paths_per_round: scen.paths_per_round,
            max_rounds: scen.max_rounds,
            epsilon,
        },
        default_seed: scen.default_seed,
    })
}
