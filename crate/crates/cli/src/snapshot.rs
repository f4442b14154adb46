//! On-chain snapshot schema and market assembly.
//!
//! Parsing is strict (unknown fields rejected); semantic validation then
//! collects every problem — negative quantities, unconfigured assets,
//! missing prices, duplicate ids — in one pass so a bad snapshot surfaces
//! all of its defects at once.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use cometsim_core::agents::{init_borrowers, init_supplier_liquidity};
use cometsim_core::fixed::{TokenAmount, Usd};
use cometsim_core::market::{Account, AssetId, MarketState, PriceVector};

use crate::config::LoadedConfig;
use crate::{CliError, ValidationIssue};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotFile {
    pub schema_version: u32,
    pub block_height: u64,
    /// USD price per whole token, decimal strings keyed by symbol.
    pub prices: BTreeMap<String, String>,
    /// Initial protocol reserve in base tokens.
    #[serde(default)]
    pub base_reserve: Option<String>,
    pub accounts: Vec<AccountRow>,
    pub suppliers: Vec<SupplierRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccountRow {
    pub id: String,
    /// Token quantities (decimal strings) keyed by symbol.
    #[serde(default)]
    pub collateral: BTreeMap<String, String>,
    /// Base tokens borrowed.
    #[serde(default)]
    pub base_borrowed: Option<String>,
    /// Base tokens supplied.
    #[serde(default)]
    pub base_supplied: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupplierRow {
    pub id: String,
    pub base_supplied: String,
}

/// Parses and schema-checks a snapshot file. Syntax errors carry the line
/// and column from the JSON parser.
pub fn load_snapshot(path: &Path) -> Result<SnapshotFile, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let snap: SnapshotFile = serde_json::from_slice(&bytes).map_err(|e| CliError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    if snap.schema_version != SCHEMA_VERSION {
        return Err(CliError::Malformed {
            path: path.display().to_string(),
            message: format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                snap.schema_version
            ),
        });
    }
    Ok(snap)
}

/// Builds the initial market from a snapshot: validates all rows, admits
/// borrowers through the configured filter, loads supplier liquidity and the
/// reserve, then checks pool solvency.
pub fn build_market(
    cfg: &LoadedConfig,
    snap: &SnapshotFile,
) -> Result<(MarketState, PriceVector), CliError> {
    let mut issues: Vec<ValidationIssue> = Vec::new();
    let params = &cfg.params;
    let base_decimals = params.base_asset.decimals;

    // Prices: every configured collateral must be quoted, quotes must be
    // positive, and quoted assets must exist in the config.
    let mut pairs: Vec<(AssetId, Usd)> = Vec::new();
    for (symbol, value) in &snap.prices {
        let at = format!("prices.{symbol}");
        let asset = if symbol == &params.base_asset.symbol {
            params.base_asset.clone()
        } else {
            match params.collaterals.iter().find(|c| &c.asset.symbol == symbol) {
                Some(c) => c.asset.clone(),
                None => {
                    issues.push(ValidationIssue {
                        at,
                        message: "asset is not configured in the market".to_string(),
                    });
                    continue;
                }
            }
        };
        match value.parse::<Usd>() {
            Ok(p) if p.raw() > 0 => pairs.push((asset, p)),
            Ok(_) => issues.push(ValidationIssue {
                at,
                message: "price must be positive".to_string(),
            }),
            Err(e) => issues.push(ValidationIssue {
                at,
                message: e.to_string(),
            }),
        }
    }
    let prices = match params.price_vector(&pairs) {
        Ok(p) => p,
        Err(e) => {
            issues.push(ValidationIssue {
                at: "prices".to_string(),
                message: e.to_string(),
            });
            if issues.is_empty() {
                unreachable!()
            }
            return Err(CliError::Validation(issues));
        }
    };

    // Accounts.
    let mut candidates: Vec<Account> = Vec::new();
    let mut seen_ids = std::collections::HashSet::new();
    for (i, row) in snap.accounts.iter().enumerate() {
        let at = format!("accounts[{i}] ({})", row.id);
        if !seen_ids.insert(row.id.clone()) {
            issues.push(ValidationIssue {
                at: at.clone(),
                message: "duplicate account id".to_string(),
            });
            continue;
        }
        let mut collateral: Vec<(AssetId, TokenAmount)> = Vec::new();
        let mut row_ok = true;
        for (symbol, qty) in &row.collateral {
            let cat = format!("{at}.collateral.{symbol}");
            let asset = match params.collaterals.iter().find(|c| &c.asset.symbol == symbol) {
                Some(c) => c.asset.clone(),
                None => {
                    issues.push(ValidationIssue {
                        at: cat,
                        message: "collateral asset is not configured in the market".to_string(),
                    });
                    row_ok = false;
                    continue;
                }
            };
            match TokenAmount::parse(qty, asset.decimals) {
                Ok(q) => collateral.push((asset, q)),
                Err(e) => {
                    issues.push(ValidationIssue {
                        at: cat,
                        message: e.to_string(),
                    });
                    row_ok = false;
                }
            }
        }
        let mut parse_base = |field: &str, v: &Option<String>, ok: &mut bool| -> TokenAmount {
            match v {
                None => TokenAmount::ZERO,
                Some(s) => match TokenAmount::parse(s, base_decimals) {
                    Ok(q) => q,
                    Err(e) => {
                        issues.push(ValidationIssue {
                            at: format!("{at}.{field}"),
                            message: e.to_string(),
                        });
                        *ok = false;
                        TokenAmount::ZERO
                    }
                },
            }
        };
        let borrowed = parse_base("base_borrowed", &row.base_borrowed, &mut row_ok);
        let supplied = parse_base("base_supplied", &row.base_supplied, &mut row_ok);
        if !row_ok {
            continue;
        }
        match params.make_account(row.id.clone(), &collateral, borrowed, supplied) {
            Ok(a) => candidates.push(a),
            Err(e) => issues.push(ValidationIssue {
                at: at.clone(),
                message: e.to_string(),
            }),
        }
    }

    // Suppliers.
    let mut supplier_rows: Vec<(String, TokenAmount)> = Vec::new();
    for (i, row) in snap.suppliers.iter().enumerate() {
        match TokenAmount::parse(&row.base_supplied, base_decimals) {
            Ok(q) => supplier_rows.push((row.id.clone(), q)),
            Err(e) => issues.push(ValidationIssue {
                at: format!("suppliers[{i}] ({})", row.id),
                message: e.to_string(),
            }),
        }
    }

    let reserve_units = match &snap.base_reserve {
        None => 0i128,
        Some(s) => match TokenAmount::parse(s, base_decimals) {
            Ok(q) => q.0 as i128,
            Err(e) => {
                issues.push(ValidationIssue {
                    at: "base_reserve".to_string(),
                    message: e.to_string(),
                });
                0
            }
        },
    };

    if !issues.is_empty() {
        return Err(CliError::Validation(issues));
    }

    let admitted = init_borrowers(candidates, &prices, params, &cfg.filter);
    let mut market = MarketState::new(params.clone())?;
    market.add_base_supply(init_supplier_liquidity(&supplier_rows));
    market.set_base_reserve(reserve_units);
    for account in admitted {
        let id = account.id().to_string();
        market.add_account(account).map_err(|e| {
            CliError::Validation(vec![ValidationIssue {
                at: format!("accounts ({id})"),
                message: e.to_string(),
            }])
        })?;
    }
    market.check_solvency()?;
    Ok((market, prices))
}
