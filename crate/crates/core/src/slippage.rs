//! Order-size → slippage-percent curves.
//!
//! Each asset carries either a log-linear curve `y = a + b·ln(sell)` or a
//! linear curve `y = a + b·sell`, with `y` in percent and `sell` the order's
//! USD value. Evaluation clamps below at zero; negative observed slippage is
//! execution at better than quote and carries no cost.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detmath::ln;
use crate::market::AssetId;

#[derive(Debug, Error, PartialEq)]
pub enum SlippageError {
    #[error("sell value must be positive, got {0}")]
    NonPositiveSell(f64),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("degenerate regression design: all regressor values equal")]
    DegenerateDesign,
    #[error("non-finite coefficient or sample value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlippageForm {
    LogLinear,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlippageModel {
    pub asset: AssetId,
    pub form: SlippageForm,
    pub intercept: f64,
    pub coefficient: f64,
}

impl SlippageModel {
    pub fn new(
        asset: AssetId,
        form: SlippageForm,
        intercept: f64,
        coefficient: f64,
    ) -> Result<Self, SlippageError> {
        if !intercept.is_finite() || !coefficient.is_finite() {
            return Err(SlippageError::NonFinite);
        }
        Ok(SlippageModel {
            asset,
            form,
            intercept,
            coefficient,
        })
    }

    /// Slippage percentage for a sell of `sell_usd`, clamped below at zero.
    pub fn eval(&self, sell_usd: f64) -> Result<f64, SlippageError> {
        if !sell_usd.is_finite() || sell_usd <= 0.0 {
            return Err(SlippageError::NonPositiveSell(sell_usd));
        }
        let y = match self.form {
            SlippageForm::LogLinear => self.intercept + self.coefficient * ln(sell_usd),
            SlippageForm::Linear => self.intercept + self.coefficient * sell_usd,
        };
        Ok(y.max(0.0))
    }
}

/// Production-fit default curves for the four launch collaterals.
/// Symbols are matched on the wrapped and unwrapped spellings.
pub fn default_model(asset: &AssetId) -> Option<SlippageModel> {
    let (form, a, b) = match asset.symbol.as_str() {
        "WBTC" | "BTC" => (SlippageForm::LogLinear, 0.0421, 0.0129),
        "WETH" | "ETH" => (SlippageForm::LogLinear, 0.057, 0.0023),
        "ARB" => (SlippageForm::LogLinear, -0.124, 0.0244),
        "GMX" => (SlippageForm::Linear, 0.186, 2e-4),
        _ => return None,
    };
    Some(SlippageModel {
        asset: asset.clone(),
        form,
        intercept: a,
        coefficient: b,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlippageSample {
    pub sell_usd: f64,
    pub slippage_pct: f64,
}

pub const DEFAULT_WHALE_PERCENTILE: f64 = 0.995;

/// Cleans raw execution samples: drops negative-slippage rows, collapses
/// exact duplicates, and removes whale orders above the given sell-size
/// percentile.
pub fn clean_samples_with(samples: &[SlippageSample], whale_percentile: f64) -> Vec<SlippageSample> {
    let mut kept: Vec<SlippageSample> = Vec::with_capacity(samples.len());
    let mut seen: std::collections::HashSet<(u64, u64)> = std::collections::HashSet::new();
    for s in samples {
        if !s.sell_usd.is_finite() || !s.slippage_pct.is_finite() {
            continue;
        }
        if s.slippage_pct < 0.0 {
            continue;
        }
        if seen.insert((s.sell_usd.to_bits(), s.slippage_pct.to_bits())) {
            kept.push(*s);
        }
    }
    if kept.is_empty() {
        return kept;
    }
    let mut sells: Vec<f64> = kept.iter().map(|s| s.sell_usd).collect();
    sells.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((whale_percentile * sells.len() as f64).ceil() as usize)
        .clamp(1, sells.len());
    let cutoff = sells[rank - 1];
    kept.retain(|s| s.sell_usd <= cutoff);
    kept
}

pub fn clean_samples(samples: &[SlippageSample]) -> Vec<SlippageSample> {
    clean_samples_with(samples, DEFAULT_WHALE_PERCENTILE)
}

/// Ordinary least squares of slippage percent on `ln(sell)` (log-linear) or
/// `sell` (linear), via the closed-form normal equations.
pub fn fit_slippage(
    asset: AssetId,
    samples: &[SlippageSample],
    form: SlippageForm,
) -> Result<SlippageModel, SlippageError> {
    if samples.len() < 3 {
        return Err(SlippageError::TooFewSamples {
            needed: 3,
            got: samples.len(),
        });
    }
    let mut xs = Vec::with_capacity(samples.len());
    let mut ys = Vec::with_capacity(samples.len());
    for s in samples {
        if !s.sell_usd.is_finite() || s.sell_usd <= 0.0 || !s.slippage_pct.is_finite() {
            return Err(SlippageError::NonPositiveSell(s.sell_usd));
        }
        xs.push(match form {
            SlippageForm::LogLinear => ln(s.sell_usd),
            SlippageForm::Linear => s.sell_usd,
        });
        ys.push(s.slippage_pct);
    }
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    if sxx <= 0.0 {
        return Err(SlippageError::DegenerateDesign);
    }
    let b = sxy / sxx;
    let a = y_mean - b * x_mean;
    SlippageModel::new(asset, form, a, b)
}
