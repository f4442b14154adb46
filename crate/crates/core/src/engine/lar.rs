//! Liquidations-at-Risk aggregation: per-asset and total percentile tables
//! plus fixed-width histograms of liquidated value per path.

use serde::{Deserialize, Serialize};

use crate::engine::var::percentile;
use crate::engine::{EngineError, PathOutcome};
use crate::fixed::{mul_div_rhe, Usd};

pub const DEFAULT_LAR_BINS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentileSet {
    pub p50: Usd,
    pub p90: Usd,
    pub p95: Usd,
    pub p99: Usd,
}

impl PercentileSet {
    fn of(samples: &[Usd]) -> Result<Self, EngineError> {
        Ok(PercentileSet {
            p50: percentile(samples, 0.50)?,
            p90: percentile(samples, 0.90)?,
            p95: percentile(samples, 0.95)?,
            p99: percentile(samples, 0.99)?,
        })
    }
}

/// Fixed-width histogram over `[0, max_usd]`. All-zero samples collapse into
/// bin 0 (the bin width degenerates to zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub max_usd: Usd,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn of(samples: &[Usd], bins: usize) -> Self {
        let max = samples.iter().copied().max().unwrap_or(Usd::ZERO);
        let mut counts = vec![0u64; bins];
        if max == Usd::ZERO {
            counts[0] = samples.len() as u64;
            return Histogram {
                max_usd: max,
                counts,
            };
        }
        for s in samples {
            let idx = ((s.raw().max(0) as u128 * bins as u128) / max.raw() as u128) as usize;
            counts[idx.min(bins - 1)] += 1;
        }
        Histogram {
            max_usd: max,
            counts,
        }
    }

    /// Inclusive lower edge of bin `k`.
    pub fn lower_edge(&self, k: usize) -> Usd {
        Usd::from_raw(mul_div_rhe(self.max_usd.raw(), k as i128, self.counts.len() as i128))
    }

    pub fn upper_edge(&self, k: usize) -> Usd {
        self.lower_edge(k + 1)
    }

    pub fn mass(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LarColumn {
    pub name: String,
    pub percentiles: PercentileSet,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LarReport {
    pub n_paths: usize,
    pub total: LarColumn,
    pub per_asset: Vec<LarColumn>,
}

/// Builds the LaR report over a set of path outcomes. `asset_names` must
/// align with the outcome vectors' collateral order.
pub fn estimate_lar(
    outcomes: &[PathOutcome],
    asset_names: &[String],
) -> Result<LarReport, EngineError> {
    if outcomes.is_empty() {
        return Err(EngineError::EmptySamples);
    }
    let n_assets = asset_names.len();
    for o in outcomes {
        if o.liquidated_value_usd.len() != n_assets {
            return Err(EngineError::DimensionMismatch(
                "outcome asset count differs from asset names".into(),
            ));
        }
    }
    let column = |name: &str, samples: &[Usd]| -> Result<LarColumn, EngineError> {
        Ok(LarColumn {
            name: name.to_string(),
            percentiles: PercentileSet::of(samples)?,
            histogram: Histogram::of(samples, DEFAULT_LAR_BINS),
        })
    };

    let totals: Vec<Usd> = outcomes.iter().map(|o| o.liquidated_total_usd).collect();
    let total = column("total", &totals)?;
    let mut per_asset = Vec::with_capacity(n_assets);
    for (i, name) in asset_names.iter().enumerate() {
        let samples: Vec<Usd> = outcomes.iter().map(|o| o.liquidated_value_usd[i]).collect();
        per_asset.push(column(name, &samples)?);
    }
    Ok(LarReport {
        n_paths: outcomes.len(),
        total,
        per_asset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(path: u64, arb: i64, total_extra: i64) -> PathOutcome {
        let arb_usd = Usd::from_dollars(arb);
        let other = Usd::from_dollars(total_extra);
        PathOutcome {
            path_index: path,
            protocol_loss_usd: Usd::ZERO,
            liquidated_value_usd: vec![arb_usd, other],
            liquidated_total_usd: arb_usd + other,
            absorb_count: 0,
            final_prices: vec![],
            max_drop_pct: vec![0.0, 0.0],
            max_rise_pct: vec![0.0, 0.0],
        }
    }

    fn names() -> Vec<String> {
        vec!["ARB".into(), "GMX".into()]
    }

    #[test]
    fn no_liquidations_single_occupied_bin() {
        let outcomes: Vec<PathOutcome> = (0..50).map(|i| outcome(i, 0, 0)).collect();
        let report = estimate_lar(&outcomes, &names()).unwrap();
        assert_eq!(report.total.percentiles.p99, Usd::ZERO);
        assert_eq!(report.total.histogram.counts[0], 50);
        assert_eq!(report.total.histogram.mass(), 50);
        assert_eq!(
            report.total.histogram.counts.iter().filter(|&&c| c > 0).count(),
            1
        );
        // Beyond bin 0 everything is empty.
        assert!(report.total.histogram.counts[1..].iter().all(|&c| c == 0));
    }

    #[test]
    fn single_liquidating_path_among_98_zeros() {
        // 99 paths, one liquidates $1000 of ARB: nearest-rank p99 is the
        // 99th order statistic ($1000), p95 the 95th (zero).
        let mut outcomes: Vec<PathOutcome> = (0..98).map(|i| outcome(i, 0, 0)).collect();
        outcomes.push(outcome(98, 1000, 0));
        let report = estimate_lar(&outcomes, &names()).unwrap();
        let arb = &report.per_asset[0];
        assert_eq!(arb.percentiles.p99, Usd::from_dollars(1000));
        assert_eq!(arb.percentiles.p95, Usd::ZERO);
    }

    #[test]
    fn total_column_is_sum_of_assets_per_path() {
        let outcomes: Vec<PathOutcome> = (0..40)
            .map(|i| outcome(i, (i % 7) as i64 * 100, (i % 3) as i64 * 250))
            .collect();
        let report = estimate_lar(&outcomes, &names()).unwrap();
        for o in &outcomes {
            assert_eq!(
                o.liquidated_total_usd,
                o.liquidated_value_usd[0] + o.liquidated_value_usd[1]
            );
        }
        assert_eq!(report.per_asset.len(), 2);
        assert_eq!(report.total.histogram.mass() as usize, outcomes.len());
    }

    #[test]
    fn histogram_mass_equals_paths_and_edges_are_monotone() {
        let outcomes: Vec<PathOutcome> = (0..123)
            .map(|i| outcome(i, (i * 13 % 997) as i64, 0))
            .collect();
        let report = estimate_lar(&outcomes, &names()).unwrap();
        let h = &report.per_asset[0].histogram;
        assert_eq!(h.mass(), 123);
        assert_eq!(h.counts.len(), DEFAULT_LAR_BINS);
        for k in 0..DEFAULT_LAR_BINS {
            assert!(h.lower_edge(k) <= h.upper_edge(k));
        }
        assert_eq!(h.upper_edge(DEFAULT_LAR_BINS - 1), h.max_usd);
    }

    #[test]
    fn empty_outcomes_rejected() {
        assert!(matches!(
            estimate_lar(&[], &names()),
            Err(EngineError::EmptySamples)
        ));
    }
}
