//! Nearest-rank percentiles and the staged VaR convergence protocol.

use serde::{Deserialize, Serialize};

use crate::engine::EngineError;
use crate::fixed::Usd;
use crate::price::{PathStream, StreamKey};

pub const DEFAULT_PATHS_PER_ROUND: usize = 5000;
pub const DEFAULT_MAX_ROUNDS: u32 = 10;
/// Minimum rounds before the protocol may declare convergence: one opening
/// round, one passing gap check, one passing final check.
pub const MIN_ROUNDS: u32 = 3;

/// Nearest-rank percentile: the ⌈q·n⌉-th order statistic of the ascending
/// sort. The rank product is snapped to the nearest integer when within 1e-9
/// so binary rounding of `q` cannot shift the rank.
pub fn percentile(samples: &[Usd], q: f64) -> Result<Usd, EngineError> {
    if samples.is_empty() {
        return Err(EngineError::EmptySamples);
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(EngineError::InvalidQuantile(q));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let t = q * samples.len() as f64;
    let near = t.round();
    let rank = if (t - near).abs() < 1e-9 {
        near as usize
    } else {
        t.ceil() as usize
    };
    let rank = rank.clamp(1, samples.len());
    Ok(sorted[rank - 1])
}

/// Convergence tolerance: either a fixed USD bound or a percentage of the
/// first round's p95.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonSpec {
    AbsoluteUsd(Usd),
    RelativePctOfFirstRound(f64),
}

impl Default for EpsilonSpec {
    fn default() -> Self {
        EpsilonSpec::RelativePctOfFirstRound(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarConfig {
    pub paths_per_round: usize,
    pub max_rounds: u32,
    pub epsilon: EpsilonSpec,
}

impl Default for VarConfig {
    fn default() -> Self {
        VarConfig {
            paths_per_round: DEFAULT_PATHS_PER_ROUND,
            max_rounds: DEFAULT_MAX_ROUNDS,
            epsilon: EpsilonSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarReport {
    /// p95 of the pooled losses at the final round.
    pub var95_usd: Usd,
    pub rounds: u32,
    /// p95 of the growing pool after each round.
    pub percentile_per_round: Vec<Usd>,
    /// |p95_r − p95_{r−1}| for r ≥ 2.
    pub gaps: Vec<Usd>,
    pub converged: bool,
    /// Resolved absolute tolerance.
    pub epsilon_usd: Usd,
    pub n_samples: usize,
}

/// The staged protocol: run a round, pool it with all previous rounds, and
/// take the pooled p95. After the opening round, each new round's p95 is
/// compared against the previous pool's; one passing gap lets the run
/// proceed to a final confirming round, so convergence requires the last two
/// gaps to sit within the tolerance (minimum three rounds / 15k paths at the
/// default round size). The pool only ever grows, and the percentile is
/// always taken over the entire pool.
pub fn var_protocol<F>(cfg: &VarConfig, mut run_round_losses: F) -> VarReport
where
    F: FnMut(u32) -> Vec<Usd>,
{
    assert!(cfg.paths_per_round >= 1, "rounds must contain paths");
    let max_rounds = cfg.max_rounds.max(MIN_ROUNDS);
    let mut pool: Vec<Usd> = Vec::new();
    let mut per_round: Vec<Usd> = Vec::new();
    let mut gaps: Vec<Usd> = Vec::new();
    let mut epsilon = match cfg.epsilon {
        EpsilonSpec::AbsoluteUsd(value) => value,
        EpsilonSpec::RelativePctOfFirstRound(_) => Usd::ZERO,
    };
    let mut converged = false;

    for round in 0..max_rounds {
        pool.extend(run_round_losses(round));
        let p95 = percentile(&pool, 0.95).expect("pool nonempty");
        per_round.push(p95);
        if round == 0 {
            if let EpsilonSpec::RelativePctOfFirstRound(pct) = cfg.epsilon {
                epsilon = Usd::from_f64(p95.to_f64() * pct / 100.0).saturating_nonneg();
            }
            continue;
        }
        let prev = per_round[per_round.len() - 2];
        let gap = Usd::from_raw((p95 - prev).raw().abs());
        gaps.push(gap);
        let last_two_ok = gaps.len() >= 2
            && gaps[gaps.len() - 1] <= epsilon
            && gaps[gaps.len() - 2] <= epsilon;
        if per_round.len() as u32 >= MIN_ROUNDS && last_two_ok {
            converged = true;
            break;
        }
    }

    VarReport {
        var95_usd: *per_round.last().expect("at least one round"),
        rounds: per_round.len() as u32,
        percentile_per_round: per_round,
        gaps,
        converged,
        epsilon_usd: epsilon,
        n_samples: pool.len(),
    }
}

/// Bootstrap standard error of the nearest-rank p95: resamples with
/// replacement `reps` times on a deterministic auxiliary stream.
pub fn bootstrap_p95_se(samples: &[Usd], reps: u32, seed: u64) -> f64 {
    assert!(!samples.is_empty() && reps >= 2);
    let key = StreamKey::from_master_seed(seed).derive(0xB007);
    let n = samples.len();
    let mut p95s = Vec::with_capacity(reps as usize);
    let mut resample = vec![Usd::ZERO; n];
    for rep in 0..reps {
        let mut stream = PathStream::new(&key, rep as u64);
        for (i, slot) in resample.iter_mut().enumerate() {
            let draw = stream.u64_at(i as u64) as usize % n;
            *slot = samples[draw];
        }
        p95s.push(percentile(&resample, 0.95).unwrap().to_f64());
    }
    let mean = p95s.iter().sum::<f64>() / p95s.len() as f64;
    let var = p95s.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
        / (p95s.len() - 1) as f64;
    var.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn usd(v: i64) -> Usd {
        Usd::from_dollars(v)
    }

    #[test]
    fn percentile_examples() {
        let one_to_hundred: Vec<Usd> = (1..=100).map(usd).collect();
        assert_eq!(percentile(&one_to_hundred, 0.95).unwrap(), usd(95));
        assert_eq!(percentile(&[usd(7)], 0.5).unwrap(), usd(7));
        assert_eq!(percentile(&[usd(7)], 0.99).unwrap(), usd(7));
        let sparse = [usd(0), usd(0), usd(0), usd(10)];
        // ⌈0.95·4⌉ = ⌈3.8⌉ = 4 → the 4th order statistic.
        assert_eq!(percentile(&sparse, 0.95).unwrap(), usd(10));
        assert!(percentile(&[], 0.95).is_err());
        assert!(percentile(&[usd(1)], 0.0).is_err());
        assert!(percentile(&[usd(1)], 1.5).is_err());
    }

    #[test]
    fn percentile_rank_products_do_not_drift() {
        // 0.9 × 10 is 9.000000000000002 in binary; the snap keeps rank 9.
        let ten: Vec<Usd> = (1..=10).map(usd).collect();
        assert_eq!(percentile(&ten, 0.9).unwrap(), usd(9));
        assert_eq!(percentile(&ten, 1.0).unwrap(), usd(10));
        assert_eq!(percentile(&ten, 0.05).unwrap(), usd(1));
    }

    #[test]
    fn protocol_converges_in_three_rounds_on_degenerate_losses() {
        let report = var_protocol(&VarConfig::default(), |_| vec![Usd::ZERO; 5000]);
        assert!(report.converged);
        assert_eq!(report.rounds, 3);
        assert_eq!(report.n_samples, 15_000);
        assert_eq!(report.var95_usd, Usd::ZERO);
    }

    #[test]
    fn protocol_with_infinite_epsilon_stops_at_minimum() {
        let mut counter = 0u64;
        let report = var_protocol(
            &VarConfig {
                epsilon: EpsilonSpec::AbsoluteUsd(Usd::from_dollars(i64::MAX / 2)),
                ..VarConfig::default()
            },
            |_| {
                (0..5000)
                    .map(|_| {
                        counter += 1;
                        usd((counter % 997) as i64)
                    })
                    .collect()
            },
        );
        assert!(report.converged);
        assert_eq!(report.rounds, 3);
        assert_eq!(report.n_samples, 15_000);
    }

    #[test]
    fn protocol_reports_non_convergence_with_zero_epsilon() {
        // Losses drift upward between rounds: pooled p95 keeps moving, so an
        // exact-zero tolerance can never see two matching gaps.
        let report = var_protocol(
            &VarConfig {
                epsilon: EpsilonSpec::AbsoluteUsd(Usd::ZERO),
                paths_per_round: 100,
                max_rounds: 6,
            },
            |round| {
                (0..100)
                    .map(|i| usd((i % 50) + 10 * round as i64 + 1))
                    .collect()
            },
        );
        assert!(!report.converged);
        assert_eq!(report.rounds, 6);
        assert_eq!(report.gaps.len(), 5);
    }

    #[test]
    fn pool_only_grows_and_percentiles_cover_the_pool() {
        let mut sizes = Vec::new();
        let report = var_protocol(
            &VarConfig {
                paths_per_round: 10,
                max_rounds: 4,
                epsilon: EpsilonSpec::AbsoluteUsd(Usd::ZERO),
            },
            |round| {
                sizes.push(10 * (round as usize + 1));
                (0..10).map(|i| usd(i + round as i64 * 3)).collect()
            },
        );
        assert_eq!(report.n_samples, 40);
        assert_eq!(sizes, vec![10, 20, 30, 40]);
        assert_eq!(report.percentile_per_round.len(), 4);
    }

    #[test]
    fn bootstrap_se_is_positive_and_stable() {
        let samples: Vec<Usd> = (1..=500).map(usd).collect();
        let se1 = bootstrap_p95_se(&samples, 100, 9);
        let se2 = bootstrap_p95_se(&samples, 100, 9);
        assert_eq!(se1, se2);
        assert!(se1 > 0.0);
        // p95 of U{1..500} has SE of roughly 500·sqrt(.95·.05/500) ≈ 5.
        assert!(se1 > 1.0 && se1 < 20.0, "se {se1}");
    }
}
