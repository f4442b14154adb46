//! Correlated multi-asset price path generation.
//!
//! Per step: draw independent standard normals from the path's counter
//! stream, correlate them through the Cholesky factor, advance each asset's
//! GARCH recursion, and map cumulative log returns onto the origin prices.

use crate::detmath::{exp, ln};
use crate::fixed::Usd;
use crate::price::corr::{psd_factor, CholFactor, CorrelationMatrix};
use crate::price::garch::{garch_step, GarchSpec, GarchState};
use crate::price::rng::{PathStream, StreamKey};
use crate::price::PriceModelError;

/// Supplies the pre-correlation standard normals for each step. The
/// production source is [`CounterInnovations`]; tests may script exact
/// values.
pub trait InnovationSource {
    fn fill(&mut self, step: u32, out: &mut [f64]);
}

/// Counter-addressed innovations: `(master_seed, path_index, step, lane)`
/// fully determines every draw.
pub struct CounterInnovations {
    stream: PathStream,
}

impl CounterInnovations {
    pub fn new(key: &StreamKey, path_index: u64) -> Self {
        CounterInnovations {
            stream: PathStream::new(key, path_index),
        }
    }
}

impl InnovationSource for CounterInnovations {
    fn fill(&mut self, step: u32, out: &mut [f64]) {
        self.stream.normals(step, out);
    }
}

/// Streams one path's prices step by step without materializing the whole
/// path.
pub struct PathGenerator<'a> {
    specs: &'a [GarchSpec],
    factor: &'a CholFactor,
    states: Vec<GarchState>,
    cum_log: Vec<f64>,
    origins: Vec<f64>,
    z: Vec<f64>,
    z_corr: Vec<f64>,
}

impl<'a> PathGenerator<'a> {
    pub fn new(
        specs: &'a [GarchSpec],
        factor: &'a CholFactor,
        origins: &[Usd],
    ) -> Result<Self, PriceModelError> {
        if specs.len() != factor.n() || origins.len() != specs.len() {
            return Err(PriceModelError::DimensionMismatch(
                "specs, correlation factor, and origins must agree".into(),
            ));
        }
        for spec in specs {
            spec.validate()?;
        }
        let n = specs.len();
        Ok(PathGenerator {
            specs,
            factor,
            states: specs.iter().map(GarchState::new).collect(),
            cum_log: vec![0.0; n],
            origins: origins.iter().map(|p| p.to_f64()).collect(),
            z: vec![0.0; n],
            z_corr: vec![0.0; n],
        })
    }

    pub fn n_assets(&self) -> usize {
        self.specs.len()
    }

    /// Advances one step, writing the new prices. Prices stay strictly
    /// positive: the exponential map never reaches zero and the fixed-point
    /// conversion floors at one raw unit.
    pub fn step<S: InnovationSource>(&mut self, src: &mut S, step: u32, prices_out: &mut [Usd]) {
        debug_assert_eq!(prices_out.len(), self.specs.len());
        src.fill(step, &mut self.z);
        self.factor.correlate(&self.z, &mut self.z_corr);
        for (i, slot) in prices_out.iter_mut().enumerate() {
            let r = garch_step(&self.specs[i], &mut self.states[i], self.z_corr[i]);
            self.cum_log[i] += r;
            let price = self.origins[i] * exp(self.cum_log[i]);
            *slot = Usd::from_f64(price).max(Usd::from_raw(1));
        }
    }

    /// Most recent per-step log returns are not retained; cumulative log
    /// returns since the origin are.
    pub fn cumulative_log_returns(&self) -> &[f64] {
        &self.cum_log
    }
}

/// A fully materialized set of simulated paths. Step 0 holds the origin
/// prices; steps 1..=n_steps are simulated.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePathSet {
    pub n_paths: usize,
    pub n_steps: usize,
    pub n_assets: usize,
    pub step_seconds: u32,
    pub origins: Vec<Usd>,
    data: Vec<Usd>,
}

pub const DEFAULT_STEP_SECONDS: u32 = 50;

impl PricePathSet {
    pub fn price(&self, path: usize, step: usize, asset: usize) -> Usd {
        self.data[(path * (self.n_steps + 1) + step) * self.n_assets + asset]
    }
}

/// Simulates `n_paths` paths of `n_steps` steps. Each path is an independent
/// stream keyed by `(seed, path_index)`, so any subset of paths can be
/// regenerated in any order with identical results.
pub fn simulate_paths(
    specs: &[GarchSpec],
    corr: &CorrelationMatrix,
    origins: &[Usd],
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<PricePathSet, PriceModelError> {
    if corr.n() != specs.len() {
        return Err(PriceModelError::DimensionMismatch(
            "correlation dimension must match spec count".into(),
        ));
    }
    if n_steps == 0 || n_paths == 0 {
        return Err(PriceModelError::DimensionMismatch(
            "n_steps and n_paths must be at least 1".into(),
        ));
    }
    let factor = psd_factor(corr)?;
    let key = StreamKey::from_master_seed(seed);
    let n_assets = specs.len();
    let mut data = Vec::with_capacity(n_paths * (n_steps + 1) * n_assets);
    let mut row = vec![Usd::ZERO; n_assets];
    for path in 0..n_paths {
        let mut generator = PathGenerator::new(specs, &factor, origins)?;
        let mut src = CounterInnovations::new(&key, path as u64);
        data.extend_from_slice(origins);
        for step in 1..=n_steps {
            generator.step(&mut src, step as u32, &mut row);
            data.extend_from_slice(&row);
        }
    }
    Ok(PricePathSet {
        n_paths,
        n_steps,
        n_assets,
        step_seconds: DEFAULT_STEP_SECONDS,
        origins: origins.to_vec(),
        data,
    })
}

/// Log returns `ln(p_t / p_{t−1})` of a positive price series.
pub fn log_returns(prices: &[f64]) -> Result<Vec<f64>, PriceModelError> {
    if prices.len() < 2 {
        return Err(PriceModelError::SeriesTooShort {
            needed: 2,
            got: prices.len(),
        });
    }
    if prices.iter().any(|&p| !p.is_finite() || p <= 0.0) {
        return Err(PriceModelError::NonPositivePrice);
    }
    Ok(prices.windows(2).map(|w| ln(w[1] / w[0])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::price::corr::estimate_correlation;

    struct ZeroInnovations;
    impl InnovationSource for ZeroInnovations {
        fn fill(&mut self, _step: u32, out: &mut [f64]) {
            out.fill(0.0);
        }
    }

    #[test]
    fn log_returns_examples() {
        assert_eq!(log_returns(&[100.0, 100.0]).unwrap(), vec![0.0]);
        let r = log_returns(&[100.0, 110.0]).unwrap();
        assert!((r[0] - 0.09531017980432486).abs() < 1e-12);
        assert!(matches!(
            log_returns(&[100.0]),
            Err(PriceModelError::SeriesTooShort { .. })
        ));
        assert!(matches!(
            log_returns(&[100.0, -1.0]),
            Err(PriceModelError::NonPositivePrice)
        ));
    }

    #[test]
    fn zero_innovations_and_zero_mean_hold_prices_at_origin() {
        let specs = vec![GarchSpec::constant_variance(0.0, 1e-6); 2];
        let factor = psd_factor(&CorrelationMatrix::identity(2)).unwrap();
        let origins = vec![Usd::from_dollars(3000), Usd::from_dollars(60000)];
        let mut generator = PathGenerator::new(&specs, &factor, &origins).unwrap();
        let mut out = vec![Usd::ZERO; 2];
        let mut src = ZeroInnovations;
        generator.step(&mut src, 1, &mut out);
        assert_eq!(out, origins);
    }

    #[test]
    fn path_set_origin_and_positivity() {
        let specs = vec![
            GarchSpec {
                mu: 0.0,
                ar: vec![],
                ma: vec![],
                alpha0: 1e-6,
                alpha: vec![0.05],
                beta: vec![0.9],
            };
            2
        ];
        let corr = CorrelationMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let origins = vec![Usd::from_dollars(3000), Usd::from_dollars(25)];
        let set = simulate_paths(&specs, &corr, &origins, 64, 5, 9).unwrap();
        assert_eq!(set.price(0, 0, 0), origins[0]);
        assert_eq!(set.price(4, 0, 1), origins[1]);
        for path in 0..set.n_paths {
            for step in 0..=set.n_steps {
                for asset in 0..set.n_assets {
                    assert!(set.price(path, step, asset).raw() > 0);
                }
            }
        }
    }

    #[test]
    fn identical_path_index_is_bit_identical_regardless_of_batch() {
        let specs = vec![GarchSpec {
            mu: 0.0001,
            ar: vec![],
            ma: vec![],
            alpha0: 1e-6,
            alpha: vec![0.1],
            beta: vec![0.85],
        }];
        let corr = CorrelationMatrix::identity(1);
        let origins = vec![Usd::from_dollars(100)];
        let many = simulate_paths(&specs, &corr, &origins, 32, 7, 3).unwrap();
        let few = simulate_paths(&specs, &corr, &origins, 32, 3, 3).unwrap();
        for step in 0..=32 {
            assert_eq!(many.price(2, step, 0), few.price(2, step, 0));
        }
    }

    #[test]
    fn simulate_rejects_nonstationary_spec() {
        let bad = GarchSpec {
            mu: 0.0,
            ar: vec![],
            ma: vec![],
            alpha0: 1e-6,
            alpha: vec![0.6],
            beta: vec![0.5],
        };
        let corr = CorrelationMatrix::identity(1);
        assert!(matches!(
            simulate_paths(&[bad], &corr, &[Usd::from_dollars(1)], 1, 1, 0),
            Err(PriceModelError::Stationarity(_))
        ));
    }

    #[test]
    fn correlated_innovations_recover_target_rho() {
        // Constant-variance specs make returns proportional to the correlated
        // normals, so their Pearson correlation estimates ρ directly.
        let specs = vec![GarchSpec::constant_variance(0.0, 1e-4); 2];
        let corr = CorrelationMatrix::from_rows(&[vec![1.0, 0.9], vec![0.9, 1.0]]).unwrap();
        let origins = vec![Usd::from_dollars(100), Usd::from_dollars(100)];
        let steps = 2_000;
        let paths = 50;
        let set = simulate_paths(&specs, &corr, &origins, steps, paths, 21).unwrap();
        let mut r1 = Vec::with_capacity(steps * paths);
        let mut r2 = Vec::with_capacity(steps * paths);
        for path in 0..paths {
            for step in 1..=steps {
                let a = set.price(path, step, 0).to_f64() / set.price(path, step - 1, 0).to_f64();
                let b = set.price(path, step, 1).to_f64() / set.price(path, step - 1, 1).to_f64();
                r1.push(a.ln());
                r2.push(b.ln());
            }
        }
        let m = estimate_correlation(&[r1, r2]).unwrap();
        let rho = m.entry(0, 1);
        assert!((0.85..=0.95).contains(&rho), "rho {rho}");

        // Identity correlation: cross-correlation stays near zero.
        let id = CorrelationMatrix::identity(2);
        let set = simulate_paths(&specs, &id, &origins, steps, paths, 22).unwrap();
        let mut r1 = Vec::new();
        let mut r2 = Vec::new();
        for path in 0..paths {
            for step in 1..=steps {
                r1.push((set.price(path, step, 0).to_f64()
                    / set.price(path, step - 1, 0).to_f64())
                .ln());
                r2.push((set.price(path, step, 1).to_f64()
                    / set.price(path, step - 1, 1).to_f64())
                .ln());
            }
        }
        let m = estimate_correlation(&[r1, r2]).unwrap();
        assert!(m.entry(0, 1).abs() < 0.05, "rho {}", m.entry(0, 1));
    }
}
