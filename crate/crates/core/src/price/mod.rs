//! Price process modeling: ARMA-GARCH fitting, correlated innovation
//! structure, and deterministic multi-asset path simulation.

pub mod corr;
pub mod garch;
pub mod linalg;
pub mod paths;
pub mod rng;

pub use corr::{estimate_correlation, psd_factor, CholFactor, CorrelationMatrix};
pub use garch::{fit_garch, garch_step, GarchSpec, GarchState};
pub use paths::{
    log_returns, simulate_paths, CounterInnovations, InnovationSource, PathGenerator,
    PricePathSet, DEFAULT_STEP_SECONDS,
};
pub use rng::{PathStream, StreamKey, DEFAULT_MASTER_SEED};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PriceModelError {
    #[error("price series contains nonpositive values")]
    NonPositivePrice,
    #[error("series too short: need at least {needed} observations, got {got}")]
    SeriesTooShort { needed: usize, got: usize },
    #[error("series {index} has zero variance")]
    ZeroVariance { index: usize },
    #[error("return series is constant")]
    ConstantSeries,
    #[error("invalid GARCH specification: {0}")]
    InvalidSpec(String),
    #[error("specification violates stationarity: persistence {0} >= 1")]
    Stationarity(f64),
    #[error("correlation matrix is not symmetric")]
    NotSymmetric,
    #[error("invalid correlation matrix: {0}")]
    InvalidCorrelation(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("GARCH fit did not converge after {iterations} iterations")]
    FitNonConvergence {
        best: Box<GarchSpec>,
        iterations: u32,
    },
}
