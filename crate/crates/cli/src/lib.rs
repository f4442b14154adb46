//! Configuration and snapshot ingestion, scenario assembly, and report
//! emission for the cometsim engine.

pub mod config;
pub mod report;
pub mod run;
pub mod snapshot;

use thiserror::Error;

pub use config::{ConfigFile, LoadedConfig};
pub use report::ReportFile;
pub use snapshot::SnapshotFile;

/// One named validation problem; loaders collect every problem they can
/// find rather than stopping at the first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationIssue {
    /// Where the problem sits, e.g. `accounts[3].collateral.WETH`.
    pub at: String,
    pub message: String,
}

impl std::fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.at, self.message)
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Malformed { path: String, message: String },
    #[error("validation failed:\n{}", .0.iter().map(|i| format!("  - {i}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<ValidationIssue>),
    #[error(transparent)]
    Market(#[from] cometsim_core::market::MarketError),
    #[error(transparent)]
    PriceModel(#[from] cometsim_core::price::PriceModelError),
    #[error(transparent)]
    Slippage(#[from] cometsim_core::slippage::SlippageError),
    #[error(transparent)]
    Engine(#[from] cometsim_core::engine::EngineError),
    #[error("VaR did not converge: {rounds} rounds, {n_samples} samples, last gap {last_gap} vs epsilon {epsilon}")]
    NonConvergence {
        rounds: u32,
        n_samples: usize,
        last_gap: String,
        epsilon: String,
    },
}

impl CliError {
    /// Process exit code: 3 for non-convergence, 2 for any validation or
    /// input problem.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::NonConvergence { .. } => 3,
            _ => 2,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
