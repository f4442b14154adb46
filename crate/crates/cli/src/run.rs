//! Scenario assembly and the simulate/var pipeline.

use cometsim_core::engine::{estimate_lar, estimate_var, EpsilonSpec, Scenario, VarConfig};

use crate::config::{ConfigFile, LoadedConfig};
use crate::report::{fingerprint, EnvelopeRow, ReportFile};
use crate::snapshot::{build_market, SnapshotFile};
use crate::CliError;

/// Builds a validated scenario for one master seed.
pub fn build_scenario(
    loaded: &LoadedConfig,
    snap: &SnapshotFile,
    seed: u64,
) -> Result<Scenario, CliError> {
    let (market, prices) = build_market(loaded, snap)?;
    Ok(Scenario::new(
        market,
        prices,
        loaded.garch.clone(),
        &loaded.correlation,
        loaded.slippage.clone(),
        loaded.liquidator.clone(),
        loaded.horizon_steps,
        loaded.step_seconds,
        seed,
    )?)
}

/// Runs the staged VaR protocol plus LaR aggregation over the same sample
/// set and assembles the report file.
pub fn run_simulation(
    cfg_file: &ConfigFile,
    loaded: &LoadedConfig,
    snap: &SnapshotFile,
    seed: u64,
    epsilon_override: Option<EpsilonSpec>,
) -> Result<ReportFile, CliError> {
    let scenario = build_scenario(loaded, snap, seed)?;
    let mut var_cfg: VarConfig = loaded.var.clone();
    if let Some(eps) = epsilon_override {
        var_cfg.epsilon = eps;
    }
    let (var_report, outcomes) = estimate_var(&scenario, &var_cfg);
    let symbols = scenario.collateral_symbols();
    let lar = estimate_lar(&outcomes, &symbols)?;

    let mut envelope: Vec<EnvelopeRow> = symbols
        .iter()
        .map(|s| EnvelopeRow {
            asset: s.clone(),
            max_drop_pct: 0.0,
            max_rise_pct: 0.0,
        })
        .collect();
    let mut absorb_total = 0u64;
    for outcome in &outcomes {
        absorb_total += outcome.absorb_count as u64;
        for (row, (drop, rise)) in envelope
            .iter_mut()
            .zip(outcome.max_drop_pct.iter().zip(outcome.max_rise_pct.iter()))
        {
            row.max_drop_pct = row.max_drop_pct.max(*drop);
            row.max_rise_pct = row.max_rise_pct.max(*rise);
        }
    }

    Ok(ReportFile {
        schema_version: crate::report::SCHEMA_VERSION,
        fingerprint: fingerprint(cfg_file, snap, seed),
        master_seed: seed,
        horizon_steps: scenario.horizon_steps(),
        step_seconds: scenario.step_seconds(),
        assets: symbols,
        paths_total: outcomes.len(),
        absorb_count_total: absorb_total,
        var: var_report,
        lar,
        price_envelope: envelope,
    })
}
