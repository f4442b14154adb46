//! Report schema, scenario fingerprinting, and JSON/CSV emission.
//!
//! Reports never embed wall-clock data, so identical inputs produce
//! byte-identical files regardless of worker count or machine.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use cometsim_core::engine::{LarReport, VarReport};

use crate::config::ConfigFile;
use crate::snapshot::SnapshotFile;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeRow {
    pub asset: String,
    /// Worst drop below the origin across all paths (0.19 = −19%).
    pub max_drop_pct: f64,
    /// Best rise above the origin across all paths.
    pub max_rise_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFile {
    pub schema_version: u32,
    /// Hash of (config, snapshot, seed); identical inputs map to identical
    /// fingerprints.
    pub fingerprint: String,
    pub master_seed: u64,
    pub horizon_steps: u32,
    pub step_seconds: u32,
    pub assets: Vec<String>,
    pub paths_total: usize,
    pub absorb_count_total: u64,
    pub var: VarReport,
    pub lar: LarReport,
    pub price_envelope: Vec<EnvelopeRow>,
}

/// SHA-256 over the canonical serialization of the validated inputs plus
/// the master seed. Canonical means the parsed structures re-serialized
/// (maps are ordered), so formatting differences in the source files do not
/// change the fingerprint.
pub fn fingerprint(cfg: &ConfigFile, snap: &SnapshotFile, seed: u64) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(cfg).expect("config serializes"));
    hasher.update([0u8]);
    hasher.update(serde_json::to_vec(snap).expect("snapshot serializes"));
    hasher.update([0u8]);
    hasher.update(seed.to_le_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

pub fn write_report_json(report: &ReportFile, path: &Path) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(report).expect("report serializes");
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn read_report_json(path: &Path) -> Result<ReportFile, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Writes the tabular views: `var.csv` (one summary row plus per-round
/// rows), `lar_percentiles.csv`, and one `lar_histogram_<column>.csv` per
/// LaR column. Returns the files written.
pub fn write_report_csv(report: &ReportFile, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut written = Vec::new();

    let var_path = out_dir.join("var.csv");
    {
        let mut w = csv::Writer::from_path(&var_path).map_err(csv_error(&var_path))?;
        w.write_record([
            "round",
            "n_samples",
            "p95_usd",
            "gap_usd",
            "var95_usd",
            "converged",
            "epsilon_usd",
        ])
        .map_err(csv_error(&var_path))?;
        let round_size = report.var.n_samples / report.var.rounds.max(1) as usize;
        for (i, p95) in report.var.percentile_per_round.iter().enumerate() {
            let gap = if i == 0 {
                String::new()
            } else {
                report.var.gaps[i - 1].to_string()
            };
            w.write_record([
                (i + 1).to_string(),
                (round_size * (i + 1)).to_string(),
                p95.to_string(),
                gap,
                report.var.var95_usd.to_string(),
                report.var.converged.to_string(),
                report.var.epsilon_usd.to_string(),
            ])
            .map_err(csv_error(&var_path))?;
        }
        w.flush().map_err(|e| CliError::io(&var_path, e))?;
    }
    written.push(var_path);

    let pct_path = out_dir.join("lar_percentiles.csv");
    {
        let mut w = csv::Writer::from_path(&pct_path).map_err(csv_error(&pct_path))?;
        w.write_record(["column", "p50_usd", "p90_usd", "p95_usd", "p99_usd"])
            .map_err(csv_error(&pct_path))?;
        let mut columns = vec![&report.lar.total];
        columns.extend(report.lar.per_asset.iter());
        for col in columns {
            w.write_record([
                col.name.clone(),
                col.percentiles.p50.to_string(),
                col.percentiles.p90.to_string(),
                col.percentiles.p95.to_string(),
                col.percentiles.p99.to_string(),
            ])
            .map_err(csv_error(&pct_path))?;
        }
        w.flush().map_err(|e| CliError::io(&pct_path, e))?;
    }
    written.push(pct_path);

    let mut columns = vec![&report.lar.total];
    columns.extend(report.lar.per_asset.iter());
    for col in columns {
        let hist_path = out_dir.join(format!("lar_histogram_{}.csv", col.name));
        let mut w = csv::Writer::from_path(&hist_path).map_err(csv_error(&hist_path))?;
        w.write_record(["bin", "lower_usd", "upper_usd", "count"])
            .map_err(csv_error(&hist_path))?;
        for (k, count) in col.histogram.counts.iter().enumerate() {
            w.write_record([
                k.to_string(),
                col.histogram.lower_edge(k).to_string(),
                col.histogram.upper_edge(k).to_string(),
                count.to_string(),
            ])
            .map_err(csv_error(&hist_path))?;
        }
        w.flush().map_err(|e| CliError::io(&hist_path, e))?;
        written.push(hist_path);
    }
    Ok(written)
}
