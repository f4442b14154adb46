//! cometsim command-line interface.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use cometsim_cli::config::{load_config, resolve_config, save_config, ConfigFile, SlippageSection, YUnits};
use cometsim_cli::report::{read_report_json, write_report_csv, write_report_json};
use cometsim_cli::run::run_simulation;
use cometsim_cli::snapshot::load_snapshot;
use cometsim_cli::CliError;
use cometsim_core::engine::EpsilonSpec;
use cometsim_core::fixed::Usd;
use cometsim_core::price::{fit_garch, log_returns};
use cometsim_core::slippage::{clean_samples, fit_slippage, SlippageForm, SlippageSample};
use cometsim_core::market::AssetId;

#[derive(Parser)]
#[command(
    name = "cometsim",
    version,
    about = "Deterministic Monte Carlo risk engine for Comet-style lending markets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    Log,
    Linear,
}

impl From<FormArg> for SlippageForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Log => SlippageForm::LogLinear,
            FormArg::Linear => SlippageForm::Linear,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Fit an ARMA-GARCH spec to a historical price series and store it in a
    /// config file.
    FitGarch {
        /// CSV with header `timestamp,asset,price`.
        #[arg(long)]
        prices: PathBuf,
        /// Asset symbol to fit.
        #[arg(long)]
        asset: String,
        /// Config file to create or update.
        #[arg(long)]
        out: PathBuf,
        /// ARCH order.
        #[arg(long, default_value_t = 1)]
        garch_p: usize,
        /// GARCH order.
        #[arg(long, default_value_t = 1)]
        garch_q: usize,
        #[arg(long, default_value_t = 0)]
        arma_p: usize,
        #[arg(long, default_value_t = 0)]
        arma_q: usize,
    },
    /// Fit a slippage curve from execution samples and store it in a config
    /// file.
    FitSlippage {
        /// JSON array of `{"sell": ..., "slippagePercent": ...}` rows.
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        asset: String,
        #[arg(long, value_enum)]
        form: FormArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full staged simulation and write a report.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        snapshot: PathBuf,
        /// Master seed; defaults to the config's `scenario.default_seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Number of independent simulation sets (seeds seed, seed+1, …).
        #[arg(long, default_value_t = 1)]
        sets: u32,
    },
    /// Estimate VaR with an explicit convergence tolerance; exits 3 when the
    /// staged protocol does not converge.
    Var {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Absolute USD (e.g. `2500`) or percent of the first round's p95
        /// (e.g. `1%`).
        #[arg(long)]
        epsilon: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-emit a stored report as normalized JSON or CSV tables.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        format: ReportFormat,
        /// Defaults to the report's directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

/// Worker count cap; affects throughput only, never results.
const THREADS_ENV: &str = "RISKSIM_THREADS";

fn init_thread_pool() {
    if let Ok(value) = std::env::var(THREADS_ENV) {
        match value.parse::<usize>() {
            Ok(n) if n >= 1 => {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .expect("thread pool not yet initialized");
            }
            _ => eprintln!("warning: ignoring invalid {THREADS_ENV}={value}"),
        }
    }
}

fn parse_epsilon(s: &str) -> Result<EpsilonSpec, CliError> {
    let bad = |message: String| CliError::Malformed {
        path: format!("--epsilon {s}"),
        message,
    };
    if let Some(pct) = s.strip_suffix('%') {
        let value: f64 = pct
            .trim()
            .parse()
            .map_err(|_| bad("not a percentage".to_string()))?;
        if !value.is_finite() || value < 0.0 {
            return Err(bad("percentage must be nonnegative".to_string()));
        }
        Ok(EpsilonSpec::RelativePctOfFirstRound(value))
    } else {
        let value: Usd = s.parse().map_err(|e| bad(format!("{e}")))?;
        if value.is_negative() {
            return Err(bad("must be nonnegative".to_string()));
        }
        Ok(EpsilonSpec::AbsoluteUsd(value))
    }
}

#[derive(Deserialize)]
struct PriceRow {
    timestamp: u64,
    asset: String,
    price: f64,
}

fn read_price_series(path: &Path, asset: &str) -> Result<Vec<f64>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut rows: Vec<(u64, f64)> = Vec::new();
    for row in reader.deserialize::<PriceRow>() {
        let row = row.map_err(|e| CliError::Malformed {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if row.asset == asset {
            rows.push((row.timestamp, row.price));
        }
    }
    if rows.is_empty() {
        return Err(CliError::Malformed {
            path: path.display().to_string(),
            message: format!("no rows for asset `{asset}`"),
        });
    }
    rows.sort_by_key(|(t, _)| *t);
    Ok(rows.into_iter().map(|(_, p)| p).collect())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleRow {
    sell: f64,
    #[serde(rename = "slippagePercent")]
    slippage_percent: f64,
}

fn load_or_new_config(path: &Path) -> Result<ConfigFile, CliError> {
    if path.exists() {
        load_config(path)
    } else {
        Ok(ConfigFile::empty())
    }
}

/// Inserts a set suffix before the extension: `report.json` → `report.set2.json`.
fn set_path(base: &Path, set: u32) -> PathBuf {
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".to_string());
    let ext = base
        .extension()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "json".to_string());
    base.with_file_name(format!("{stem}.set{set}.{ext}"))
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::FitGarch {
            prices,
            asset,
            out,
            garch_p,
            garch_q,
            arma_p,
            arma_q,
        } => {
            let series = read_price_series(&prices, &asset)?;
            let returns = log_returns(&series)?;
            let spec = fit_garch(&returns, garch_p, garch_q, arma_p, arma_q)?;
            println!(
                "fitted {asset}: alpha0={:.3e} alpha={:?} beta={:?} mu={:.3e} (persistence {:.4})",
                spec.alpha0,
                spec.alpha,
                spec.beta,
                spec.mu,
                spec.persistence()
            );
            let mut cfg = load_or_new_config(&out)?;
            cfg.garch.get_or_insert_with(Default::default).insert(asset, spec);
            save_config(&cfg, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::FitSlippage {
            samples,
            asset,
            form,
            out,
        } => {
            let bytes = std::fs::read(&samples).map_err(|e| CliError::io(&samples, e))?;
            let rows: Vec<SampleRow> =
                serde_json::from_slice(&bytes).map_err(|e| CliError::Malformed {
                    path: samples.display().to_string(),
                    message: e.to_string(),
                })?;
            let raw: Vec<SlippageSample> = rows
                .into_iter()
                .map(|r| SlippageSample {
                    sell_usd: r.sell,
                    slippage_pct: r.slippage_percent,
                })
                .collect();
            let cleaned = clean_samples(&raw);
            println!("{} samples, {} after cleaning", raw.len(), cleaned.len());
            // Decimals are irrelevant to the fit; the stored section carries
            // only the curve.
            let fit_asset = AssetId::new(asset.clone(), 18).map_err(CliError::Market)?;
            let model = fit_slippage(fit_asset, &cleaned, form.into())?;
            println!(
                "fitted {asset}: y = {:.6} + {:.6}·{}",
                model.intercept,
                model.coefficient,
                match model.form {
                    SlippageForm::LogLinear => "ln(sell)",
                    SlippageForm::Linear => "sell",
                }
            );
            let mut cfg = load_or_new_config(&out)?;
            cfg.slippage.get_or_insert_with(Default::default).insert(
                asset,
                SlippageSection {
                    form: model.form,
                    intercept: model.intercept,
                    coefficient: model.coefficient,
                    y_units: YUnits::Percent,
                },
            );
            save_config(&cfg, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Simulate {
            config,
            snapshot,
            seed,
            out,
            sets,
        } => {
            let cfg_file = load_config(&config)?;
            let loaded = resolve_config(&cfg_file)?;
            let snap = load_snapshot(&snapshot)?;
            let base_seed = seed.unwrap_or(loaded.default_seed);
            let sets = sets.max(1);
            for set in 0..sets {
                let set_seed = base_seed + set as u64;
                let report = run_simulation(&cfg_file, &loaded, &snap, set_seed, None)?;
                let path = if sets == 1 {
                    out.clone()
                } else {
                    set_path(&out, set)
                };
                write_report_json(&report, &path)?;
                println!(
                    "seed {set_seed}: VaR95 = {} over {} paths (converged: {}, rounds: {}) -> {}",
                    report.var.var95_usd,
                    report.paths_total,
                    report.var.converged,
                    report.var.rounds,
                    path.display()
                );
            }
            Ok(())
        }
        Command::Var {
            config,
            snapshot,
            seed,
            epsilon,
            out,
        } => {
            let eps = parse_epsilon(&epsilon)?;
            let cfg_file = load_config(&config)?;
            let loaded = resolve_config(&cfg_file)?;
            let snap = load_snapshot(&snapshot)?;
            let seed = seed.unwrap_or(loaded.default_seed);
            let report = run_simulation(&cfg_file, &loaded, &snap, seed, Some(eps))?;
            if let Some(path) = &out {
                write_report_json(&report, path)?;
            }
            println!(
                "VaR95 = {} (epsilon {}, rounds {}, samples {}, converged {})",
                report.var.var95_usd,
                report.var.epsilon_usd,
                report.var.rounds,
                report.var.n_samples,
                report.var.converged
            );
            if !report.var.converged {
                return Err(CliError::NonConvergence {
                    rounds: report.var.rounds,
                    n_samples: report.var.n_samples,
                    last_gap: report
                        .var
                        .gaps
                        .last()
                        .map(|g| g.to_string())
                        .unwrap_or_default(),
                    epsilon: report.var.epsilon_usd.to_string(),
                });
            }
            Ok(())
        }
        Command::Report {
            input,
            format,
            out_dir,
        } => {
            let report = read_report_json(&input)?;
            let dir = out_dir.unwrap_or_else(|| {
                input
                    .parent()
                    .map(Path::to_path_buf)
                    .unwrap_or_else(|| PathBuf::from("."))
            });
            match format {
                ReportFormat::Json => {
                    let path = dir.join(
                        input
                            .file_name()
                            .map(|n| format!("normalized_{}", n.to_string_lossy()))
                            .unwrap_or_else(|| "normalized_report.json".to_string()),
                    );
                    write_report_json(&report, &path)?;
                    println!("wrote {}", path.display());
                }
                ReportFormat::Csv => {
                    let files = write_report_csv(&report, &dir)?;
                    for f in files {
                        println!("wrote {}", f.display());
                    }
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
