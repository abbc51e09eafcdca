//! `ccd` — batch driver for counterfactual causal discovery on driving
//! scenes: ingest recordings, generate synthetic corpora, run discovery,
//! evaluate against ground truth, and sweep the reward threshold.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ccd_core::cd::Variant;

mod commands;
mod config;

use config::RunConfig;

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e| format!("{e}"))
}

#[derive(Parser)]
#[command(name = "ccd", version, about = "Counterfactual causal discovery between driving agents")]
struct Cli {
    /// Declarative run configuration (TOML); flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Causal link test: reward, agency or hybrid.
    #[arg(long, global = true, value_parser = parse_variant)]
    variant: Option<Variant>,

    /// Reward-advantage acceptance threshold.
    #[arg(long, global = true)]
    lambda: Option<f64>,

    /// Base RNG seed for generation and baselines.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Scene-level worker count; does not affect outputs.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Write per-candidate four-world trace CSVs next to the reports.
    #[arg(long, global = true)]
    dump_traces: bool,

    /// Write each scene's extracted decisions as JSON next to the reports.
    #[arg(long, global = true)]
    dump_decisions: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse trajectory CSVs and extract causal convoy scenes.
    Ingest {
        /// Directory of recording CSVs (overrides config).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output scene directory (overrides config).
        #[arg(long)]
        scenes: Option<PathBuf>,
    },
    /// Generate seeded synthetic convoy scenes.
    Synth {
        /// Number of scenes (overrides config).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        scenes: Option<PathBuf>,
    },
    /// Run causal discovery per scene and write reports.
    Discover {
        #[arg(long)]
        scenes: Option<PathBuf>,
        /// Report output directory (overrides config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score existing reports against ground truth.
    Evaluate {
        #[arg(long)]
        scenes: Option<PathBuf>,
        /// Report directory to score (overrides config).
        #[arg(long)]
        reports: Option<PathBuf>,
        /// Metrics CSV path (overrides config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full variant x lambda grid and write the metrics table.
    Sweep {
        #[arg(long)]
        scenes: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn resolve(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(v) = cli.variant {
        cfg.discover.variant = v;
    }
    if let Some(l) = cli.lambda {
        cfg.discover.lambda = l;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w.max(1);
    }
    if cli.dump_traces {
        cfg.discover.dump_traces = true;
    }
    if cli.dump_decisions {
        cfg.discover.dump_decisions = true;
    }
    match &cli.command {
        Command::Ingest { input, scenes } => {
            if let Some(p) = input {
                cfg.paths.input_dir = p.clone();
            }
            if let Some(p) = scenes {
                cfg.paths.scene_dir = p.clone();
            }
        }
        Command::Synth { scenes, .. } => {
            if let Some(p) = scenes {
                cfg.paths.scene_dir = p.clone();
            }
        }
        Command::Discover { scenes, out } => {
            if let Some(p) = scenes {
                cfg.paths.scene_dir = p.clone();
            }
            if let Some(p) = out {
                cfg.paths.report_dir = p.clone();
            }
        }
        Command::Evaluate { scenes, reports, out } => {
            if let Some(p) = scenes {
                cfg.paths.scene_dir = p.clone();
            }
            if let Some(p) = reports {
                cfg.paths.report_dir = p.clone();
            }
            if let Some(p) = out {
                cfg.paths.metrics_file = p.clone();
            }
        }
        Command::Sweep { scenes, out } => {
            if let Some(p) = scenes {
                cfg.paths.scene_dir = p.clone();
            }
            if let Some(p) = out {
                cfg.paths.metrics_file = p.clone();
            }
        }
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    let cfg = resolve(cli)?;
    match &cli.command {
        Command::Ingest { .. } => commands::cmd_ingest(&cfg),
        Command::Synth { n, .. } => commands::cmd_synth(&cfg, *n),
        Command::Discover { .. } => commands::cmd_discover(&cfg),
        Command::Evaluate { .. } => commands::cmd_evaluate(&cfg),
        Command::Sweep { .. } => commands::cmd_sweep(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
