//! `fbmc`: prototype diagnostics, closed-form MSE curves and Monte-Carlo
//! BER campaigns for block FBMC/QAM, written as CSV plus a manifest.

mod commands;
mod output;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use output::OutputSet;
use settings::Settings;

/// Worker thread count for the Monte-Carlo stages.
const WORKERS_ENV: &str = "FBMC_WORKERS";

#[derive(Parser)]
#[command(name = "fbmc", version, about = "Block FBMC/QAM inverse-filter analysis and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prototype coefficients, G bands, R block norms, zeta and complexity.
    Filter(Common),
    /// Closed-form MSE breakdown and SINR over the SNR grid, both receivers.
    Analyze(Common),
    /// Monte-Carlo run of a preset (sync3band, async3band or link).
    Simulate(Common),
    /// Closed-form and instrumented multiplication counts.
    Complexity(Common),
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file (a manifest also works).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any key, e.g. `--set snr_db=10,20`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
    /// Suppress progress lines on standard error.
    #[arg(long)]
    quiet: bool,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    snr: Option<String>,
    #[arg(long)]
    receiver: Option<String>,
    #[arg(long)]
    equalizer: Option<String>,
    #[arg(long)]
    overlap_blocks: bool,
    #[arg(short = 'n', long = "subcarriers")]
    n: Option<usize>,
    #[arg(short = 'm', long = "symbols-per-block")]
    m: Option<usize>,
    #[arg(short = 'k', long = "overlap")]
    k: Option<usize>,
}

impl Common {
    /// Defaults, then the config file, then flags. Flags win.
    fn settings(&self) -> Result<Settings> {
        let mut s = Settings::default();
        if let Some(path) = &self.config {
            s.apply_file(path)?;
        }
        let mut pairs: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                pairs.push((k.to_string(), v));
            }
        };
        push("preset", self.preset.clone());
        push("eta", self.eta.map(|v| v.to_string()));
        push("seed", self.seed.map(|v| v.to_string()));
        push("blocks", self.blocks.map(|v| v.to_string()));
        push("snr_db", self.snr.clone());
        push("receiver", self.receiver.clone());
        push("equalizer", self.equalizer.clone());
        push("overlap_blocks", self.overlap_blocks.then(|| "true".into()));
        push("n", self.n.map(|v| v.to_string()));
        push("m", self.m.map(|v| v.to_string()));
        push("k", self.k.map(|v| v.to_string()));
        let mut errors = Vec::new();
        for item in &self.set {
            match item.split_once('=') {
                Some((k, v)) => pairs.push((k.to_string(), v.to_string())),
                None => errors.push(format!("--set {item}: expected KEY=VALUE")),
            }
        }
        for (k, v) in pairs {
            if let Err(e) = s.set(&k, &v) {
                errors.push(format!("{k}: {e}"));
            }
        }
        if !errors.is_empty() {
            bail!("{}", errors.join("\n"));
        }
        Ok(s)
    }
}

fn init_workers() -> Result<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v.parse().ok().filter(|n| *n > 0).with_context(|| format!("{WORKERS_ENV}={v} is not a positive integer"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let (name, common) = match &cli.command {
        Command::Filter(c) => ("filter", c),
        Command::Analyze(c) => ("analyze", c),
        Command::Simulate(c) => ("simulate", c),
        Command::Complexity(c) => ("complexity", c),
    };
    let settings = common.settings()?;
    if common.print_config {
        print!("{}", settings.render());
        return Ok(());
    }
    init_workers()?;
    let mut out = OutputSet::create(&common.out)?;
    match cli.command {
        Command::Filter(_) => commands::filter(&settings, &mut out)?,
        Command::Analyze(_) => commands::analyze(&settings, &mut out)?,
        Command::Simulate(_) => commands::simulate(&settings, &mut out, !common.quiet)?,
        Command::Complexity(_) => commands::complexity(&settings, &mut out)?,
    }
    for path in out.commit(name, &settings)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
