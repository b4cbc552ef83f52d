//! Monte Carlo sweep driver.
//!
//!   vcell-sim --config configs/default.toml --realizations 100 --output sweep.csv

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Parser;

use vcell::config::{load_config, SweepConfig};
use vcell::harness::{emit_csv, run_sweep};

#[derive(Debug, Parser)]
#[command(name = "vcell-sim", about = "Uplink virtual-cell Monte Carlo sweep")]
struct Args {
    /// TOML config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the number of realizations.
    #[arg(long)]
    realizations: Option<u64>,
    /// Override the RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output CSV path.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Override the interference distances, meters (comma separated).
    #[arg(long = "gamma-d", value_delimiter = ',')]
    gamma_d: Option<Vec<f64>>,
    /// Override the virtual-cell counts (comma separated).
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    /// Override the guaranteed bit rates, bits/s (comma separated).
    #[arg(long, value_delimiter = ',')]
    cgbr: Option<Vec<f64>>,
    /// Worker threads; rayon's default when omitted.
    #[arg(long)]
    threads: Option<usize>,
}

fn build_config(args: &Args) -> Result<SweepConfig> {
    let mut config = match &args.config {
        Some(path) => load_config(path).with_context(|| format!("loading {}", path.display()))?,
        None => SweepConfig::default(),
    };
    if let Some(n) = args.realizations {
        config.num_realizations = n;
    }
    if let Some(seed) = args.seed {
        config.scenario.seed = seed;
    }
    if let Some(out) = &args.output {
        config.output_path = out.clone();
    }
    if let Some(g) = &args.gamma_d {
        config.gamma_d_values = g.clone();
    }
    if let Some(m) = &args.m {
        config.m_values = m.clone();
    }
    if let Some(c) = &args.cgbr {
        config.cgbr_values = c.clone();
    }
    config.validate().context("invalid configuration")?;
    Ok(config)
}

fn run(args: Args) -> Result<()> {
    let config = build_config(&args)?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = args.threads {
            b = b.num_threads(t);
        }
        b.build().context("building thread pool")?
    };
    let started = Instant::now();
    let rows = pool.install(|| run_sweep(&config))?;
    emit_csv(&rows, config.scenario.seed, &config.output_path)?;
    eprintln!(
        "wrote {} rows ({} realizations, seed {}) to {} in {:.1?}",
        rows.len(),
        config.num_realizations,
        config.scenario.seed,
        config.output_path.display(),
        started.elapsed()
    );
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
