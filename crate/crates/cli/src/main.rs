use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use taxsim_core::llm::GatewayMode;
use taxsim_core::sim::{sweep, write_outputs, SimConfig};
use taxsim_core::{run, TaxSystem};

#[derive(Parser)]
#[command(
    name = "taxsim",
    version,
    about = "Agent-based simulation of income tax systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its CSV/JSON outputs.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        system: Option<TaxSystem>,
        #[arg(long)]
        months: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several tax systems over several seeds and tabulate final outcomes.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        systems: Vec<TaxSystem>,
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run a configuration offline from a recorded exchange cache.
    Replay {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        cache: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output_dir(config: &SimConfig, out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn run_and_write(config: &SimConfig, dir: &Path) -> Result<()> {
    let result = run(config)?;
    write_outputs(&result, dir)?;
    let s = &result.summary;
    println!(
        "{} seed={} months={} gini={:.4} equality={:.4} productivity={:.2} social_outcome={:.2}",
        s.tax_system,
        s.seed,
        s.months,
        s.final_gini,
        s.final_equality,
        s.final_productivity,
        s.final_social_outcome
    );
    println!("wrote {}", dir.display());
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed,
            system,
            months,
            out,
        } => {
            let mut c = SimConfig::load(&config)?;
            if let Some(seed) = seed {
                c.seed = seed;
            }
            if let Some(system) = system {
                c.tax_system = system;
            }
            if let Some(months) = months {
                c.months = months;
            }
            let dir = output_dir(&c, out);
            run_and_write(&c, &dir)
        }
        Command::Compare {
            config,
            systems,
            seeds,
            out,
        } => {
            let c = SimConfig::load(&config)?;
            let table = sweep(&c, &systems, &seeds)?;
            let dir = output_dir(&c, out);
            table.write(&dir)?;
            println!(
                "{:<12} {:>6} {:>10} {:>10} {:>14}",
                "system", "seed", "gini", "equality", "social_outcome"
            );
            for r in &table.rows {
                println!(
                    "{:<12} {:>6} {:>10.4} {:>10.4} {:>14.2}",
                    r.system.as_str(),
                    r.seed,
                    r.final_gini,
                    r.final_equality,
                    r.final_social_outcome
                );
            }
            for (system, mean) in table.mean_social_outcome() {
                println!(
                    "{:<12} {:>6} {:>10} {:>10} {:>14.2}",
                    system.as_str(),
                    "mean",
                    "",
                    "",
                    mean
                );
            }
            println!("wrote {}", dir.display());
            Ok(())
        }
        Command::Replay { config, cache, out } => {
            let mut c = SimConfig::load(&config)?;
            if !c.uses_gateway() {
                bail!(
                    "{} makes no model calls; use `run` instead",
                    config.display()
                );
            }
            if !cache.exists() {
                bail!("cache file {} does not exist", cache.display());
            }
            c.gateway.mode = GatewayMode::Replay;
            c.gateway.cache_path = Some(cache);
            let dir = output_dir(&c, out);
            run_and_write(&c, &dir).context("replay failed")
        }
    }
}
