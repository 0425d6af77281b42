use anyhow::{bail, Result};
use clap::{Parser, Subcommand};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use tanlock_cli::scenario::{load_scenario, Scenario};
use tanlock_cli::{oracle_divider, run_compare, run_lockrange, run_scenario, EXIT_ERROR};

/// Tanlock loop frequency synthesizer simulator.
#[derive(Parser)]
#[command(name = "tanlock", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trace.csv, phase_plane.csv, report.json.
    Run {
        /// Scenario file path.
        scenario: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the run length.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Run the TDTL vs NDTL jitter sweep from a variant-free template.
    Compare {
        /// Template scenario (must omit loop.variant).
        template: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of trials per SNR point.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Sweep the lock range over W for both variants.
    Lockrange {
        /// Template scenario (must omit loop.variant).
        template: PathBuf,
        #[arg(long)]
        w_min: f64,
        #[arg(long)]
        w_max: f64,
        #[arg(long)]
        w_steps: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Reference oracles for cross-checking.
    Oracle {
        #[command(subcommand)]
        oracle: Oracle,
    },
}

#[derive(Subcommand)]
enum Oracle {
    /// Print the dual-modulus carry sequence for ratio N + NUM/DEN.
    Divider {
        /// Integer division ratio N.
        #[arg(long)]
        n: u32,
        /// Fractional part as NUM/DEN.
        #[arg(long)]
        frac: String,
        /// Number of cycles to print.
        #[arg(long)]
        count: u64,
    },
}

fn load(path: &Path, seed: Option<u64>, samples: Option<usize>) -> Result<Scenario> {
    let mut scenario = load_scenario(path).map_err(|e| anyhow::anyhow!("{e}"))?;
    if let Some(seed) = seed {
        scenario.stimulus.seed = seed;
    }
    if let Some(samples) = samples {
        scenario.run.samples = samples;
        scenario.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
    }
    Ok(scenario)
}

fn parse_fraction(frac: &str) -> Result<(u32, u32)> {
    let Some((num, den)) = frac.split_once('/') else {
        bail!("fraction must be NUM/DEN, got `{frac}`");
    };
    Ok((num.trim().parse()?, den.trim().parse()?))
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run {
            scenario,
            out,
            seed,
            samples,
        } => {
            let scenario = load(&scenario, seed, samples)?;
            run_scenario(&scenario, &out)
        }
        Command::Compare {
            template,
            out,
            seed,
            trials,
        } => {
            let mut scenario = load(&template, seed, None)?;
            if let Some(trials) = trials {
                scenario.sweep.trials = trials;
                scenario.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
            }
            run_compare(&scenario, &out)
        }
        Command::Lockrange {
            template,
            w_min,
            w_max,
            w_steps,
            out,
        } => {
            let scenario = load(&template, None, None)?;
            run_lockrange(&scenario, w_min, w_max, w_steps, &out)
        }
        Command::Oracle {
            oracle: Oracle::Divider { n, frac, count },
        } => {
            let (num, den) = parse_fraction(&frac)?;
            let stdout = std::io::stdout();
            let mut out = BufWriter::new(stdout.lock());
            oracle_divider(n, num, den, count, &mut out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
