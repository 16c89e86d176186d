use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use dcmg_core::sim::{self, smooth_trace, ScenarioConfig};
use dcmg_core::Micros;
use dcmg::{load_scenario, write_q_dump, write_trace};

/// DC microgrid secondary control under jamming, with power-talk reconfiguration.
#[derive(Parser)]
#[command(name = "dcmg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write the CSV trace.
    Run {
        /// Scenario JSON file, or one of: baseline, jam-no-defense, jam-with-defense.
        #[arg(long)]
        scenario: String,
        /// Overrides the scenario's run-time seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// First-order smoothing time constant in seconds, for plotting.
        #[arg(long)]
        smooth: Option<f64>,
    },
    /// Monte Carlo bit-error rate of the power-talk detector.
    Ber {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        sigma: f64,
        /// ADC samples per bit.
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Check a scenario and list every violated invariant.
    Validate {
        #[arg(long)]
        scenario: String,
    },
    /// Print the connectivity matrices decoded in the PTCh active at (or last before) a time.
    DumpQ {
        #[arg(long)]
        scenario: String,
        /// Time in seconds.
        #[arg(long)]
        at: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn scenario(which: &str, seed: Option<u64>) -> Result<ScenarioConfig> {
    let mut cfg = load_scenario(which)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { scenario: which, seed, out, smooth } => {
            let cfg = scenario(&which, seed)?;
            let result = sim::run(&cfg)?;
            let trace = match smooth {
                Some(tau) => smooth_trace(&result.trace, tau),
                None => result.trace,
            };
            write_trace(output(out.as_ref())?, &trace, cfg.unit_count())?;
        }
        Command::Ber { gamma, sigma, samples, trials, seed } => {
            if samples == 0 || trials == 0 {
                bail!("--samples and --trials must be positive");
            }
            let r = sim::ber_tool(gamma, sigma, samples, trials, seed);
            println!("gamma,sigma,samples,trials,errors,empirical,analytic,tolerance,agree");
            println!(
                "{},{},{},{},{},{:.6e},{:.6e},{:.6e},{}",
                r.gamma, r.sigma, r.n_samples, r.trials, r.errors, r.empirical, r.analytic, r.tolerance, r.agree
            );
        }
        Command::Validate { scenario: which } => {
            let cfg = load_scenario(&which)?;
            let violations = sim::validate(&cfg);
            if violations.is_empty() {
                println!("{}: ok", cfg.name);
            } else {
                for v in &violations {
                    eprintln!("{v}");
                }
                return Ok(ExitCode::from(2));
            }
        }
        Command::DumpQ { scenario: which, at, seed, out } => {
            let cfg = scenario(&which, seed)?;
            let at = Micros::from_secs(at).context("--at must be a non-negative time on the microsecond grid")?;
            let result = sim::run(&cfg)?;
            let Some(report) = result.ptchs.iter().rev().find(|p| p.start <= at) else {
                bail!("no PTCh started at or before t = {at} s");
            };
            write_q_dump(output(out.as_ref())?, report)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
