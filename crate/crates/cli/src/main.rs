use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use beamsim_core::config::{emit_config, parse_config};
use beamsim_core::geometry::{monte_carlo_sq_distance, Point2D, UncertaintyPdf};
use beamsim_core::sweep::run_sweep;
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Parser)]
#[command(name = "beamsim", version, about = "mmWave beam management and DRL scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every sweep cell of a config and write CSVs to the output directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Cells run concurrently (default: available cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Overrides `master_seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config and print its effective form.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Spot-check oracles.
    #[command(subcommand)]
    Oracle(Oracle),
}

#[derive(Subcommand)]
enum Oracle {
    /// Expected squared distance from `c` to a point uniform in the disk
    /// (mu, radius): closed form against Monte Carlo.
    McDistance {
        #[arg(long, allow_hyphen_values = true)]
        mu_x: f64,
        #[arg(long, allow_hyphen_values = true)]
        mu_y: f64,
        #[arg(long)]
        radius: f64,
        #[arg(long, allow_hyphen_values = true)]
        cx: f64,
        #[arg(long, allow_hyphen_values = true)]
        cy: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Run { config, out, jobs, seed } => {
            let mut spec = match parse_config(&config) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {}: {e}", config.display());
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            if let Some(seed) = seed {
                if seed > i64::MAX as u64 {
                    eprintln!("error: --seed must be below 2^63");
                    return ExitCode::from(EXIT_CONFIG);
                }
                spec = spec.with_master_seed(seed);
            }
            let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let cells = spec.values.len() * spec.scenarios.len();
            let started = Instant::now();
            match run_sweep(&spec, &out, jobs) {
                Ok(outcome) if outcome.failures.is_empty() => {
                    println!(
                        "{} cells written to {} in {:.1} s",
                        outcome.completed,
                        out.display(),
                        started.elapsed().as_secs_f64()
                    );
                    ExitCode::SUCCESS
                }
                Ok(outcome) => {
                    eprintln!("{} of {cells} cells failed:", outcome.failures.len());
                    for f in &outcome.failures {
                        eprintln!("  {}={} {}: {}", spec.variable, f.value, f.scenario.name(), f.error);
                    }
                    ExitCode::from(EXIT_RUNTIME)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_RUNTIME)
                }
            }
        }
        Command::Validate { config } => match parse_config(&config) {
            Ok(spec) => {
                print!("{}", emit_config(&spec.effective));
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {}: {e}", config.display());
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::Oracle(Oracle::McDistance { mu_x, mu_y, radius, cx, cy, samples, seed }) => {
            let pdf = match UncertaintyPdf::uniform_disk(Point2D::new(mu_x, mu_y), radius) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            if samples == 0 {
                eprintln!("error: --samples must be at least 1");
                return ExitCode::from(EXIT_CONFIG);
            }
            let c = Point2D::new(cx, cy);
            let exact = pdf.expected_sq_distance(c);
            let mc = monte_carlo_sq_distance(&pdf, c, samples, &mut ChaCha8Rng::seed_from_u64(seed));
            let rel = if exact == 0.0 { (mc - exact).abs() } else { (mc - exact).abs() / exact };
            println!("closed_form={exact} monte_carlo={mc} relative_error={rel:.3e}");
            ExitCode::SUCCESS
        }
    }
}
