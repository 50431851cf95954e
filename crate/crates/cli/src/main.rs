//! The `mixhit` command: analyze a kernel file, build zoo chains, run the
//! experiment suites from a config, and re-emit reports from a run
//! directory.
//!
//! Exit codes: 0 success, 2 configuration/input error, 3 inequality-audit
//! failure. `MIXHIT_THREADS` overrides the worker pool size.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use mixhit_cli::config::{load_kernel, Config};
use mixhit_cli::experiments::{analyze_kernel, run_experiments_with};
use mixhit_cli::report::{emit_experiment, load_results, ReportFormat};
use mixhit_core::zoo::{build_zoo_chain, default_zoo_specs, ZooSpec};

#[derive(Parser)]
#[command(
    name = "mixhit",
    version,
    about = "Markov chain mixing/hitting time laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze one kernel file (JSON or whitespace text format).
    Analyze {
        kernel_file: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        alpha: f64,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
    },
    /// List or build chains from the zoo.
    Zoo {
        #[command(subcommand)]
        action: ZooAction,
    },
    /// Run the experiment suites from a config file.
    Run {
        config: PathBuf,
        /// Overrides [seeds].master from the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Also dump one raw trajectory per sampler configuration as
        /// (t, state) CSV.
        #[arg(long)]
        dump_trajectories: bool,
    },
    /// Re-emit reports from a completed run directory.
    Report {
        run_dir: PathBuf,
        #[arg(long, value_enum)]
        format: ReportFormat,
    },
}

#[derive(Subcommand)]
enum ZooAction {
    /// Print the default zoo with sizes and aperiodicity flags.
    List,
    /// Build a chain from a spec string (e.g. "cycle(8)") and print its
    /// kernel as JSON.
    Build {
        spec: String,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const EXIT_CONFIG_ERROR: u8 = 2;
const EXIT_AUDIT_FAILURE: u8 = 3;

fn main() -> ExitCode {
    // Die quietly when a pipe closes early (e.g. `mixhit zoo list | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("MIXHIT_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                {
                    eprintln!("warning: could not size the thread pool: {e}");
                }
            }
            _ => {
                eprintln!("error: MIXHIT_THREADS must be a positive integer, got `{threads}`");
                return ExitCode::from(EXIT_CONFIG_ERROR);
            }
        }
    }
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_CONFIG_ERROR)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Analyze {
            kernel_file,
            alpha,
            epsilon,
        } => {
            let kernel = load_kernel(&kernel_file)?;
            let report = analyze_kernel(&kernel, alpha, epsilon)?;
            if !report.reversible {
                eprintln!(
                    "warning: kernel is not reversible; the equivalence theory is stated for reversible chains"
                );
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Zoo { action } => match action {
            ZooAction::List => {
                for spec in default_zoo_specs() {
                    let chain = build_zoo_chain(&spec).map_err(|e| anyhow::anyhow!("{e}"))?;
                    println!(
                        "{:<26} n={:<3} {}",
                        chain.id,
                        chain.kernel.n_states(),
                        if chain.aperiodic {
                            "aperiodic"
                        } else {
                            "periodic"
                        }
                    );
                }
                Ok(ExitCode::SUCCESS)
            }
            ZooAction::Build { spec, out } => {
                let parsed: ZooSpec = spec.parse().map_err(|e| anyhow::anyhow!("{e}"))?;
                let chain = build_zoo_chain(&parsed).map_err(|e| anyhow::anyhow!("{e}"))?;
                let json = chain.kernel.to_json();
                match out {
                    Some(path) => std::fs::write(&path, json)
                        .with_context(|| format!("writing {}", path.display()))?,
                    None => println!("{json}"),
                }
                Ok(ExitCode::SUCCESS)
            }
        },
        Command::Run {
            config,
            seed,
            out,
            dump_trajectories,
        } => {
            let config_bytes = std::fs::read(&config)
                .with_context(|| format!("reading config {}", config.display()))?;
            let parsed = Config::from_toml(std::str::from_utf8(&config_bytes)?)?;
            let seed = seed.unwrap_or(parsed.seeds.master);
            let outcome =
                run_experiments_with(&parsed, &config_bytes, seed, &out, dump_trajectories)?;
            for status in &outcome.manifest.experiments {
                println!("{:<22} {}", status.name, status.status);
            }
            if outcome.audit_failed {
                eprintln!("inequality audit found violations");
                return Ok(ExitCode::from(EXIT_AUDIT_FAILURE));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { run_dir, format } => {
            let results = load_results(&run_dir)?;
            for result in &results {
                for file in emit_experiment(&run_dir, result, format)? {
                    println!("{file}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
