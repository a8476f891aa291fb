//! parex command line: config-driven wideband R/L extraction runs.

mod config;
mod output;
mod report;
mod run;

use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] parex::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::Core(e) => e.category(),
            CliError::Io(_) => "Io",
        }
    }
}

#[derive(Parser)]
#[command(name = "parex", version, about = "Wideband parasitic R/L extraction for triangulated conductors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an extraction described by a TOML config file.
    Extract {
        /// Path to the run configuration.
        config: Option<PathBuf>,
        /// Override the frequency list (comma-separated Hz, ascending).
        #[arg(long)]
        freq: Option<String>,
        /// Override the solver backend (dense | pfft).
        #[arg(long)]
        backend: Option<String>,
        /// Override the GMRES tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Worker threads (0 = automatic).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Cross-check against a reference formulation (mna).
        #[arg(long)]
        oracle: Option<String>,
        /// Print the fully commented default configuration and exit.
        #[arg(long)]
        print_defaults: bool,
    },
}

fn main() {
    let cli = Cli::parse();
    match cli.command {
        Command::Extract {
            config,
            freq,
            backend,
            tol,
            threads,
            oracle,
            print_defaults,
        } => {
            if print_defaults {
                print!("{}", config::DEFAULT_CONFIG);
                return;
            }
            let outcome = extract_command(config, freq, backend, tol, threads, oracle);
            match outcome {
                Ok(summary) => {
                    println!(
                        "done: {} frequency points ({} failed), outputs in {}",
                        summary.points,
                        summary.failed_points,
                        summary.output_dir.display()
                    );
                    if summary.failed_points > 0 {
                        std::process::exit(3);
                    }
                }
                Err(e) => {
                    eprintln!(
                        "{}",
                        serde_json::json!({
                            "error": e.category(),
                            "message": e.to_string(),
                        })
                    );
                    std::process::exit(1);
                }
            }
        }
    }
}

fn extract_command(
    config_path: Option<PathBuf>,
    freq: Option<String>,
    backend: Option<String>,
    tol: Option<f64>,
    threads: usize,
    oracle: Option<String>,
) -> Result<run::RunSummary, CliError> {
    let Some(config_path) = config_path else {
        return Err(CliError::Config(
            "missing config path (or use --print-defaults)".into(),
        ));
    };
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let mut cfg = config::load(&config_path)?;
    if let Some(freq) = freq {
        let list: Result<Vec<f64>, _> = freq
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect();
        let list =
            list.map_err(|e| CliError::Config(format!("--freq: {e}")))?;
        cfg.frequency = config::FrequencySection {
            list: Some(list),
            ..Default::default()
        };
    }
    if let Some(backend) = backend {
        cfg.solver.backend = backend;
    }
    if let Some(tol) = tol {
        cfg.solver.tol = tol;
    }
    let config_dir = config_path
        .parent()
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| PathBuf::from("."));
    let plan = cfg.resolve(&config_dir)?;
    run::run(&plan, oracle.as_deref())
}
