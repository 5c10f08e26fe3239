use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use transport_filter::experiment::{
    compare_oversampling, oracle_check, run_experiment, ExperimentConfig, OracleCheckOptions,
};
use transport_filter::Error;

/// Number of worker threads; unset means one per core.
const THREADS_VAR: &str = "TRANSPORT_FILTER_THREADS";

#[derive(Parser)]
#[command(version, about = "Transport-map coupling filter experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its CSV and metadata outputs.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Posterior snapshot stride in steps (0 disables snapshots).
        #[arg(long)]
        snapshot_stride: Option<usize>,
    },
    /// Check the filter against the Gaussian conditioning and Kalman oracles.
    OracleCheck {
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
        #[arg(long, default_value_t = 1)]
        map_order: u32,
    },
    /// Compare posterior spread without and with likelihood oversampling.
    CompareOversampling {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig(_) | Error::InvalidArgument(_) | Error::Json(_) => 1,
        _ => 2,
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("{THREADS_VAR} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

fn execute(command: Command) -> Result<bool, Error> {
    match command {
        Command::Run {
            config,
            out,
            snapshot_stride,
        } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if out.is_some() {
                cfg.output_dir = out;
            }
            let dir = cfg.output_dir.get_or_insert_with(|| PathBuf::from("results")).clone();
            if let Some(k) = snapshot_stride {
                cfg.snapshot_stride = k;
            }
            let report = run_experiment(&cfg)?;
            println!(
                "completed {} steps in {:.2} s; outputs in {}",
                report.steps.len(),
                report.total_wall_time,
                dir.display()
            );
            Ok(true)
        }
        Command::OracleCheck { tol_scale, map_order } => {
            let report = oracle_check(&OracleCheckOptions {
                tol_scale,
                map_order,
                ..OracleCheckOptions::default()
            })?;
            println!("{report}");
            Ok(report.passed())
        }
        Command::CompareOversampling { config, seeds } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let report = compare_oversampling(&cfg, &seeds)?;
            println!("{report}");
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = configure_threads().and_then(|()| execute(cli.command));
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
