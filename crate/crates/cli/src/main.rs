use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use easmh_cli::{compare_runs, parse_config, pipeline, CliError, Reuse, RunConfig};

/// Active-subspace Metropolis–Hastings experiments.
///
/// Set EASMH_THREADS to fix the number of threads used for nested density
/// evaluations. Results do not depend on it.
#[derive(Debug, Parser)]
#[command(name = "easmh", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a full experiment: subspace, sampling, diagnostics.
    Run {
        #[arg(short, long)]
        config: PathBuf,
        /// Reuse a saved subspace instead of constructing one.
        #[arg(long)]
        subspace: Option<PathBuf>,
        /// Reuse saved observations (lorenz96).
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(short, long)]
        output_dir: Option<PathBuf>,
    },
    /// Generate ground truth and observations for a lorenz96 config.
    GenData {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        output_dir: Option<PathBuf>,
    },
    /// Construct and save the subspace only.
    BuildSubspace {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(short, long)]
        output_dir: Option<PathBuf>,
    },
    /// Tabulate autocorrelation, acceptance and occupancy across runs.
    Compare {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long, default_value_t = 50)]
        max_lag: usize,
        #[arg(short, long, default_value = "comparison")]
        output_dir: PathBuf,
    },
}

fn load(path: &PathBuf, output_dir: Option<PathBuf>) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Usage(format!("{}: {source}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    Ok(cfg)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("EASMH_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("EASMH_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Run {
            config,
            subspace,
            data,
            output_dir,
        } => {
            let cfg = load(&config, output_dir)?;
            let report = easmh_cli::run_experiment(&cfg, &Reuse { subspace, data })?;
            println!(
                "{} {}: acceptance {:.3}, {} target evaluations, artifacts in {}",
                cfg.experiment.as_str(),
                cfg.sampler.mode.as_str(),
                report.chain.acceptance_rate(),
                report.total_evaluations(),
                cfg.output_dir.display()
            );
        }
        Command::GenData { config, output_dir } => {
            let cfg = load(&config, output_dir)?;
            let data = pipeline::generate_data_files(&cfg)?;
            println!("{} observations written to {}", data.n_observations(), cfg.output_dir.display());
        }
        Command::BuildSubspace {
            config,
            data,
            output_dir,
        } => {
            let cfg = load(&config, output_dir)?;
            let s = pipeline::build_subspace_file(&cfg, data.as_deref())?;
            println!(
                "{} subspace: active dimension {} of {}, written to {}",
                s.method(),
                s.active_dim(),
                s.ambient_dim(),
                cfg.output_dir.display()
            );
        }
        Command::Compare {
            runs,
            max_lag,
            output_dir,
        } => {
            let c = compare_runs(&runs, max_lag, &output_dir)?;
            for r in &c.runs {
                println!("{}: {} acceptance {:.3}", r.label, r.mode, r.acceptance_rate);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
