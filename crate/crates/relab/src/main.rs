use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use relab::config::{ConfigError, Experiment, ExperimentConfig, OutputFormat};
use relab::report::{CsvRow, Report};
use relab::runner;

const EXIT_CONFIG: u8 = 1;
const EXIT_IO: u8 = 2;

#[derive(Parser)]
#[command(name = "relab", version, about = "Restricted-eigenvalue certification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config; flags below override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<CliFormat>,
    /// Worker count; 0 means one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Certify RE/RIP constants of the covariance and sampled designs.
    Recert,
    /// Verify the two-sided design bound on sampled cone vectors.
    ReVerify,
    /// Run sparse recovery trials (estimator taken from the config).
    Recover,
    /// Estimate set widths against their theoretical ceilings.
    Width,
    /// Phase-map sweep over an (n, p, s, rho) grid.
    Sweep,
    /// Gaussian-design two-sided check with margin statistics.
    GaussCheck,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, (u8, String)> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| (EXIT_IO, format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text).map_err(|e| (EXIT_CONFIG, e.to_string()))?
        }
        None => ExperimentConfig::default(),
    };

    cfg.experiment = match cli.command {
        Command::Recert => Experiment::Recert,
        Command::ReVerify => Experiment::ReVerify,
        Command::Recover => match cfg.experiment {
            Experiment::RecoverDs => Experiment::RecoverDs,
            _ => Experiment::RecoverLasso,
        },
        Command::Width => Experiment::Width,
        Command::Sweep => Experiment::Sweep,
        Command::GaussCheck => Experiment::GaussDesign,
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.trials = trials;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    if let Some(format) = cli.format {
        cfg.format = match format {
            CliFormat::Csv => OutputFormat::Csv,
            CliFormat::Json => OutputFormat::Json,
        };
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    cfg.sync_theory();
    cfg.validate().map_err(|e| (EXIT_CONFIG, e.to_string()))?;
    Ok(cfg)
}

fn emit<R: Serialize + CsvRow>(
    cfg: &ExperimentConfig,
    report: &Report<R>,
) -> Result<(), (u8, String)> {
    let io_err = |e: std::io::Error| (EXIT_IO, format!("write failed: {e}"));
    let mut sink: Box<dyn Write> = match &cfg.out {
        Some(path) => Box::new(fs::File::create(path).map_err(io_err)?),
        None => Box::new(std::io::stdout()),
    };
    match cfg.format {
        OutputFormat::Csv => report.write_csv(&mut sink).map_err(io_err),
        OutputFormat::Json => report.write_json(&mut sink).map_err(io_err),
    }
}

fn run(cfg: &ExperimentConfig) -> Result<(), (u8, String)> {
    let cfg_err = |e: ConfigError| (EXIT_CONFIG, e.to_string());
    match cfg.experiment {
        Experiment::Recert => emit(cfg, &runner::run_recert(cfg).map_err(cfg_err)?),
        Experiment::ReVerify => emit(cfg, &runner::run_re_verification(cfg).map_err(cfg_err)?),
        Experiment::RecoverLasso | Experiment::RecoverDs => {
            emit(cfg, &runner::run_recovery(cfg).map_err(cfg_err)?)
        }
        Experiment::Width => emit(cfg, &runner::run_width(cfg).map_err(cfg_err)?),
        Experiment::Sweep => emit(cfg, &runner::run_sweep(cfg).map_err(cfg_err)?),
        Experiment::GaussDesign => emit(cfg, &runner::run_gauss_check(cfg).map_err(cfg_err)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(&cli) {
        Ok(cfg) => cfg,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(code);
        }
    };
    match run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
