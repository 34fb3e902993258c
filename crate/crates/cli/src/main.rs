use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sublaw_cli::config::ConfigError;
use sublaw_cli::experiments::{self, Status};
use sublaw_cli::report::encode;
use sublaw_cli::{load_config, ExperimentConfig, Format};

const EXIT_CONFIG: u8 = 1;
const EXIT_VIOLATED: u8 = 3;
const EXIT_IO: u8 = 4;

/// Sublinear-expectation experiments driven by one config file.
///
/// Exit codes: 0 all rows pass, 1 invalid config, 2 hypothesis unmet,
/// 3 inequality violated or nondeterministic output, 4 I/O error.
#[derive(Parser)]
#[command(name = "sublaw", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write its report.
    Run(Args),
    /// Run twice and check the encoded reports are byte-identical.
    Verify(Args),
    /// Exact upper / lower expectation and Choquet integrals of `[oracle]`.
    Oracle(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Replaces the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; defaults to `[output] path`, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn load(args: &Args) -> Result<ExperimentConfig, u8> {
    let mut cfg = load_config(&args.config).map_err(|e| {
        eprintln!("sublaw: {e}");
        match e {
            ConfigError::Io { .. } => EXIT_IO,
            _ => EXIT_CONFIG,
        }
    })?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(f) = args.format {
        cfg.output.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    if let Some(out) = &args.out {
        cfg.output.path = Some(out.clone());
    }
    Ok(cfg)
}

fn write(bytes: &[u8], path: Option<&Path>) -> Result<(), u8> {
    let res = match path {
        Some(p) => std::fs::write(p, bytes),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush())
        }
    };
    res.map_err(|e| {
        eprintln!("sublaw: cannot write report: {e}");
        EXIT_IO
    })
}

fn produce(cfg: &ExperimentConfig, oracle: bool) -> Result<(Vec<u8>, Status), u8> {
    let (rows, status) = if oracle {
        let rows = experiments::oracle(cfg).map_err(|e| {
            eprintln!("sublaw: {e}");
            EXIT_CONFIG
        })?;
        (rows, Status::Pass)
    } else {
        let out = experiments::run(cfg).map_err(|e| {
            eprintln!("sublaw: {e}");
            EXIT_CONFIG
        })?;
        (out.rows, out.status)
    };
    let bytes = encode(&rows, cfg.output.format).map_err(|e| {
        eprintln!("sublaw: {e}");
        EXIT_IO
    })?;
    Ok((bytes, status))
}

fn status_code(status: &Status) -> u8 {
    if let Status::HypothesisUnmet(c) = status {
        eprintln!("sublaw: hypothesis not met: {c}");
    }
    status.exit_code() as u8
}

fn main_inner(cli: Cli) -> Result<u8, u8> {
    match cli.command {
        Command::Run(args) => {
            let cfg = load(&args)?;
            let (bytes, status) = produce(&cfg, false)?;
            write(&bytes, cfg.output.path.as_deref())?;
            Ok(status_code(&status))
        }
        Command::Oracle(args) => {
            let cfg = load(&args)?;
            let (bytes, _) = produce(&cfg, true)?;
            write(&bytes, cfg.output.path.as_deref())?;
            Ok(0)
        }
        Command::Verify(args) => {
            let cfg = load(&args)?;
            let (first, status) = produce(&cfg, false)?;
            let (second, _) = produce(&cfg, false)?;
            write(&first, cfg.output.path.as_deref())?;
            if first != second {
                eprintln!("sublaw: reruns with seed {} differ", cfg.seed);
                return Ok(EXIT_VIOLATED);
            }
            eprintln!("sublaw: {} bytes reproduced", first.len());
            Ok(status_code(&status))
        }
    }
}

fn main() -> ExitCode {
    let code = main_inner(Cli::parse()).unwrap_or_else(|c| c);
    ExitCode::from(code)
}
