use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::info;

use fluxlab::error::EXIT_CONFIG;
use fluxlab::{output, parse_config, run, CliError, Command};

const DEFAULT_OUT: &str = "fluxlab-out";

/// Information-flux studies of open quantum systems.
#[derive(Debug, Parser)]
#[command(name = "fluxlab", version, about)]
struct Args {
    /// Study to run.
    #[arg(value_enum)]
    command: Command,

    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,

    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Also render SVG charts from the CSV tables.
    #[arg(long)]
    svg: bool,

    /// Worker threads (default: logical processors).
    #[arg(long, env = "FLUXLAB_JOBS")]
    jobs: Option<usize>,
}

fn execute(args: &Args) -> Result<Vec<PathBuf>, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::config("", format!("cannot read {}: {e}", args.config.display())))?;
    let config = parse_config(&text, Some(args.command))?;
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(CliError::config("--jobs", "must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::config("--jobs", e.to_string()))?;
    }
    let dir = args
        .out
        .clone()
        .or(config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let artifacts = run::run(&fluxlab::RunConfig {
        emit_svg: config.emit_svg || args.svg,
        ..config
    })?;
    let written = output::write_all(&dir, args.command.name(), &text, &artifacts)?;
    info!("wrote {} files to {}", written.len(), dir.display());
    Ok(written)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(&args) {
        Ok(written) => {
            for path in written {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("fluxlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
