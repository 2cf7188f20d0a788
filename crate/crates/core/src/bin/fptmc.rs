use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fptmc::config::{parse_config, EngineChoice, ExperimentConfig, Overrides};
use fptmc::report::run_experiment;

const CONFIG_ERROR: u8 = 1;
const RUNTIME_ERROR: u8 = 2;

/// First-passage-time densities of jump-diffusions by Monte Carlo.
#[derive(Parser)]
#[command(name = "fptmc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured engines and write densities and a report.
    Run(RunArgs),
    /// Check a configuration file without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// unif, cmc or both.
    #[arg(long)]
    engine: Option<EngineChoice>,
    /// Number of Monte Carlo runs per engine.
    #[arg(long)]
    runs: Option<u64>,
    /// Time step of the cmc baseline.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, ExitCode> {
    let mut cfg = parse_config(path).map_err(|e| {
        eprintln!("fptmc: {}: {e}", path.display());
        ExitCode::from(CONFIG_ERROR)
    })?;
    cfg.apply(overrides).map_err(|e| {
        eprintln!("fptmc: {e}");
        ExitCode::from(CONFIG_ERROR)
    })?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(CONFIG_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Validate { config } => match load(&config, &Overrides::default()) {
            Ok(cfg) => {
                println!(
                    "{}: ok (m = {}, engine = {}, runs = {})",
                    config.display(),
                    cfg.spec.dim(),
                    cfg.engine,
                    cfg.runs
                );
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Run(args) => {
            let overrides = Overrides {
                engine: args.engine,
                runs: args.runs,
                dt: args.dt,
                seed: args.seed,
                workers: args.workers,
                out: args.out,
            };
            let cfg = match load(&args.config, &overrides) {
                Ok(cfg) => cfg,
                Err(code) => return code,
            };
            match run_experiment(&cfg) {
                Ok(report) => {
                    print!("{}", report.render());
                    println!("output written to {}", cfg.out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("fptmc: {e}");
                    ExitCode::from(RUNTIME_ERROR)
                }
            }
        }
    }
}
