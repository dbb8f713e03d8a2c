use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use ncr_sim::engine::{emit_output, preflight, resolve, CliOverrides, FileConfig, Simulator, TraceFlags};
use ncr_sim::scenario::ScenarioId;
use ncr_sim::{ConfigError, SimError};

#[derive(Parser)]
#[command(name = "ncr-sim", version, about = "mmWave system-level simulator with network-controlled repeaters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    A,
    B,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write the result files.
    Run {
        #[arg(long, value_enum, ignore_case = true)]
        scenario: Option<ScenarioArg>,
        #[arg(long, value_enum)]
        ncr: Option<Toggle>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        slots: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated traces to write: links, alloc.
        #[arg(long)]
        trace: Option<String>,
    },
    /// Parse and validate a configuration file.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn load(path: Option<&PathBuf>) -> Result<FileConfig, ConfigError> {
    match path {
        Some(p) => FileConfig::load(p),
        None => Ok(FileConfig::default()),
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { config } => {
            let file = FileConfig::load(&config)?;
            let cfg = resolve(&file, &CliOverrides::default())?;
            println!("ok {} (config hash {})", config.display(), cfg.config_hash());
            Ok(())
        }
        Command::Run {
            scenario,
            ncr,
            seed,
            slots,
            config,
            out,
            trace,
        } => {
            let file = load(config.as_ref())?;
            let trace: TraceFlags = match trace {
                Some(t) => t.parse()?,
                None => TraceFlags::default(),
            };
            let overrides = CliOverrides {
                scenario: scenario.map(|s| match s {
                    ScenarioArg::A => ScenarioId::A,
                    ScenarioArg::B => ScenarioId::B,
                }),
                ncr_enabled: ncr.map(|t| matches!(t, Toggle::On)),
                seed,
                slots,
                output_dir: Some(out.clone()),
                trace,
            };
            let cfg = resolve(&file, &overrides)?;
            preflight(&out).map_err(|e| Failure::Runtime(e.to_string()))?;
            info!(
                "scenario {} ncr {} seed {} slots {}",
                cfg.scenario.scenario_id, cfg.scenario.ncr_enabled, cfg.seed, cfg.total_slots
            );
            let mut sim = Simulator::new(cfg)?;
            sim.run_to_end()?;
            let result = sim.finish();
            emit_output(&result, &out)?;
            info!("wrote results to {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
