use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qdchan::materials::MaterialLibrary;
use qdchan::metrics::CompareOptions;
use qdchan::pipeline::{run_compare, run_generate, run_trace, validate_mpc_file};
use qdchan::scenario::ScenarioConfig;
use qdchan::Error;

/// Quasi-deterministic mmWave channel generator.
#[derive(Parser)]
#[command(name = "qdchan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML). The built-in lecture room when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed in the scenario file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Trace specular rays and write the d-ray table.
    Trace(Common),
    /// Generate one channel per receiver and write the MPC table.
    Generate(Common),
    /// KS comparison of two MPC tables; writes CDFs and a report into --out.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sim: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Dynamic-range floor in dB. Defaults to the scenario's floor.
        #[arg(long, conflicts_with = "no_floor")]
        floor_db: Option<f64>,
        #[arg(long)]
        no_floor: bool,
        /// Also report per-receiver distances.
        #[arg(long)]
        per_position: bool,
    },
    /// Check an MPC table against the generator invariants.
    Validate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Optional file for the list of violations.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Config(Error),
    Data(Error),
    Invalid(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

fn load(
    config: Option<&Path>,
    seed: Option<u64>,
) -> Result<(ScenarioConfig, MaterialLibrary), Failure> {
    let mut cfg = match config {
        Some(p) => ScenarioConfig::from_path(p).map_err(Failure::Config)?,
        None => ScenarioConfig::lecture_room(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let lib = cfg.load_library().map_err(Failure::Config)?;
    cfg.validate(&lib).map_err(Failure::Config)?;
    Ok((cfg, lib))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Trace(c) => {
            let (cfg, lib) = load(c.config.as_deref(), c.seed)?;
            let n = run_trace(&cfg, &lib, &c.out)?;
            eprintln!("wrote {n} rays to {}", c.out.display());
        }
        Command::Generate(c) => {
            let (cfg, lib) = load(c.config.as_deref(), c.seed)?;
            let s = run_generate(&cfg, &lib, &c.out)?;
            eprintln!(
                "wrote {} components for {} channels to {}",
                s.rows,
                s.channels,
                c.out.display()
            );
        }
        Command::Compare {
            common,
            sim,
            reference,
            floor_db,
            no_floor,
            per_position,
        } => {
            let scenario_floor = match &common.config {
                Some(p) => Some(
                    ScenarioConfig::from_path(p)
                        .map_err(Failure::Config)?
                        .floor_db,
                ),
                None => None,
            };
            let floor = match (no_floor, floor_db, scenario_floor) {
                (true, _, _) => None,
                (false, Some(f), _) | (false, None, Some(f)) => Some(f),
                (false, None, None) => CompareOptions::default().floor_db,
            };
            if floor.is_some_and(f64::is_nan) {
                return Err(Failure::Config(Error::Validation {
                    field: "floor_db".into(),
                    reason: "must be a number".into(),
                }));
            }
            let opts = CompareOptions {
                floor_db: floor.filter(|f| f.is_finite()),
                per_position,
            };
            let out = run_compare(&sim, &reference, &opts, &common.out)?;
            print!("{}", out.report.summary());
        }
        Command::Validate {
            input,
            config,
            seed,
            out,
        } => {
            if config.is_some() {
                load(config.as_deref(), seed)?;
            }
            let report = validate_mpc_file(&input)?;
            let text: String = report.violations.iter().map(|v| format!("{v}\n")).collect();
            if let Some(path) = &out {
                std::fs::write(path, &text).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
            }
            eprint!("{text}");
            println!(
                "{} rows, {} clusters, {} violations",
                report.rows,
                report.clusters,
                report.violations.len()
            );
            if !report.is_ok() {
                return Err(Failure::Invalid(report.violations.len()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Invalid(n)) => {
            eprintln!("validation failed: {n} violations");
            ExitCode::from(3)
        }
    }
}
