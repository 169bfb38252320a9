//! Command-line front end: configuration, subcommands and artifact output.
//!
//! Exit codes: 0 success, 2 usage, 3 invalid input, 4 numerical failure.
//! Failures print a single JSON object on stderr.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::OutDir;

#[derive(Debug, Parser)]
#[command(
    name = "cos2phi",
    version,
    about = "Simulate and analyse a cos(2φ) transmon"
)]
pub struct Cli {
    /// JSON run configuration; the bundled measured device when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads for sweeps; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Transition frequencies over the flux grid.
    Spectrum,
    /// Resonator shift with the qubit in |0⟩ and |1⟩.
    ResonatorShift,
    /// Per-channel relaxation budget over the flux grid.
    T1Budget,
    /// Multilevel effective T1 over the flux grid.
    MultilevelT1,
    /// Fit junction energies to a spectroscopy CSV.
    FitSpectrum {
        #[arg(long)]
        data: PathBuf,
    },
    /// Recover the current-to-flux matrix from a heatmap CSV.
    CalibrateCrosstalk {
        #[arg(long)]
        heatmap: PathBuf,
    },
    /// Fluxonium spectrum, potential and T1 against the cos(2φ) qubit.
    FluxoniumCompare,
    /// Potential and wavefunctions at one flux point.
    Potential,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::ResonatorShift => "resonator-shift",
            Command::T1Budget => "t1-budget",
            Command::MultilevelT1 => "multilevel-t1",
            Command::FitSpectrum { .. } => "fit-spectrum",
            Command::CalibrateCrosstalk { .. } => "calibrate-crosstalk",
            Command::FluxoniumCompare => "fluxonium-compare",
            Command::Potential => "potential",
        }
    }
}

/// Loads the configuration with the command-line overrides applied.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::paper(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Computes a command's artifacts without touching the disk.
pub fn artifacts(cfg: &RunConfig, command: &Command) -> Result<commands::Artifacts, CliError> {
    match command {
        Command::Spectrum => commands::spectrum(cfg),
        Command::ResonatorShift => commands::resonator_shift(cfg),
        Command::T1Budget => commands::t1_budget(cfg),
        Command::MultilevelT1 => commands::multilevel(cfg),
        Command::FitSpectrum { data } => commands::fit(cfg, data),
        Command::CalibrateCrosstalk { heatmap } => commands::calibrate(cfg, heatmap),
        Command::FluxoniumCompare => commands::fluxonium_compare(cfg),
        Command::Potential => commands::potential(cfg),
    }
}

fn execute(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = resolve_config(cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", cli.workers)))?;
    let files = pool.install(|| artifacts(&cfg, &cli.command))?;
    let mut out = OutDir::create(&cli.out_dir)?;
    out.write("config.json", &cfg.normalized())?;
    for (name, contents) in &files {
        out.write(name, contents)?;
    }
    Ok(out.written)
}

/// Runs one invocation and returns its exit code. `argv[0]` is the program name.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = e.print();
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                    2
                } else {
                    0
                };
            }
            let err = CliError::Usage(
                e.to_string()
                    .lines()
                    .next()
                    .unwrap_or("invalid arguments")
                    .trim_start_matches("error: ")
                    .to_string(),
            );
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match execute(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
