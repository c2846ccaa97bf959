//! Command-line front end: closed-form theory tables, simulation runs
//! persisted as CSV, estimation from saved runs, and the validation suite.

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use extorus::sim::{ExperimentConfig, ZetaSpec};
use extorus::MetricKind;

mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod records;

pub use config::ConfigPatch;
pub use error::{CliError, CliResult};
pub use manifest::{Derived, RunManifest, MANIFEST_FILE};

#[derive(Debug, Parser)]
#[command(name = "extorus", version, about = "Extreme values of hyperbolic toral automorphisms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the extremal index, cluster-size law and threshold scalings.
    Theory(TheoryArgs),
    /// Simulate orbits and write exceedance and maxima CSVs.
    Simulate(SimulateArgs),
    /// Estimate extremal statistics from a saved run.
    Estimate(EstimateArgs),
    /// Run the acceptance suite.
    Validate(ValidateArgs),
}

/// Experiment fields. Flags override values from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    /// `key=value` file with ExperimentConfig field names as keys.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Integer matrix entries a,b,c,d (row-major).
    #[arg(long, value_name = "A,B,C,D", value_parser = config::parse_matrix, allow_hyphen_values = true)]
    pub matrix: Option<[i64; 4]>,
    /// Center: `a/b,c/d` (exact) or `0.41,0.73` (decimal).
    #[arg(long)]
    pub zeta: Option<ZetaSpec>,
    /// euclidean or adapted.
    #[arg(long)]
    pub metric: Option<MetricKind>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Orbit length per trial.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Orbits run modulo 2^B.
    #[arg(long, value_name = "B")]
    pub modulus_bits: Option<u32>,
    /// Declustering run length in steps.
    #[arg(long, value_name = "G")]
    pub run_gap: Option<u64>,
}

impl ExperimentArgs {
    fn patch(&self) -> ConfigPatch {
        ConfigPatch {
            matrix: self.matrix,
            zeta: self.zeta,
            metric: self.metric,
            tau: self.tau,
            n: self.n,
            trials: self.trials,
            modulus_bits: self.modulus_bits,
            seed: self.seed,
            run_gap: self.run_gap,
        }
    }

    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            config::read_config_file(path)?.apply(&mut cfg);
        }
        self.patch().apply(&mut cfg);
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct TheoryArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Period of the center; computed from --zeta when absent.
    #[arg(long)]
    pub q: Option<u32>,
    /// Largest cluster size tabulated.
    #[arg(long, default_value_t = 10)]
    pub kmax: u32,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "extorus-run")]
    pub out: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    /// Directory written by `simulate`.
    #[arg(long, value_name = "DIR", default_value = "extorus-run")]
    pub input: PathBuf,
    /// Where multiplicity.dat goes; defaults to the input directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub kmax: u32,
    /// Rate used by the gap KS test instead of the computed extremal index.
    #[arg(long)]
    pub theta_override: Option<f64>,
    /// Monte Carlo samples for the measure-ratio estimate.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Formula and oracle criteria only.
    #[arg(long)]
    pub quick: bool,
    /// Directory for manifest.json.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub json: bool,
    /// Replaces the computed extremal index (negative control).
    #[arg(long, hide = true)]
    pub inject_theta: Option<f64>,
    #[arg(long, hide = true)]
    pub trials: Option<u64>,
    #[arg(long, hide = true)]
    pub n: Option<u64>,
    #[arg(long, hide = true)]
    pub region_samples: Option<u64>,
    #[arg(long, hide = true)]
    pub separation_samples: Option<u64>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Theory(a) => commands::theory(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Estimate(a) => commands::estimate(&a),
        Command::Validate(a) => commands::validate(&a),
    }
}

/// Parses `args`, runs the command and maps failures to exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
