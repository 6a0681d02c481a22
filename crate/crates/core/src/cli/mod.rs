//! Command-line runner: one seeded experiment per invocation, outputs plus a
//! manifest that reproduces them.

pub mod config;
mod experiments;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::error::Error;
pub use config::{Experiment, RunConfig};

/// Environment variable that overrides the output directory.
pub const OUT_DIR_VAR: &str = "HOMDYN_OUT_DIR";

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Numeric(String),
    Falsified(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Falsified(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CliError::Falsified(m) => write!(f, "falsified: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Falsified(_) | Error::BranchFailure { .. } | Error::SearchFailed(_) => {
                CliError::Falsified(e.to_string())
            }
            Error::InvalidParameter(_)
            | Error::Inadmissible { .. }
            | Error::NotDominated(_)
            | Error::DimensionMismatch(_)
            | Error::TraceMismatch { .. }
            | Error::OutsideBox(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

const AFTER_HELP: &str = "\
Parameters are given as `--key value`, `--key=value` or `key=value`, and
override values read from `--config FILE` (lines of `key = value`, `#`
comments). Every run writes `<experiment>.manifest` next to its outputs;
`homdyn run --config <manifest>` reproduces them byte for byte.

The output directory is `--out DIR`, else $HOMDYN_OUT_DIR, else the `out`
key of the config file, else `./out`.

Exit codes: 0 success, 2 usage, 3 numeric failure, 4 falsified inequality.";

#[derive(Debug, Parser)]
#[command(name = "homdyn", version, about = "Experiments on diagonal flows over SL_d(R)/SL_d(Z)")]
#[command(after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Params {
    /// Parameters: --config FILE, --out DIR and experiment keys
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "PARAMS")]
    params: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Trajectory of g_t u(w) Z^d: t, lambda1, alpha, inK
    Simulate(Params),
    /// Height and minima of g_t u(w) Z^d over a grid of w
    HeightProfile(Params),
    /// Return times to a height sublevel along box partitions
    ReturnTimes(Params),
    /// Fraction of w whose occupancy of a sublevel falls short
    Occupancy(Params),
    /// Large-deviation frequencies against the derived bound
    Largedev(Params),
    /// Correlations of shifted observables and their decay rate
    Correlations(Params),
    /// Both sides of the shadowing inequality on random boxes
    Shadowing(Params),
    /// Root systems and expanding subalgebras
    Rootsys {
        #[command(subcommand)]
        command: RootsysCommand,
    },
    /// Runs the experiment named in a config file or manifest
    Run(Params),
}

#[derive(Debug, Subcommand)]
enum RootsysCommand {
    /// Dominated-vector decomposition (family, rank, alpha)
    Decompose(Params),
    /// Expanding subalgebra for a traceless diagonal z
    Expanding(Params),
    /// Strongly orthogonal positive roots (family, rank)
    Orthogonal(Params),
    /// Cartan matrix and its inverse (family, rank)
    Cartan(Params),
}

/// Files produced by an experiment, plus a short report for stdout.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
    pub report: String,
    /// Set when an acceptance-grade inequality failed; outputs are still written.
    pub falsified: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs a resolved configuration without touching the file system.
pub fn execute(config: &RunConfig) -> Result<Outputs, CliError> {
    let threads: usize = config.get("threads")?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Numeric(format!("thread pool: {e}")))?;
    pool.install(|| experiments::run(config))
}

fn write_outputs(dir: &Path, config: &RunConfig, outputs: &Outputs) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Numeric(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    let mut digests = Vec::new();
    let mut files: Vec<(String, &[u8])> =
        outputs.files.iter().map(|(n, b)| (n.clone(), b.as_slice())).collect();
    for (name, bytes) in &files {
        digests.push((name.clone(), sha256_hex(bytes)));
    }
    let manifest = config.manifest(&digests);
    let manifest_name = format!("{}.manifest", config.experiment().name());
    files.push((manifest_name, manifest.as_bytes()));
    for (name, bytes) in files {
        let path = dir.join(&name);
        if let Err(e) = std::fs::write(&path, bytes) {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            let _ = std::fs::remove_file(&path);
            return Err(CliError::Numeric(format!("cannot write {}: {e}", path.display())));
        }
        written.push(path);
    }
    Ok(written)
}

type SplitParams = (Option<PathBuf>, Option<String>, Vec<(String, String)>);

fn split_params(p: &Params) -> Result<SplitParams, CliError> {
    let mut config = None;
    let mut out = None;
    let mut rest = Vec::new();
    for (k, v) in config::parse_args(&p.params)? {
        match k.as_str() {
            "config" => config = Some(PathBuf::from(v)),
            "out" => out = Some(v),
            _ => rest.push((k, v)),
        }
    }
    Ok((config, out, rest))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let (experiment, params) = match &cli.command {
        Command::Simulate(p) => (Some(Experiment::Simulate), p),
        Command::HeightProfile(p) => (Some(Experiment::HeightProfile), p),
        Command::ReturnTimes(p) => (Some(Experiment::ReturnTimes), p),
        Command::Occupancy(p) => (Some(Experiment::Occupancy), p),
        Command::Largedev(p) => (Some(Experiment::Largedev), p),
        Command::Correlations(p) => (Some(Experiment::Correlations), p),
        Command::Shadowing(p) => (Some(Experiment::Shadowing), p),
        Command::Rootsys { command } => match command {
            RootsysCommand::Decompose(p) => (Some(Experiment::RootsysDecompose), p),
            RootsysCommand::Expanding(p) => (Some(Experiment::RootsysExpanding), p),
            RootsysCommand::Orthogonal(p) => (Some(Experiment::RootsysOrthogonal), p),
            RootsysCommand::Cartan(p) => (Some(Experiment::RootsysCartan), p),
        },
        Command::Run(p) => (None, p),
    };
    let (file, out_flag, flags) = split_params(params)?;
    if experiment.is_none() && file.is_none() {
        return Err(CliError::Usage("run needs --config FILE".into()));
    }
    let config = RunConfig::resolve(experiment, file.as_deref(), &flags)?;
    let dir = out_flag
        .or_else(|| std::env::var(OUT_DIR_VAR).ok().filter(|s| !s.is_empty()))
        .or_else(|| config.out().map(str::to_string))
        .unwrap_or_else(|| "out".to_string());
    let outputs = execute(&config)?;
    let written = write_outputs(Path::new(&dir), &config, &outputs)?;
    print!("{}", outputs.report);
    for p in written {
        println!("wrote {}", p.display());
    }
    match outputs.falsified {
        Some(m) => Err(CliError::Falsified(m)),
        None => Ok(()),
    }
}

/// Entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("homdyn: {e}");
            e.exit_code()
        }
    }
}
