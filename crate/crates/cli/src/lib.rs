//! The `gror` command-line tool.
//!
//! Exit codes: 0 on success, 2 when registration finds no consensus, 1 for
//! everything else (bad flags, unreadable or malformed input, write errors).

pub mod corrfile;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use gror_core::bench::{self as sim, SimulationSpec, TrialRow};
use gror_core::{register, GrorError, GrorParams, DEFAULT_K};
use thiserror::Error;

use crate::corrfile::{CorrFileError, CorrespondenceFile};
use crate::report::{format_matrix, TransformReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_NO_CONSENSUS: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "gror",
    version,
    about = "Rigid registration of 3D correspondences by graph reliability"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the rigid transform of a correspondence file.
    Register(RegisterArgs),
    /// Run the synthetic outlier-ratio sweep.
    Bench(BenchArgs),
    /// Write a synthetic correspondence file.
    Generate(GenerateArgs),
    /// Check that a correspondence file parses.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct RegisterArgs {
    /// Correspondence file, one `px py pz qx qy qz` record per line.
    #[arg(long)]
    pub corr: PathBuf,
    /// Noise bound.
    #[arg(long)]
    pub delta: f64,
    /// Number of highest-degree correspondences kept as candidates.
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    /// JSON report path; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Plain-text 4×4 transform path.
    #[arg(long)]
    pub transform_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Score every candidate edge under the tight constraint.
    #[arg(long)]
    pub no_prune: bool,
    /// Write zero for every timing field.
    #[arg(long)]
    pub no_timings: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated outlier ratios in [0, 1).
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.9,0.99")]
    pub ratios: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 80)]
    pub n_inliers: usize,
    /// Gaussian noise per coordinate; defaults to `--rho`.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 0.002)]
    pub rho: f64,
    /// Base seed; trial `i` uses `seed + i`.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    /// Noise bound; defaults to `--rho`.
    #[arg(long)]
    pub delta: Option<f64>,
    /// CSV output; printed to stdout when neither `--csv` nor `--json` is given.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Write zero for the timing column.
    #[arg(long)]
    pub no_timings: bool,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 80)]
    pub n_inliers: usize,
    #[arg(long, default_value_t = 0.0)]
    pub ratio: f64,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 0.002)]
    pub rho: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Also write the inlier ids, one per line.
    #[arg(long)]
    pub inliers_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub corr: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Input(#[from] CorrFileError),
    #[error("{0}")]
    Registration(#[source] GrorError),
    #[error("invalid argument: {0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Registration(
                GrorError::NoConsensus | GrorError::DegenerateConfiguration(_),
            ) => EXIT_NO_CONSENSUS,
            _ => EXIT_FAILURE,
        }
    }
}

impl From<GrorError> for CliError {
    fn from(e: GrorError) -> Self {
        match e {
            GrorError::InvalidParameter(msg) => CliError::Usage(msg),
            other => CliError::Registration(other),
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn main_register(args: &RegisterArgs) -> Result<(), CliError> {
    let params = GrorParams {
        k: args.k,
        prune: !args.no_prune,
        threads: args.threads,
        ..GrorParams::new(args.delta)
    };
    params.validate()?;
    let set = CorrespondenceFile::read(&args.corr)?.to_set(args.delta)?;
    let result = register(&set, &params)?;
    let report = TransformReport::new(&set, &params, &result, !args.no_timings);
    match &args.out {
        Some(path) => write_file(path, &report.to_json())?,
        None => print!("{}", report.to_json()),
    }
    if let Some(path) = &args.transform_out {
        write_file(path, &format_matrix(&result.transform))?;
    }
    eprintln!(
        "registered {} of {} correspondences",
        report.consensus_size, report.correspondences
    );
    Ok(())
}

fn check_ratios(ratios: &[f64]) -> Result<(), CliError> {
    if ratios.is_empty() {
        return Err(CliError::Usage("no ratios given".into()));
    }
    match ratios.iter().find(|r| !(0.0..1.0).contains(*r)) {
        Some(r) => Err(CliError::Usage(format!("ratio {r} is outside [0, 1)"))),
        None => Ok(()),
    }
}

pub fn main_bench(args: &BenchArgs) -> Result<Vec<TrialRow>, CliError> {
    check_ratios(&args.ratios)?;
    let template = SimulationSpec {
        n_inliers: args.n_inliers,
        noise_sigma: args.sigma.unwrap_or(args.rho),
        rho: args.rho,
        seed: args.seed,
        ..SimulationSpec::default()
    };
    let params = GrorParams {
        k: args.k,
        threads: args.threads,
        ..GrorParams::new(args.delta.unwrap_or(args.rho))
    };
    let summaries = sim::run_trials(&template, &args.ratios, args.trials, &params)?;
    let rows: Vec<TrialRow> = summaries
        .iter()
        .map(|s| {
            let mut row = TrialRow::from(s);
            if args.no_timings {
                row.mean_time_s = 0.0;
            }
            row
        })
        .collect();

    let mut csv = Vec::new();
    sim::write_csv(&rows, &mut csv).expect("in-memory write");
    let csv = String::from_utf8(csv).expect("csv is utf-8");
    if let Some(path) = &args.csv {
        write_file(path, &csv)?;
    }
    if let Some(path) = &args.json {
        let mut json = sim::to_json(&rows).expect("rows serialize");
        json.push('\n');
        write_file(path, &json)?;
    }
    if args.csv.is_none() && args.json.is_none() {
        print!("{csv}");
    }
    Ok(rows)
}

pub fn main_generate(args: &GenerateArgs) -> Result<(), CliError> {
    check_ratios(&[args.ratio])?;
    let spec = SimulationSpec {
        n_inliers: args.n_inliers,
        outlier_ratio: args.ratio,
        noise_sigma: args.sigma.unwrap_or(args.rho),
        rho: args.rho,
        seed: args.seed,
        ..SimulationSpec::default()
    };
    let labels = sim::generate(&spec)?;
    write_file(&args.out, &corrfile::format_set(&labels.set))?;
    if let Some(path) = &args.inliers_out {
        let ids: String = labels
            .inlier_ids
            .iter()
            .map(|id| format!("{id}\n"))
            .collect();
        write_file(path, &ids)?;
    }
    Ok(())
}

pub fn main_validate(args: &ValidateArgs) -> Result<(), CliError> {
    let file = CorrespondenceFile::read(&args.corr)?;
    println!(
        "{}: {} correspondences",
        file.path.display(),
        file.pairs.len()
    );
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_FAILURE
            } else {
                EXIT_OK
            };
        }
    };
    let outcome = match &cli.command {
        Command::Register(a) => main_register(a),
        Command::Bench(a) => main_bench(a).map(|_| ()),
        Command::Generate(a) => main_generate(a),
        Command::Validate(a) => main_validate(a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
