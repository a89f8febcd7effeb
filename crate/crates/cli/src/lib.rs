//! Command-line scenario runner: analytic key rates and sweeps, Monte Carlo
//! runs, intercept-resend studies and figure data, all emitted as CSV.
//!
//! Angles are given in degrees on the command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod argfile;
pub mod commands;
pub mod svg;
pub mod table;

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

/// Environment variable capping worker threads (`0` or unset = automatic).
pub const THREADS_ENV: &str = "CVQKD_THREADS";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// bad or missing configuration; exit status 2
    Usage(String),
    /// failure while computing or writing; exit status 1
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Parser, Debug)]
#[command(name = "cvqkd", version, about = "Single-quadrature CV-QKD key rates, simulations and attack studies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Analytic key rate at one parameter point
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Keyrate(KeyrateArgs),
    /// Analytic key rate along one parameter axis
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Sample-level simulation with parameter estimation and attack verdict
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Montecarlo(MontecarloArgs),
    /// Intercept-resend study over Bob's frame angle
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Attack(AttackArgs),
    /// Data behind the angle-mismatch and detection figures
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Figure(FigureArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Output CSV path; standard output when absent
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Root seed for every random stream
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Key-value config file; command-line flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the effective settings as a config file
    #[arg(long)]
    pub dump_config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ChannelArgs {
    /// Channel transmittance in (0, 1]
    #[arg(long)]
    pub t: Option<f64>,
    /// Fibre length in km, instead of --t
    #[arg(long, conflicts_with = "t")]
    pub distance: Option<f64>,
    /// Fibre attenuation, dB/km
    #[arg(long, default_value_t = cvqkd::security::DEFAULT_FIBER_LOSS_DB_PER_KM)]
    pub db_per_km: f64,
    /// Excess noise at the channel output, SNU
    #[arg(long)]
    pub xi: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyArg {
    Standard,
    Diagonal,
}

#[derive(Args, Debug, Clone)]
pub struct KeyrateArgs {
    /// Entanglement-based variance V >= 1 (modulation V - 1)
    #[arg(long)]
    pub v: f64,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, default_value_t = cvqkd::security::DEFAULT_BETA)]
    pub beta: f64,
    /// Bob's frame angle, degrees
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
    #[arg(long, value_enum, default_value_t = StrategyArg::Standard)]
    pub strategy: StrategyArg,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisArg {
    Theta,
    Distance,
    V,
    Xi,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub axis: AxisArg,
    /// First grid value (degrees for theta, km for distance)
    #[arg(long)]
    pub from: f64,
    /// Last grid value
    #[arg(long)]
    pub to: f64,
    #[arg(long)]
    pub points: usize,
    /// Base variance; required unless sweeping v
    #[arg(long)]
    pub v: Option<f64>,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, default_value_t = cvqkd::security::DEFAULT_BETA)]
    pub beta: f64,
    /// Base frame angle, degrees
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
    #[arg(long, value_enum, default_value_t = StrategyArg::Standard)]
    pub strategy: StrategyArg,
    /// Also write an SVG plot of r
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorArg {
    SquaredCovariance,
    Regression,
}

#[derive(Args, Debug, Clone)]
pub struct MontecarloArgs {
    /// Alice's modulation variance per quadrature, SNU
    #[arg(long, default_value_t = 5.0)]
    pub v_a: f64,
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    #[arg(long, default_value_t = 0.05)]
    pub xi: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub n_pulses: usize,
    #[arg(long, default_value_t = cvqkd::montecarlo::DEFAULT_BLOCK_SIZE)]
    pub block_size: usize,
    /// Share of blocks disclosed for parameter estimation
    #[arg(long, default_value_t = 0.5)]
    pub estimation_fraction: f64,
    #[arg(long, default_value_t = cvqkd::security::DEFAULT_BETA)]
    pub beta: f64,
    /// Initial frame angle, degrees
    #[arg(long, default_value_t = 0.0)]
    pub theta0: f64,
    /// Deterministic frame drift, degrees per pulse
    #[arg(long, default_value_t = 0.0)]
    pub drift_rate: f64,
    /// Random-walk step, degrees per square-root pulse
    #[arg(long, default_value_t = 0.0)]
    pub walk_sigma: f64,
    /// Excess-noise estimate above which the run is flagged, SNU
    #[arg(long, default_value_t = cvqkd::montecarlo::DEFAULT_DETECTION_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value_t = EstimatorArg::SquaredCovariance)]
    pub estimator: EstimatorArg,
    /// Insert the intercept-resend attack
    #[arg(long)]
    pub attack: bool,
    /// Eve's frame angle, degrees
    #[arg(long, default_value_t = 60.0)]
    pub theta_e: f64,
    #[arg(long, default_value_t = 10.0)]
    pub squeezing_db: f64,
    #[arg(long, default_value_t = cvqkd::attacks::DEFAULT_RESEND_GAIN)]
    pub resend_gain: f64,
    /// Per-block summary CSV
    #[arg(long)]
    pub blocks_output: Option<PathBuf>,
    /// Raw per-pulse sample CSV
    #[arg(long)]
    pub samples_output: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfoFormArg {
    CosSquared,
    AbsCos,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombinationArg {
    Difference,
    Sum,
}

#[derive(Args, Debug, Clone)]
pub struct AttackArgs {
    /// Eve's frame angle, degrees
    #[arg(long, default_value_t = 60.0)]
    pub theta_e: f64,
    /// Bob's variance limit entering the detection probability
    #[arg(long, default_value_t = cvqkd::attacks::DEFAULT_DETECTOR_LIMIT)]
    pub v_b: f64,
    /// First θ_B, degrees
    #[arg(long, default_value_t = 0.0)]
    pub from: f64,
    /// Last θ_B, degrees
    #[arg(long, default_value_t = 180.0)]
    pub to: f64,
    #[arg(long, default_value_t = 181)]
    pub points: usize,
    #[arg(long, default_value_t = 10.0)]
    pub squeezing_db: f64,
    #[arg(long, default_value_t = cvqkd::attacks::DEFAULT_RESEND_GAIN)]
    pub resend_gain: f64,
    #[arg(long, default_value_t = 5.0)]
    pub v_a: f64,
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    #[arg(long, default_value_t = 0.05)]
    pub xi: f64,
    #[arg(long, value_enum, default_value_t = InfoFormArg::CosSquared)]
    pub info_form: InfoFormArg,
    #[arg(long, value_enum, default_value_t = CombinationArg::Difference)]
    pub angle_combination: CombinationArg,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    Fig3,
    Fig4,
}

#[derive(Args, Debug, Clone)]
pub struct FigureArgs {
    #[arg(long, value_enum)]
    pub id: FigureId,
    /// fig3: entanglement-based variance
    #[arg(long, default_value_t = 6.0)]
    pub v: f64,
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    #[arg(long, default_value_t = 0.05)]
    pub xi: f64,
    /// fig4: Eve's frame angle, degrees
    #[arg(long, default_value_t = 60.0)]
    pub theta_e: f64,
    /// fig4: Bob's variance limit
    #[arg(long, default_value_t = cvqkd::attacks::DEFAULT_DETECTOR_LIMIT)]
    pub v_b: f64,
    /// Grid step, degrees
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    /// Also write an SVG plot
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// One file to write, or standard output when `path` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub path: Option<PathBuf>,
    pub contents: String,
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let fail = |e: std::io::Error| CliError::Runtime(format!("cannot write {}: {e}", path.display()));
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(fail)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        fail(e)
    })
}

fn emit(outputs: &[Output]) -> Result<(), CliError> {
    for o in outputs {
        match &o.path {
            Some(p) => write_atomic(p, &o.contents)?,
            None => std::io::stdout()
                .write_all(o.contents.as_bytes())
                .map_err(|e| CliError::Runtime(format!("cannot write to stdout: {e}")))?,
        }
    }
    Ok(())
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV}: expected a non-negative integer, got '{s}'")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))
}

/// Parses `args` (program name first), runs the command and writes its
/// outputs. Nothing is written unless every output was computed.
pub fn try_run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args = argfile::expand_args(args.into_iter().map(Into::into).collect())?;
    let mut command = Cli::command();
    let matches = match command.try_get_matches_from_mut(args) {
        Ok(m) => m,
        Err(e) => {
            if e.use_stderr() {
                return Err(CliError::Usage(e.render().to_string().trim_end().to_string()));
            }
            let _ = e.print();
            return Ok(());
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Usage(e.to_string()))?;
    let dump =
        matches.subcommand().and_then(|(name, m)| command.find_subcommand(name).map(|c| argfile::dump_config(c, m)));

    let pool = thread_pool()?;
    let (mut outputs, common) = pool.install(|| commands::execute(&cli.command))?;
    if let (Some(path), Some(text)) = (&common.dump_config, dump) {
        outputs.push(Output { path: Some(path.clone()), contents: text });
    }
    emit(&outputs)
}

/// [`try_run`] with errors reported on stderr, returning the exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    match try_run(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("cvqkd: {e}");
            e.exit_code()
        }
    }
}
