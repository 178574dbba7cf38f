use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Goodness-of-fit tests for Markovian time-series models.
///
/// Exit status: 0 when the run completes without rejecting, 2 when `test`
/// rejects the null, 1 on any error.
#[derive(Debug, Parser)]
#[command(name = "mgof", version)]
pub struct Cli {
    /// Thread budget (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test a series read from CSV against a null model.
    Test(TestArgs),
    /// Simulate a series and write it as single-column CSV.
    Simulate(SimulateArgs),
    /// Estimate rejection rates for one design by simulation.
    Mc(McArgs),
    /// Re-run one of the built-in simulation tables.
    ReproduceTable(TableArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Ar,
    Arch,
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DgpModelArg {
    Ar,
    Arch,
    Iid,
    Garch11,
    Sv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Semi,
    Param,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ArMethodArg {
    Ls,
    Yw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    /// Draw innovations from the specified law.
    Parametric,
    /// Draw innovations from the centred residual pool.
    Resample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Full,
    Reduced,
}

/// The null model.
#[derive(Debug, Clone, Args)]
pub struct NullArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    #[arg(long, value_enum, default_value_t = VariantArg::Semi)]
    pub variant: VariantArg,
    /// Innovation law: normal, t:NU or uniform.
    #[arg(long)]
    pub innov: Option<String>,
    /// Parameters of a fully specified null, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = ArMethodArg::Ls)]
    pub ar_method: ArMethodArg,
}

#[derive(Debug, Clone, Args)]
pub struct BootArgs {
    /// Bootstrap resamples.
    #[arg(long = "B", default_value_t = 500)]
    pub b: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub burn_in: usize,
    /// Innovation source for the parametric-innovations bootstrap.
    #[arg(long, value_enum, default_value_t = SchemeArg::Parametric)]
    pub param_scheme: SchemeArg,
}

#[derive(Debug, Clone, Args)]
pub struct TestArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Zero-based column index or header name.
    #[arg(long, default_value = "0")]
    pub column: String,
    /// Constant subtracted from every observation before testing.
    #[arg(long, allow_hyphen_values = true)]
    pub center: Option<f64>,
    #[command(flatten)]
    pub null: NullArgs,
    #[command(flatten)]
    pub boot: BootArgs,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// JSON report path.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: DgpModelArg,
    /// Lag order (IID only; other families take it from --theta).
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Option<Vec<f64>>,
    #[arg(long, default_value = "normal")]
    pub innov: String,
    /// Number of observations after the initial lags.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub burn_in: usize,
    /// CSV path (default: standard output).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    /// Data-generating process: a preset name (arch1-normal, arch1-t5, arch2,
    /// garch11, sv, iid-normal, iid-uniform, ar1-0.2, ar1-0.4, ar1-0.6) or
    /// FAMILY:THETA[:INNOV], e.g. `ar:0.5` or `arch:0.1,0.4:t:5`.
    #[arg(long)]
    pub dgp: Option<String>,
    #[command(flatten)]
    pub null: NullArgs,
    #[command(flatten)]
    pub boot: BootArgs,
    /// Significance levels, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.10])]
    pub alpha: Vec<f64>,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    /// JSON report path.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// CSV summary path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    /// 1: ARCH(1) Gaussian null; 2: fully specified i.i.d. nulls.
    #[arg(long)]
    pub table: u8,
    #[arg(long, value_enum, default_value_t = ScaleArg::Full)]
    pub scale: ScaleArg,
    #[arg(long = "B", default_value_t = 500)]
    pub b: usize,
    #[arg(long, default_value_t = 20_240_601)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub burn_in: usize,
    /// Overrides the replication count implied by --scale.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}
