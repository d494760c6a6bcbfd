use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tailvar::series::ColumnMode;
use tailvar::{Innovation, Tail, TailMethod};

#[derive(Debug, Parser)]
#[command(name = "tailvar", version, about = "Tail-index estimation and extreme-value VaR for return series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summary statistics, normality and Ljung-Box diagnostics.
    Stats(StatsArgs),
    /// Tail-index estimation on one tail of the series.
    Tail(TailArgs),
    /// Hill estimates over a range of tail sizes (CSV: m,gamma,se).
    Hillplot(HillplotArgs),
    /// Normal Q-Q data (CSV: normal_q,empirical_q).
    Qqplot(QqplotArgs),
    /// AR(1)-GARCH(1,1) maximum-likelihood fit, written as model JSON.
    Fit(FitArgs),
    /// Single- and multi-period VaR grids.
    Var(VarArgs),
    /// Monte Carlo study of the alpha-root scaling law.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Column {
    Price,
    Return,
}

impl From<Column> for ColumnMode {
    fn from(c: Column) -> Self {
        match c {
            Column::Price => ColumnMode::Price,
            Column::Return => ColumnMode::Return,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TailSide {
    Lower,
    Upper,
}

impl From<TailSide> for Tail {
    fn from(t: TailSide) -> Self {
        match t {
            TailSide::Lower => Tail::Lower,
            TailSide::Upper => Tail::Upper,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Method {
    Fixed,
    Phillips,
    Huisman,
}

impl From<Method> for TailMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Fixed => TailMethod::Fixed,
            Method::Phillips => TailMethod::Phillips,
            Method::Huisman => TailMethod::Huisman,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Shocks {
    /// Standardized Student-t with 4 degrees of freedom.
    T4,
    Normal,
}

impl From<Shocks> for Innovation {
    fn from(s: Shocks) -> Self {
        match s {
            Shocks::T4 => Innovation::StudentT4,
            Shocks::Normal => Innovation::Normal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VarMode {
    Unconditional,
    Conditional,
    Gaussian,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV file with a `price` or `return` column and an optional `date` column.
    #[arg(long)]
    pub input: PathBuf,
    /// Which column to read; prices are converted to percent log returns.
    #[arg(long, value_enum, default_value = "return")]
    pub column: Column,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TailChoice {
    #[arg(long, value_enum, default_value = "huisman")]
    pub method: Method,
    #[arg(long, value_enum, default_value = "lower")]
    pub tail: TailSide,
    /// Number of order statistics (fixed method only).
    #[arg(long)]
    pub m: Option<usize>,
    /// Regression horizon for the huisman method (default: half the tail count).
    #[arg(long)]
    pub eta: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 12)]
    pub lags: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TailArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub choice: TailChoice,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct HillplotArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "lower")]
    pub tail: TailSide,
    /// Largest m (default: half the tail count).
    #[arg(long)]
    pub eta: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QqplotArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "t4")]
    pub innovation: Shocks,
    /// Model JSON destination.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional CSV of the fitted path (t,sigma,z).
    #[arg(long)]
    pub path_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VarArgs {
    #[arg(long, conflicts_with = "model")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "return")]
    pub column: Column,
    /// Model JSON written by `fit`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "unconditional")]
    pub mode: VarMode,
    /// Tail probabilities, comma separated.
    #[arg(long = "p", value_delimiter = ',', default_values_t = [0.05, 0.005])]
    pub probabilities: Vec<f64>,
    /// Horizons in periods, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 4, 5])]
    pub horizons: Vec<usize>,
    #[arg(long, value_enum, default_value = "huisman")]
    pub method: Method,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub eta: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 0.1)]
    pub a0: f64,
    #[arg(long, default_value_t = 0.15)]
    pub a1: f64,
    #[arg(long, default_value_t = 0.8)]
    pub b1: f64,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub burn_in: usize,
    #[arg(long = "p", value_delimiter = ',', default_values_t = [0.05, 0.01])]
    pub probabilities: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 4, 5])]
    pub horizons: Vec<usize>,
    /// `csv` gives the summary table; `json` the full report with replications.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
