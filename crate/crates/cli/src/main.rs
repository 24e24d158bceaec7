#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sinc_pricer::error::PricingError;
use thiserror::Error;

#[derive(Parser)]
#[command(
    name = "sinc",
    version,
    about = "Fourier option pricing with the SINC expansion and its competitors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Price options at one maturity.
    Price(PriceArgs),
    /// Reproduce a convergence table as `method,kind,K,NF,rel_err,star` rows.
    Table(TableArgs),
    /// Density (and distribution function) of the log-return on a grid.
    Pdf(PdfArgs),
    /// Mean implied-vol error of Lewis or Carr-Madan over a grid of beta.
    BetaSweep(SweepArgs),
    /// Smallest N_F at which each FFT method meets an implied-vol target.
    Rank(RankArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    Gbm,
    Heston,
    Cgmy,
    RoughHeston,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelName>,
    /// JSON or TOML model file; overrides the model flags.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long = "eta-vol")]
    pub eta_vol: Option<f64>,
    #[arg(long = "v-bar")]
    pub v_bar: Option<f64>,
    #[arg(long)]
    pub v0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub y: Option<f64>,
    #[arg(long)]
    pub hurst: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    /// Flat forward variance.
    #[arg(long)]
    pub xi0: Option<f64>,
    /// Forward variance curve as a `time,value` CSV.
    #[arg(long = "xi-curve")]
    pub xi_curve: Option<PathBuf>,
    #[arg(long = "n-steps")]
    pub n_steps: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct MarketArgs {
    #[arg(long = "s0", default_value_t = 1.0)]
    pub s0: f64,
    #[arg(long = "r", default_value_t = 0.0, allow_hyphen_values = true)]
    pub r: f64,
    #[arg(long = "q", default_value_t = 0.0, allow_hyphen_values = true)]
    pub q: f64,
    #[arg(long = "T")]
    pub t: f64,
}

#[derive(Args, Debug, Clone)]
pub struct RangeArgs {
    /// Fixed symmetric half-width instead of the cutting-rule search.
    #[arg(long)]
    pub xc: Option<f64>,
    /// Tail mass for the cutting-rule search.
    #[arg(long, default_value_t = 1e-10)]
    pub tail: f64,
    /// Cumulant rule `c1 +- L sqrt(c2 + sqrt(c4))` with this `L`.
    #[arg(long = "cumulant-l", conflicts_with = "xc")]
    pub cumulant_l: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PriceMethod {
    Sinc,
    SincFft,
    SincFrfft,
    Cos,
    Lewis,
    Carrmadan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Put,
    Call,
    Con,
    Aon,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PriceArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub market: MarketArgs,
    #[command(flatten)]
    pub range: RangeArgs,
    /// Strikes, comma separated or repeated.
    #[arg(long = "K", required = true, value_delimiter = ',')]
    pub strikes: Vec<f64>,
    #[arg(long, value_enum, default_value_t = PriceMethod::Sinc)]
    pub method: PriceMethod,
    #[arg(long, value_enum, default_value_t = Kind::Put)]
    pub kind: Kind,
    /// Characteristic function evaluations (grid size for Lewis and Carr-Madan).
    #[arg(long = "nf", default_value_t = 256)]
    pub n_f: usize,
    /// Spacing multiplier for Lewis and Carr-Madan.
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    /// Strike compression for the FFT methods; chosen to fit the strikes if omitted.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Damping for Carr-Madan.
    #[arg(long = "alpha", default_value_t = 0.4)]
    pub alpha_cm: f64,
    /// Also print the Black-Scholes implied volatility.
    #[arg(long)]
    pub iv: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct TableArgs {
    #[arg(long)]
    pub id: String,
    /// `reported`, `search` or a half-width.
    #[arg(long, default_value = "reported")]
    pub xc: String,
    /// Evaluations per leg behind each benchmark source.
    #[arg(long = "benchmark-nf")]
    pub benchmark_nf: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct PdfArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub market: MarketArgs,
    #[command(flatten)]
    pub range: RangeArgs,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    /// Frequency slots for the density series.
    #[arg(long = "nf", default_value_t = 2048)]
    pub n_f: usize,
    /// Add the distribution function column.
    #[arg(long)]
    pub cdf: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Competitor {
    Lewis,
    Carrmadan,
}

#[derive(Args, Debug, Clone)]
pub struct SurfaceArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long = "r", default_value_t = 0.0, allow_hyphen_values = true)]
    pub r: f64,
    /// `K,T` CSV; the synthetic surface is used if omitted.
    #[arg(long)]
    pub surface: Option<PathBuf>,
    /// Strikes per maturity on the synthetic surface.
    #[arg(long = "strikes-per-maturity", default_value_t = 11)]
    pub strikes_per_maturity: usize,
    /// At-the-money variance setting the synthetic log-moneyness reach.
    #[arg(long = "atm-variance")]
    pub atm_variance: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    #[arg(long, value_enum, default_value_t = Competitor::Lewis)]
    pub method: Competitor,
    #[arg(long = "nf")]
    pub n_f: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 0.71, 1.0, 1.41, 2.0, 2.83, 4.0, 8.0])]
    pub betas: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct RankArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    #[arg(long, default_value_t = 1e-6)]
    pub target: f64,
    #[arg(long = "nf", value_delimiter = ',', default_values_t = [256, 512, 1024, 2048, 4096, 8192])]
    pub n_fs: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.71, 1.0, 1.41, 2.0, 2.83, 4.0, 5.66, 8.0])]
    pub betas: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Pricing(#[from] PricingError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Pricing(
                PricingError::InvalidParameter { .. }
                | PricingError::Config(_)
                | PricingError::UnknownTable(_),
            ) => 2,
            CliError::Pricing(_) => 3,
        }
    }

    fn kind(&self) -> String {
        match self {
            CliError::Usage(_) => "Usage".into(),
            CliError::Io { .. } => "Io".into(),
            CliError::Pricing(e) => {
                let dbg = format!("{e:?}");
                dbg.split(|c: char| !c.is_alphanumeric())
                    .next()
                    .unwrap_or("Pricing")
                    .to_string()
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Price(a) => commands::price(&a),
        Command::Table(a) => commands::table(&a),
        Command::Pdf(a) => commands::pdf(&a),
        Command::BetaSweep(a) => commands::beta_sweep(&a),
        Command::Rank(a) => commands::rank(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body =
                serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{body}");
            ExitCode::from(e.exit_code())
        }
    }
}
