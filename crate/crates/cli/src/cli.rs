use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "vvix", version, about = "Theoretical VVIX under the Heston model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One row of F_VIX, log-contract, replication and simple VVIX.
    Vvix(VvixArgs),
    /// The row for each of the six preset parameter sets.
    Table1(Table1Args),
    /// PDE VVIX over a ladder of grids.
    PdeTable(PdeTableArgs),
    /// VVIX by every analytic method across a range of vol of vol.
    Sweep(SweepArgs),
    /// Calibrate to a quote CSV.
    Calibrate(CalibrateArgs),
    /// Write model-generated quotes in the calibration CSV format.
    Quotes(QuotesArgs),
    /// Compare quadrature values against Monte Carlo.
    McCheck(McCheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Preset name (set1..set6) or path to a JSON parameter file.
    #[arg(long, default_value = "set1")]
    pub params: String,
    /// Override the correlation.
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct StripArgs {
    /// Highest VIX option strike.
    #[arg(long, default_value_t = vvix_core::replication::DEFAULT_VIX_KMAX)]
    pub kmax: f64,
    /// VIX option strike spacing.
    #[arg(long, default_value_t = vvix_core::replication::DEFAULT_VIX_DK)]
    pub dk: f64,
}

#[derive(Debug, Args)]
pub struct VvixArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub strip: StripArgs,
    /// Append Monte Carlo columns.
    #[arg(long)]
    pub mc_check: bool,
    #[arg(long, default_value_t = 1_000_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct Table1Args {
    #[command(flatten)]
    pub strip: StripArgs,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct PdeTableArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Lowest VIX option strike.
    #[arg(long, default_value_t = 10.0)]
    pub k1: f64,
    #[command(flatten)]
    pub strip: StripArgs,
    /// Grid `N,M,L`; repeat for several rows. Defaults to the five-row ladder.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Vec<(usize, usize, usize)>,
    #[arg(long, default_value_t = 100.0)]
    pub spot: f64,
    /// Number of SPX strikes in the VIX strip.
    #[arg(long, default_value_t = vvix_core::pde::DEFAULT_SPX_STRIKES)]
    pub spx_strikes: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Vol-of-vol range `lo:hi:step`.
    #[arg(long, value_parser = parse_sweep, default_value = "0.1:3.0:0.05")]
    pub sweep: (f64, f64, f64),
    /// Lowest VIX option strike of the replication column.
    #[arg(long, default_value_t = 5.0)]
    pub k1: f64,
    #[command(flatten)]
    pub strip: StripArgs,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Weights {
    Uniform,
    Discount,
    Vega,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FloorRule {
    Floor,
    PrintedMin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VvixMethodArg {
    Log,
    Simple,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Quote CSV.
    #[arg(long)]
    pub quotes: PathBuf,
    #[arg(long, default_value_t = 100.0)]
    pub spot: f64,
    /// Growth rate of the underlying.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub r: f64,
    /// Dividend rate.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub q: f64,
    #[arg(long, value_enum, default_value = "uniform")]
    pub weights: Weights,
    #[arg(long, default_value_t = vvix_core::calibration::DEFAULT_VEGA_FLOOR)]
    pub vega_floor: f64,
    #[arg(long, value_enum, default_value = "floor")]
    pub floor_rule: FloorRule,
    /// VVIX penalty `weight,target`.
    #[arg(long, value_parser = parse_pair, conflicts_with = "vvix_solve")]
    pub vvix_penalty: Option<(f64, f64)>,
    /// VVIX model used by the penalty.
    #[arg(long, value_enum, default_value = "log")]
    pub vvix_method: VvixMethodArg,
    /// Solve the vol of vol from this simple-VVIX level.
    #[arg(long)]
    pub vvix_solve: Option<f64>,
    #[arg(long)]
    pub fix_kappa: Option<f64>,
    #[arg(long)]
    pub fix_theta: Option<f64>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Result JSON; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QuotesArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 100.0)]
    pub spot: f64,
    /// Maturities in years.
    #[arg(long, value_delimiter = ',', default_value = "0.0833333333333333,0.1666666666666667,0.25,0.5,1")]
    pub maturities: Vec<f64>,
    /// Strikes per maturity.
    #[arg(long, default_value_t = 15)]
    pub strikes: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McCheckArgs {
    /// Preset or JSON path; all six presets when absent.
    #[arg(long)]
    pub params: Option<String>,
    #[arg(long, default_value_t = 1_000_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Pass threshold in standard errors.
    #[arg(long, default_value_t = 3.0)]
    pub sigmas: f64,
}

fn parse_grid(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [n, m, l] => {
            let p = |x: &str| x.parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
            Ok((p(n)?, p(m)?, p(l)?))
        }
        _ => Err(format!("expected N,M,L, got {s:?}")),
    }
}

fn parse_sweep(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let p = |x: &str| x.parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    match parts.as_slice() {
        [lo, hi, step] => {
            let (lo, hi, step) = (p(lo)?, p(hi)?, p(step)?);
            if !(lo > 0.0 && hi >= lo && step > 0.0) {
                return Err(format!("need 0 < lo <= hi and step > 0, got {s:?}"));
            }
            Ok((lo, hi, step))
        }
        _ => Err(format!("expected lo:hi:step, got {s:?}")),
    }
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected weight,target, got {s:?}"))?;
    let p = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok((p(a)?, p(b)?))
}
