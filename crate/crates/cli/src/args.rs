use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Steklov spectra of cuboids `[-a_1, a_1] x ... x [-a_d, a_d]`.
///
/// Set THREADS to cap the number of worker threads.
#[derive(Debug, Parser)]
#[command(name = "steklov", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sorted eigenvalue table below a threshold.
    Spectrum(SpectrumArgs),
    /// Counting function against the Weyl law on a grid of sigma values.
    Weyl(WeylArgs),
    /// Weyl constants C1 and C2 in a given dimension.
    Constants(ConstantsArgs),
    /// First nonzero eigenvalue and its eigenfunction rates.
    Sigma1(Sigma1Args),
    /// Rectangle half-lengths from a1 + a2 and the first eigenvalue.
    InvertRectangle(InvertArgs),
    /// First eigenvalue against the cube of equal volume or surface area.
    Isoperimetric(IsoArgs),
    /// Boundary mass of high-frequency eigenfunctions near an edge set.
    Concentration(ConcentrationArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exact,
    Quasi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConstraintArg {
    Volume,
    Area,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write to this file instead of standard output.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Comma-separated positive half-lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct Dims(pub Vec<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct Indices(pub Vec<usize>);

#[derive(Debug, Clone, PartialEq)]
pub struct Ranges(pub Vec<(f64, f64)>);

pub fn parse_dims(s: &str) -> Result<Dims, String> {
    let v = parse_list::<f64>(s)?;
    if v.len() < 2 {
        return Err(format!("need at least two half-lengths, got {}", v.len()));
    }
    if let Some(bad) = v.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(format!("half-lengths must be positive and finite, got {bad}"));
    }
    Ok(Dims(v))
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| format!("cannot parse `{t}`")))
        .collect()
}

pub fn parse_indices(s: &str) -> Result<Indices, String> {
    parse_list(s).map(Indices)
}

/// `lo:hi` ranges separated by commas.
pub fn parse_ranges(s: &str) -> Result<Ranges, String> {
    s.split(',')
        .map(|t| {
            let (lo, hi) = t.split_once(':').ok_or_else(|| format!("expected lo:hi, got `{t}`"))?;
            let lo = lo.trim().parse().map_err(|_| format!("cannot parse `{lo}`"))?;
            let hi = hi.trim().parse().map_err(|_| format!("cannot parse `{hi}`"))?;
            Ok((lo, hi))
        })
        .collect::<Result<_, String>>()
        .map(Ranges)
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Half-lengths, e.g. `1,1,1`.
    #[arg(long, value_parser = parse_dims, allow_hyphen_values = true)]
    pub dims: Dims,
    /// List eigenvalues strictly below this value.
    #[arg(long)]
    pub sigma_max: f64,
    #[arg(long, value_enum, default_value = "exact")]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct QuadArgs {
    /// Gauss-Legendre nodes per angle.
    #[arg(long, default_value_t = 32)]
    pub nodes: usize,
    /// Points per shift for high-dimensional quasi-Monte Carlo integrals.
    #[arg(long, default_value_t = 1 << 16)]
    pub qmc_points: usize,
    /// Random shifts for quasi-Monte Carlo integrals.
    #[arg(long, default_value_t = 16)]
    pub qmc_shifts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct WeylArgs {
    #[arg(long, value_parser = parse_dims, allow_hyphen_values = true)]
    pub dims: Dims,
    #[arg(long, default_value_t = 50.0)]
    pub sigma_min: f64,
    #[arg(long, default_value_t = 300.0)]
    pub sigma_max: f64,
    #[arg(long, default_value_t = 0.5)]
    pub step: f64,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    /// Dimension, at least 3.
    #[arg(long)]
    pub dim: usize,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct Sigma1Args {
    #[arg(long, value_parser = parse_dims, allow_hyphen_values = true)]
    pub dims: Dims,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    /// Sum of the two half-lengths, a1 + a2.
    #[arg(long)]
    pub perimeter: f64,
    #[arg(long)]
    pub sigma1: f64,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct IsoArgs {
    /// Half-lengths of a single cuboid.
    #[arg(long, value_parser = parse_dims, allow_hyphen_values = true, conflicts_with = "random")]
    pub dims: Option<Dims>,
    /// Instead of `--dims`, check this many random cuboids.
    #[arg(long, requires = "dim")]
    pub random: Option<usize>,
    /// Dimension of the random cuboids.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Half-lengths of random cuboids are uniform in `lo:hi`.
    #[arg(long, default_value = "0.3:3")]
    pub range: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum)]
    pub constraint: ConstraintArg,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct ConcentrationArgs {
    #[arg(long, value_parser = parse_dims, allow_hyphen_values = true)]
    pub dims: Dims,
    /// Axes carrying the oscillating factors, e.g. `0,1`.
    #[arg(long, value_parser = parse_indices)]
    pub trig: Indices,
    /// Ranges `lo:hi` along the oscillating axes (default: whole edge component).
    #[arg(long, value_parser = parse_ranges, allow_hyphen_values = true)]
    pub patch: Option<Ranges>,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 60)]
    pub k_max: u64,
    #[command(flatten)]
    pub out: Output,
}
