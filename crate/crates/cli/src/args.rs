//! Command-line grammar and value parsers.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lightcone_core::couplings::{Boundary, Exponent};

#[derive(Debug, Parser)]
#[command(name = "lightcone", version, about = "Lieb-Robinson bounds and quench dynamics for power-law spin chains")]
pub struct Cli {
    /// Cap on worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form bounds.
    #[command(subcommand)]
    Bound(BoundCommand),
    /// Quench simulations.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Dense exact diagonalization of a small chain.
    Oracle(OracleArgs),
    /// Check the reproducibility conditions and hopping-sum bounds.
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum BoundCommand {
    /// Tabulate the hybrid and Hastings-Koma bounds on an (r, t) grid.
    Eval(BoundEvalArgs),
    /// Times at which the bounds reach epsilon, with the crossover distance.
    Contour(BoundContourArgs),
}

#[derive(Debug, Subcommand)]
pub enum SimCommand {
    /// XY chain in the single-excitation sector.
    Xy(SimXyArgs),
    /// Transverse-field Ising chain by Krylov time stepping.
    Tfim(SimTfimArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Xy,
    Tfim,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output file; stdout when absent. Relative paths are resolved against
    /// LIGHTCONE_OUTPUT_DIR when it is set.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuArg {
    Fixed(f64),
    Opt,
}

impl std::fmt::Display for MuArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MuArg::Fixed(mu) => write!(f, "{mu}"),
            MuArg::Opt => f.write_str("opt"),
        }
    }
}

#[derive(Debug, Args)]
pub struct BoundEvalArgs {
    /// Comma-separated exponents; `inf` is the nearest-neighbor limit.
    #[arg(long, value_parser = parse_alphas)]
    pub alpha: AlphaList,
    /// Distances `lo:hi` (inclusive), a single value, or a comma list.
    #[arg(long, value_parser = parse_distances)]
    pub r: DistanceList,
    /// Times: a value, a comma list, or `start:stop:count` (inclusive).
    #[arg(long, value_parser = parse_times)]
    pub t: TimeList,
    /// `opt` or a fixed value in (0, 1).
    #[arg(long, value_parser = parse_mu, default_value = "opt")]
    pub mu: MuArg,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BoundContourArgs {
    #[arg(long, value_parser = parse_alphas)]
    pub alpha: AlphaList,
    #[arg(long, default_value_t = 1e-3, value_parser = parse_epsilon)]
    pub epsilon: f64,
    #[arg(long, value_parser = parse_distances, default_value = "1:200")]
    pub r: DistanceList,
    #[arg(long, value_parser = parse_mu, default_value = "0.5")]
    pub mu: MuArg,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    #[arg(long, value_parser = parse_alphas)]
    pub alpha: AlphaList,
    /// Number of sites.
    #[arg(long = "N")]
    pub sites: usize,
    #[arg(long, value_parser = parse_boundary, default_value = "periodic")]
    pub boundary: Boundary,
    #[arg(long, value_parser = parse_times)]
    pub t: TimeList,
    /// Site the quench acts on.
    #[arg(long, default_value_t = 0)]
    pub quench_site: usize,
}

#[derive(Debug, Args)]
pub struct SimXyArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Append bound columns and a per-row compliance flag.
    #[arg(long)]
    pub check_bounds: bool,
    /// Compare against dense diagonalization (N <= 12).
    #[arg(long)]
    pub oracle_check: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimTfimArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Transverse field.
    #[arg(long = "Bz", default_value_t = 0.5)]
    pub b_z: f64,
    #[arg(long, default_value_t = 30)]
    pub krylov_m: usize,
    #[arg(long, default_value_t = 0.05)]
    pub krylov_dt: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub krylov_tol: f64,
    /// Memory cap in bytes; K, M, G and T suffixes are binary multiples.
    #[arg(long, value_parser = parse_bytes, default_value = "8G")]
    pub memory_budget: u64,
    #[arg(long)]
    pub check_bounds: bool,
    #[arg(long)]
    pub oracle_check: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, value_enum, default_value = "xy")]
    pub model: ModelArg,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[arg(long = "Bz", default_value_t = 0.5)]
    pub b_z: f64,
    /// Write the quenched state at the last time as little-endian (re, im) doubles.
    #[arg(long)]
    pub dump_state: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_parser = parse_alphas, default_value = "3")]
    pub alpha: AlphaList,
    /// Window size.
    #[arg(long = "N", default_value_t = 401)]
    pub sites: usize,
    #[arg(long, value_parser = parse_boundary, default_value = "open")]
    pub boundary: Boundary,
    #[arg(long, default_value_t = 50)]
    pub max_r: u64,
    #[arg(long, default_value_t = 6)]
    pub max_n: usize,
    /// Single check of J_n at distance r (needs --r).
    #[arg(long, requires = "r")]
    pub n: Option<usize>,
    #[arg(long, requires = "n")]
    pub r: Option<u64>,
    /// JSON report path.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaList(pub Vec<Exponent>);

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceList(pub Vec<u64>);

#[derive(Debug, Clone, PartialEq)]
pub struct TimeList(pub Vec<f64>);

fn parse_alphas(s: &str) -> Result<AlphaList, String> {
    let list = s
        .split(',')
        .map(|tok| Exponent::from_str(tok).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AlphaList(list))
}

fn parse_u64(tok: &str) -> Result<u64, String> {
    tok.trim().parse().map_err(|_| format!("'{tok}' is not a non-negative integer"))
}

fn parse_f64(tok: &str) -> Result<f64, String> {
    tok.trim().parse().map_err(|_| format!("'{tok}' is not a number"))
}

fn parse_distances(s: &str) -> Result<DistanceList, String> {
    let list = if let Some((lo, hi)) = s.split_once(':') {
        let (lo, hi) = (parse_u64(lo)?, parse_u64(hi)?);
        if hi < lo {
            return Err(format!("empty range {lo}:{hi}"));
        }
        (lo..=hi).collect()
    } else {
        s.split(',').map(parse_u64).collect::<Result<Vec<_>, _>>()?
    };
    if list.contains(&0) {
        return Err("distances must be at least 1".into());
    }
    Ok(DistanceList(list))
}

fn parse_times(s: &str) -> Result<TimeList, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let list = match parts.as_slice() {
        [start, stop, count] => {
            let (a, b) = (parse_f64(start)?, parse_f64(stop)?);
            let n = parse_u64(count)? as usize;
            match n {
                0 => return Err("time grid count must be positive".into()),
                1 => vec![a],
                _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
            }
        }
        [single] => single.split(',').map(parse_f64).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(format!("'{s}' is not a time, a comma list, or start:stop:count")),
    };
    if let Some(t) = list.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(format!("time {t} must be finite and non-negative"));
    }
    if list.windows(2).any(|w| w[1] < w[0]) {
        return Err("times must be ascending".into());
    }
    Ok(TimeList(list))
}

fn parse_mu(s: &str) -> Result<MuArg, String> {
    if s.trim().eq_ignore_ascii_case("opt") {
        return Ok(MuArg::Opt);
    }
    let mu = parse_f64(s)?;
    if mu > 0.0 && mu < 1.0 {
        Ok(MuArg::Fixed(mu))
    } else {
        Err(format!("mu = {mu} must lie strictly inside (0, 1), or be 'opt'"))
    }
}

fn parse_epsilon(s: &str) -> Result<f64, String> {
    let e = parse_f64(s)?;
    if e > 0.0 && e < 1.0 {
        Ok(e)
    } else {
        Err(format!("epsilon = {e} must lie strictly inside (0, 1)"))
    }
}

fn parse_boundary(s: &str) -> Result<Boundary, String> {
    Boundary::from_str(s)
}

fn parse_bytes(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let (num, shift) = match s.chars().last().map(|c| c.to_ascii_uppercase()) {
        Some('K') => (&s[..s.len() - 1], 10),
        Some('M') => (&s[..s.len() - 1], 20),
        Some('G') => (&s[..s.len() - 1], 30),
        Some('T') => (&s[..s.len() - 1], 40),
        _ => (s, 0),
    };
    let n = parse_u64(num)?;
    n.checked_mul(1u64 << shift).ok_or_else(|| format!("memory budget '{s}' overflows"))
}
