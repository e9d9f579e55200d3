//! Flags, TOML config files and their merge. Flags win over the file, the
//! file wins over built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use geordd::{Error, Result};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(
    name = "geordd",
    version,
    about = "Regression discontinuity estimation for metric-space outcomes"
)]
pub struct Cli {
    /// TOML file supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sharp-design effect at the cutoff.
    Sharp(DataArgs),
    /// Fuzzy-design effect for compliers.
    Fuzzy(FuzzyArgs),
    /// Data-adaptive bandwidth search only.
    Bandwidth(DataArgs),
    /// Monte Carlo campaign on a built-in generator.
    Simulate(SimulateArgs),
    /// Load and check an input file.
    Validate(DataArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    /// CSV, or JSON-lines by extension (.jsonl, .ndjson, .json).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// euclid | l2[:a,b] | simplex | sphere | laplacian[:w_max] | spd:<variant> | wass[:a,b]
    #[arg(long)]
    pub space: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub cutoff: Option<f64>,
    /// `auto` or `h0,h1` (a single value sets both sides).
    #[arg(long)]
    pub bw: Option<String>,
    /// triangular | uniform
    #[arg(long)]
    pub kernel: Option<String>,
    /// Output directory; without it the report goes to stdout only.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FuzzyArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// embedding | geodesic | tangent | geodesic-tangent
    #[arg(long)]
    pub fuzzy_variant: Option<String>,
    /// always | never: which noncompliant stratum exists.
    #[arg(long)]
    pub side: Option<String>,
    /// JSON file holding the reference object.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Smallest accepted compliance jump.
    #[arg(long)]
    pub delta_comply: Option<f64>,
    /// Refuse when the noncompliant stratum is empty, even under full
    /// compliance.
    #[arg(long)]
    pub strict_stratum: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    /// network | I | II | III | IV
    #[arg(long)]
    pub setting: Option<String>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Comma-separated sample sizes.
    #[arg(long)]
    pub sizes: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `auto`, `max`, `h0,h1` or `rate:<scale>`.
    #[arg(long)]
    pub bw: Option<String>,
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Every key a config file may set.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub space: Option<String>,
    pub cutoff: Option<f64>,
    pub bw: Option<String>,
    pub kernel: Option<String>,
    pub out: Option<PathBuf>,
    pub fuzzy_variant: Option<String>,
    pub side: Option<String>,
    pub reference: Option<PathBuf>,
    pub delta_comply: Option<f64>,
    pub strict_stratum: Option<bool>,
    pub setting: Option<String>,
    pub reps: Option<usize>,
    pub sizes: Option<Vec<usize>>,
    pub seed: Option<u64>,
    pub grid_size: Option<usize>,
    pub eval_points: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }
}

/// Bandwidth request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BwArg {
    Auto,
    /// Upper end of the automatic search range.
    Max,
    Fixed(f64, f64),
    /// `scale * n^(-1/5)`.
    Rate(f64),
}

impl FromStr for BwArg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || {
            Error::InvalidConfig(format!(
                "bandwidth must be auto, max, h or h0,h1, got `{s}`"
            ))
        };
        let positive = |x: &str| -> Result<f64> {
            let v: f64 = x.trim().parse().map_err(|_| bad())?;
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(bad())
            }
        };
        match s {
            "auto" => Ok(BwArg::Auto),
            "max" => Ok(BwArg::Max),
            _ => {
                if let Some(scale) = s.strip_prefix("rate:") {
                    return Ok(BwArg::Rate(positive(scale)?));
                }
                match s.split_once(',') {
                    Some((a, b)) => Ok(BwArg::Fixed(positive(a)?, positive(b)?)),
                    None => {
                        let h = positive(s)?;
                        Ok(BwArg::Fixed(h, h))
                    }
                }
            }
        }
    }
}

/// Parses `1,2,3` into sizes.
pub fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidConfig(format!("bad sample size `{x}`")))
        })
        .collect()
}

pub fn parse_opt<T: FromStr<Err = Error>>(v: Option<&str>) -> Result<Option<T>> {
    v.map(str::parse).transpose()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bandwidth_forms() {
        assert_eq!("auto".parse::<BwArg>().unwrap(), BwArg::Auto);
        assert_eq!("0.2,0.3".parse::<BwArg>().unwrap(), BwArg::Fixed(0.2, 0.3));
        assert_eq!("0.25".parse::<BwArg>().unwrap(), BwArg::Fixed(0.25, 0.25));
        assert_eq!("rate:1.5".parse::<BwArg>().unwrap(), BwArg::Rate(1.5));
        assert!("-1".parse::<BwArg>().is_err());
        assert!("0,1".parse::<BwArg>().is_err());
    }

    #[test]
    fn unknown_config_keys_rejected() {
        assert!(toml::from_str::<FileConfig>("cutof = 1.0").is_err());
        let c: FileConfig = toml::from_str("cutoff = 0.5\nsizes = [100, 200]").unwrap();
        assert_eq!(c.cutoff, Some(0.5));
        assert_eq!(c.sizes, Some(vec![100, 200]));
    }

    #[test]
    fn sizes_list() {
        assert_eq!(parse_sizes("100, 200,500").unwrap(), vec![100, 200, 500]);
        assert!(parse_sizes("100,x").is_err());
    }
}
