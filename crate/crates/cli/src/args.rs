use std::ops::RangeInclusive;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use paucity::enumeration::DEFAULT_MEMORY_BUDGET;
use paucity::Variant;

#[derive(Parser, Debug)]
#[command(name = "paucity", version, about = "Exact experiments on odd power sum systems")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Worker threads for counting
    #[arg(long, global = true, env = "PAUCITY_THREADS", default_value_t = 1,
          value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: u64,
    /// Refuse scans whose estimated peak memory exceeds this many bytes
    #[arg(long, global = true, env = "PAUCITY_MEMORY_BUDGET", default_value_t = DEFAULT_MEMORY_BUDGET)]
    pub memory_budget: u64,
    /// Directory holding the count journal
    #[arg(long, global = true, env = "PAUCITY_CACHE")]
    pub cache: Option<PathBuf>,
    #[arg(long, global = true, env = "PAUCITY_FORMAT", value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Seed for randomized sampling
    #[arg(long, global = true, env = "PAUCITY_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact exponents alpha_k, beta_k and alpha_{k,d}
    Exponents(ExponentsArgs),
    /// Count all, diagonal and non-trivial solutions in a box
    Count(CountArgs),
    /// Count along a ladder of box sizes and fit a log-log slope
    Survey(SurveyArgs),
    /// Construct the relation among odd power sums
    Upsilon(UpsilonArgs),
    /// Run the product relations, u matrix and gcd cascade on a solution
    Cascade(CascadeArgs),
    /// Minimize r + lambda/r over positive integers
    DiscreteMin(DiscreteMinArgs),
    /// Count u matrices compatible with a prefix
    Psi(PsiArgs),
}

pub fn parse_range(s: &str) -> Result<RangeInclusive<u64>, String> {
    let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("{t:?}: {e}"));
    match s.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (num(a)?, num(b)?);
            if a > b {
                return Err(format!("empty range {s}"));
            }
            Ok(a..=b)
        }
        None => {
            let v = num(s)?;
            Ok(v..=v)
        }
    }
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: paucity::systems::SystemsError| e.to_string())
}

#[derive(Args, Debug)]
pub struct ExponentsArgs {
    /// k or an inclusive range a..b
    #[arg(long, env = "PAUCITY_K", value_parser = parse_range)]
    pub k: RangeInclusive<u64>,
    /// Inner exponent for alpha_{k,d}
    #[arg(long, env = "PAUCITY_D", default_value_t = 1)]
    pub d: u64,
}

#[derive(Args, Debug)]
pub struct SystemArgs {
    #[arg(long, env = "PAUCITY_VARIANT", value_parser = parse_variant, default_value = "positive")]
    pub variant: Variant,
    #[arg(long, env = "PAUCITY_K")]
    pub k: usize,
    #[arg(long, env = "PAUCITY_D", default_value_t = 1)]
    pub d: u32,
}

#[derive(Args, Debug)]
pub struct CountArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Box size P
    #[arg(long, env = "PAUCITY_PMAX")]
    pub pmax: u64,
    /// Write non-trivial solutions as CSV rows to this file
    #[arg(long, env = "PAUCITY_LIST")]
    pub list: Option<PathBuf>,
    /// Maximum number of listed classes
    #[arg(long, env = "PAUCITY_LIMIT")]
    pub limit: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SurveyArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Comma-separated, strictly increasing box sizes
    #[arg(long, env = "PAUCITY_LADDER", value_delimiter = ',', required = true)]
    pub ladder: Vec<u64>,
}

#[derive(Args, Debug)]
pub struct UpsilonArgs {
    #[arg(long, env = "PAUCITY_K")]
    pub k: usize,
    /// Also expand the factor identity and report its constant
    #[arg(long, env = "PAUCITY_VERIFY_IDENTITY")]
    pub verify_identity: bool,
}

#[derive(Args, Debug)]
pub struct CascadeArgs {
    #[arg(long, env = "PAUCITY_K")]
    pub k: usize,
    #[arg(long, env = "PAUCITY_R")]
    pub r: usize,
    /// Comma-separated solution of length 2k+2
    #[arg(long, env = "PAUCITY_SOLUTION", value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub solution: Vec<i64>,
    /// Box size; defaults to the largest |z_i|
    #[arg(long, env = "PAUCITY_PMAX")]
    pub pmax: Option<u64>,
}

#[derive(Args, Debug)]
pub struct DiscreteMinArgs {
    /// Positive rational, e.g. 6 or 7/2
    #[arg(long, env = "PAUCITY_LAMBDA")]
    pub lambda: String,
    /// Restrict r to an inclusive range a..b
    #[arg(long, env = "PAUCITY_RANGE", value_parser = parse_range)]
    pub range: Option<RangeInclusive<u64>>,
}

#[derive(Args, Debug)]
pub struct PsiArgs {
    #[arg(long, env = "PAUCITY_K")]
    pub k: usize,
    #[arg(long, env = "PAUCITY_R")]
    pub r: usize,
    /// Comma-separated prefix of length r
    #[arg(long, env = "PAUCITY_PREFIX", value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub prefix: Vec<i64>,
    #[arg(long, env = "PAUCITY_PMAX")]
    pub pmax: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("2..4").unwrap(), 2..=4);
        assert_eq!(parse_range("7").unwrap(), 7..=7);
        assert!(parse_range("4..2").is_err());
        assert!(parse_range("a..2").is_err());
    }

    #[test]
    fn comma_lists() {
        let cli = Cli::try_parse_from([
            "paucity", "cascade", "--k", "2", "--r", "3", "--solution", "2,3,6,-1,-5,-5",
        ])
        .unwrap();
        let Command::Cascade(a) = cli.command else { panic!() };
        assert_eq!(a.solution, vec![2, 3, 6, -1, -5, -5]);
        let cli = Cli::try_parse_from(["paucity", "survey", "--k", "2", "--ladder", "20,40,80"])
            .unwrap();
        let Command::Survey(a) = cli.command else { panic!() };
        assert_eq!(a.ladder, vec![20, 40, 80]);
        assert!(Cli::try_parse_from(["paucity", "survey", "--k", "2", "--ladder", "20,x"]).is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
