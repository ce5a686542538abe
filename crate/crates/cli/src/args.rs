use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use irwin_core::digit_model::Digit;

#[derive(Parser, Debug)]
#[command(name = "irwin", version, about = "Sums of reciprocals of integers with a digit occurring exactly r times")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute one series sigma_d(r) with a certified uncertainty.
    Sum(SumArgs),
    /// Compute sigma_d(r) for r = 0..=r_max.
    Table(TableArgs),
    /// Run the identity and limit checks.
    Verify(VerifyArgs),
    /// Compare engine block sums with brute-force enumeration.
    Oracle(OracleArgs),
    /// Table of sigma_d(r), gaps to 10 ln 10 and C_r, with monotonicity flags.
    Limits(TableArgs),
}

#[derive(Args, Debug)]
pub struct SumArgs {
    #[arg(long, default_value = "9", value_parser = parse_digit)]
    pub digit: Digit,
    #[arg(long, default_value = "0", value_parser = parse_count)]
    pub r: u32,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct TableArgs {
    #[arg(long, default_value = "9", value_parser = parse_digit)]
    pub digit: Digit,
    #[arg(long, default_value = "10", value_parser = parse_count)]
    pub r_max: u32,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value = "9", value_parser = parse_digit)]
    pub digit: Digit,
    #[arg(long, default_value = "20", value_parser = parse_count)]
    pub r_max: u32,
    /// Largest block compared against enumeration.
    #[arg(long, default_value = "4", value_parser = parse_count)]
    pub blocks: u32,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long, default_value = "9", value_parser = parse_digit)]
    pub digit: Digit,
    #[arg(long, default_value = "4", value_parser = parse_count)]
    pub blocks: u32,
    #[arg(long, default_value = "3", value_parser = parse_count)]
    pub r_max: u32,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Engine and series overrides. Unset values are chosen from the tolerance.
#[derive(Args, Debug, Default)]
pub struct EngineArgs {
    /// Working precision in significant decimal digits.
    #[arg(long, value_parser = parse_count)]
    pub precision: Option<u32>,
    /// Absolute bound on the reported uncertainty.
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long, value_parser = parse_count)]
    pub j_max: Option<u32>,
    #[arg(long, value_parser = parse_count)]
    pub trunc_depth: Option<u32>,
    #[arg(long, value_parser = parse_count)]
    pub seed_level: Option<u32>,
    /// Last block index that may be summed.
    #[arg(long, value_parser = parse_count)]
    pub max_blocks: Option<u32>,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the output to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// Nonnegative integer, also accepted in scientific notation (`1e3`).
pub fn parse_count(s: &str) -> Result<u32, String> {
    if let Ok(v) = s.parse::<u32>() {
        return Ok(v);
    }
    let x: f64 = s.trim().parse().map_err(|_| format!("not a number: {s}"))?;
    if !x.is_finite() || x < 0.0 || x.fract() != 0.0 || x > f64::from(u32::MAX) {
        return Err(format!("expected a nonnegative integer, got {s}"));
    }
    Ok(x as u32)
}

fn parse_digit(s: &str) -> Result<Digit, String> {
    Digit::new(parse_count(s)?).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accept_scientific_notation() {
        assert_eq!(parse_count("40"), Ok(40));
        assert_eq!(parse_count("1e3"), Ok(1000));
        assert_eq!(parse_count("2.0E1"), Ok(20));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-1").is_err());
        assert!(parse_count("abc").is_err());
    }

    #[test]
    fn digits_are_range_checked() {
        assert_eq!(parse_digit("9").unwrap(), Digit::NINE);
        assert!(parse_digit("10").is_err());
    }
}
