//! `flatcone <subcommand> --config <file.json> --out <path> [--seed N] [--format csv|jsonl]`

mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, ValueEnum};

use config::Format;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subcommand {
    /// Per-degree isometry and its limit.
    Isometry,
    /// Duistermaat–Heckman measures and their convergence.
    Dh,
    /// Fubini–Study weights and quantised distances.
    Quantise,
    /// Brute-force submultiplicativity of modified filtrations.
    Submult,
    /// Distortion bound sweep over dimensions.
    Distortion,
    /// Constant speed along rays of modified norms.
    Ray,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Debug, Parser)]
#[command(name = "flatcone", version, about = "Runs norm-geometry experiments and writes result tables")]
struct Cli {
    #[arg(value_enum)]
    subcommand: Subcommand,
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output table; overrides the path in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized sweeps.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output format; overrides the configuration.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_VIOLATION: u8 = 4;
const EXIT_IO: u8 = 1;

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = unix_now();
    let bytes = match std::fs::read(&cli.config) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("config error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let exp = match config::parse(&bytes, cli.subcommand) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let spec = exp.output.clone();
    let format = match cli.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Jsonl) => Format::Jsonl,
        None => spec.as_ref().and_then(|o| o.format).unwrap_or(Format::Csv),
    };
    let Some(out) = cli.out.clone().or_else(|| spec.and_then(|o| o.path).map(PathBuf::from)) else {
        eprintln!("config error at /output/path: no output path given");
        return ExitCode::from(EXIT_CONFIG);
    };

    let outcome = match experiments::run(cli.subcommand, &exp, cli.seed) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_NUMERICAL);
        }
    };
    if let Err(e) = output::write_table(&outcome.rows, &out, format) {
        eprintln!("cannot write {}: {e}", out.display());
        return ExitCode::from(EXIT_IO);
    }
    let sub_name = cli.subcommand.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let meta = output::Metadata {
        config_sha256: output::sha256_hex(&bytes),
        tool_version: env!("CARGO_PKG_VERSION"),
        subcommand: &sub_name,
        seed: cli.seed,
        format: match format {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        },
        rows: outcome.rows.len(),
        violations: &outcome.violations,
        started_unix: started,
        finished_unix: unix_now(),
    };
    let meta_path = output::sidecar_path(&out);
    if let Err(e) = output::write_metadata(&meta, &meta_path) {
        eprintln!("cannot write {}: {e}", meta_path.display());
        return ExitCode::from(EXIT_IO);
    }
    if outcome.violations.is_empty() {
        ExitCode::SUCCESS
    } else {
        for v in &outcome.violations {
            eprintln!("property violation: {v}");
        }
        ExitCode::from(EXIT_VIOLATION)
    }
}
