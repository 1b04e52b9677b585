use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pcsft_lab::{emit_report, run_experiment, Experiment, ExperimentConfig, Format};

/// Run a field-theory experiment from a TOML config and write its report.
#[derive(Parser)]
#[command(name = "pcsft", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gaussian field: estimated state and detection probabilities vs the Born rule.
    Born(RunArgs),
    /// Pure field: support on its line and the rank-one converse.
    Purestate(RunArgs),
    /// Common-driver superposition: rank-one covariance and maximal correlation.
    Superposition(RunArgs),
    /// Correlation decay under phase noise.
    Decoherence(RunArgs),
    /// Threshold race over a sweep of thresholds.
    DetectionSweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds replacing the configured list.
    #[arg(long, value_delimiter = ',')]
    seed_override: Option<Vec<u64>>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (want, args) = match cli.command {
        Command::Born(a) => (Experiment::Born, a),
        Command::Purestate(a) => (Experiment::Purestate, a),
        Command::Superposition(a) => (Experiment::Superposition, a),
        Command::Decoherence(a) => (Experiment::Decoherence, a),
        Command::DetectionSweep(a) => (Experiment::DetectionSweep, a),
    };
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let mut cfg = match ExperimentConfig::from_toml(&text) {
        Ok(c) => c,
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(2);
        }
    };
    if cfg.experiment != want {
        eprintln!("config is for `{}`, not `{want}`", cfg.experiment);
        return ExitCode::from(2);
    }
    if let Some(seeds) = args.seed_override {
        cfg.seeds = seeds;
    }
    let out = args.out.unwrap_or_else(|| PathBuf::from(&cfg.out));
    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(2);
        }
    };
    match emit_report(&report, args.format, &out) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("cannot write to {}: {e}", out.display());
            return ExitCode::from(2);
        }
    }
    for v in &report.verdicts {
        println!(
            "{} {:<22} {}/{} seeds",
            if v.passed { "PASS" } else { "FAIL" },
            v.check,
            v.seeds_passed,
            v.seeds_total
        );
    }
    for e in &report.errors {
        println!("ERROR seed {:?}: {}", e.seed, e.message);
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
