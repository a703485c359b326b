use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, ValueEnum};

use charvar_core::harness::{self, ExperimentConfig, Format, Subcommand};
use charvar_core::matgroups::GroupKind;

/// Character fingerprints, trace-algebra checks and conjugacy experiments.
///
/// Exit status: 0 when the report verdict is pass, 1 when it is fail,
/// 2 on configuration or input errors.
#[derive(Parser)]
#[command(name = "charvar", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Fricke polynomials against direct SL(2) traces on seeded samples.
    FrickeCheck(Options),
    /// Fingerprint separation of conjugate and independent pairs.
    Separation(Options),
    /// Trace-preserving outer automorphism catalog.
    OuttCatalog(Options),
    /// SO(2m) character collision from the flip (sl(n) gives a control).
    Collision(Options),
    /// Flip against in-group conjugacy on irreducible SO(2m) samples.
    Freeness(Options),
    /// Conjugacy certificate for two representation files; --group sets the target.
    Conjugacy(Options),
    /// Fingerprint of a representation file.
    Fingerprint(Options),
}

#[derive(Args)]
struct Options {
    /// Group kind such as sl2, so4, sp4, adsl3.
    #[arg(long)]
    group: Option<GroupKind>,
    #[arg(long)]
    rank: Option<usize>,
    /// Maximum word length.
    #[arg(long)]
    length: Option<usize>,
    #[arg(long, visible_alias = "samples")]
    trials: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Representation file; repeat for conjugacy.
    #[arg(long = "input")]
    inputs: Vec<PathBuf>,
    /// Use determinant −1 conjugators in separation trials.
    #[arg(long)]
    flip: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

fn config(command: Command) -> ExperimentConfig {
    let (subcommand, o) = match command {
        Command::FrickeCheck(o) => (Subcommand::FrickeCheck, o),
        Command::Separation(o) => (Subcommand::Separation, o),
        Command::OuttCatalog(o) => (Subcommand::OuttCatalog, o),
        Command::Collision(o) => (Subcommand::Collision, o),
        Command::Freeness(o) => (Subcommand::Freeness, o),
        Command::Conjugacy(o) => (Subcommand::Conjugacy, o),
        Command::Fingerprint(o) => (Subcommand::Fingerprint, o),
    };
    ExperimentConfig {
        subcommand,
        group: o.group,
        rank: o.rank,
        length: o.length,
        trials: o.trials,
        seed: o.seed,
        tol: o.tol,
        out: o.out,
        format: match o.format {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        },
        inputs: o.inputs,
        flip: o.flip,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = config(cli.command);
    let outcome = match harness::run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("charvar: {e}");
            return ExitCode::from(2);
        }
    };
    let text = outcome.render();
    match &cfg.out {
        Some(path) => {
            if let Err(e) = fs::write(path, &text) {
                eprintln!("charvar: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    if outcome.report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
