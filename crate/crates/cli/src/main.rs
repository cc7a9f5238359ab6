//! Command-line front end for the patch-based adversarial input generator.
//!
//! Four verbs: `attack` runs the full pipeline over one input or a dataset
//! and emits a report plus per-success adversarial vectors; `simulate`
//! prints a network's full layer trace on one input; `ingest` converts
//! IDX or CSV datasets into the text vector format the other verbs read;
//! `report` re-checks a report file's aggregates and can emit plot-ready
//! columns.
//!
//! Exit codes: 0 all good, 1 the run finished but some attacks failed,
//! 2 configuration or I/O trouble.

mod attack;
mod idx;
mod ingest;
mod report;
mod simulate;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "patchadv", version, about = "Sparse adversarial inputs via first-layer weight patches")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Attack one input or a dataset and write a report.
    Attack(AttackArgs),
    /// Print the full layer trace of a network on one input.
    Simulate(SimulateArgs),
    /// Convert an IDX or CSV dataset into vector/label text files.
    Ingest(IngestArgs),
    /// Validate a report file's aggregates; optionally emit plot columns.
    Report(ReportArgs),
}

/// Numeric domain for everything downstream of parsing.
#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Arithmetic {
    /// Exact arbitrary-precision rationals.
    Rational,
    /// Double-precision floats.
    Float,
}

#[derive(ValueEnum, Clone, Copy)]
enum ObjectiveOpt {
    /// Minimize the largest absolute weight change.
    MaxNorm,
    /// Minimize the total absolute weight change (faster on wide layers).
    SumAbs,
}

#[derive(ValueEnum, Clone, Copy)]
enum SparsityOpt {
    /// Minimize the total absolute input change.
    Dense,
    /// Minimize how many input positions change (mixed-integer).
    MinPixels,
}

#[derive(ValueEnum, Clone, Copy)]
enum ModeOpt {
    Relaxed,
    Equality,
}

#[derive(clap::Args)]
struct AttackArgs {
    /// Network file.
    #[arg(long)]
    net: PathBuf,
    /// Inline input vector, e.g. "1/2, 1/2" (single-input mode).
    #[arg(long, conflicts_with = "inputs")]
    input: Option<String>,
    /// Vector file with one input per line (batch mode).
    #[arg(long)]
    inputs: Option<PathBuf>,
    /// Label file with one 0-based class per line, aligned with --inputs.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Goal: "argmax != pred" / "argmax != label" / "argmax != 3" /
    /// "o[2] > o[1]" / conjunctions like "o[1] - o[2] >= 1/4 && o[3] <= 0".
    #[arg(long)]
    property: String,
    #[arg(long, value_enum, default_value = "rational")]
    arithmetic: Arithmetic,
    /// Largest allowed absolute weight change (default 5).
    #[arg(long)]
    alpha: Option<String>,
    /// Largest allowed absolute input shift per position (default 1/2).
    #[arg(long)]
    delta_max: Option<String>,
    /// Gap enforced for strict comparisons (default 1/10000).
    #[arg(long)]
    margin: Option<String>,
    #[arg(long, value_enum, default_value = "max-norm")]
    objective: ObjectiveOpt,
    #[arg(long, value_enum, default_value = "min-pixels")]
    sparsity: SparsityOpt,
    #[arg(long, value_enum, default_value = "relaxed")]
    chain: ModeOpt,
    #[arg(long, value_enum, default_value = "relaxed")]
    translation: ModeOpt,
    /// Keep perturbed inputs inside [0, 1] (image data).
    #[arg(long)]
    clamp01: bool,
    /// Skip the patch search: translate straight to these first-hidden-layer
    /// values, e.g. "1/8, 0" (single-input mode only).
    #[arg(long)]
    pin_hidden: Option<String>,
    /// Attack only this many dataset rows, sampled with --seed.
    #[arg(long)]
    samples: Option<usize>,
    /// Sampling seed (default 0).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 means one per core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Output directory for report.txt and adv_<i>.vec files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct SimulateArgs {
    #[arg(long)]
    net: PathBuf,
    /// Inline input vector, e.g. "1/2, 1/2".
    #[arg(long, conflicts_with = "input_file")]
    input: Option<String>,
    /// File holding the input vector.
    #[arg(long)]
    input_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "rational")]
    arithmetic: Arithmetic,
}

#[derive(clap::Args)]
struct IngestArgs {
    /// Dataset format.
    #[arg(long, value_enum)]
    format: FormatOpt,
    /// IDX image file (format idx).
    #[arg(long)]
    images: Option<PathBuf>,
    /// IDX label file (format idx).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// CSV file of pixel rows in [0, 1] (format csv).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory for vectors.txt and labels.txt.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum FormatOpt {
    /// Big-endian IDX (the MNIST container: magic 2051 images, 2049 labels).
    Idx,
    /// Comma-separated rows of values in [0, 1].
    Csv,
}

#[derive(clap::Args)]
struct ReportArgs {
    /// Report file produced by `attack`.
    #[arg(long)]
    report: PathBuf,
    /// Write per-record tab-separated columns here.
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Attack(args) => attack::run(&args),
        Command::Simulate(args) => simulate::run(&args),
        Command::Ingest(args) => ingest::run(&args),
        Command::Report(args) => report::run(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
