use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eucompare_core::WdConvention;

mod commands;

/// Compare epistemic uncertainty measures on ensemble predictions.
#[derive(Debug, Parser)]
#[command(name = "eucompare", version)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score every sample of a prediction file under one or more measures.
    Quantify(QuantifyArgs),
    /// Evaluate measures on a downstream task.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Rank measures over repeated runs with paired Wilcoxon tests.
    Rank(RankArgs),
    /// Write a seeded synthetic prediction file.
    Synth(SynthArgs),
    /// Flatten evaluation and ranking files into plot-ready CSV tables.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WdPrefactor {
    /// Half the summed L1 distance.
    Eq8,
    /// The summed L1 distance without the one-half factor.
    Eq9,
}

impl From<WdPrefactor> for WdConvention {
    fn from(p: WdPrefactor) -> Self {
        match p {
            WdPrefactor::Eq8 => WdConvention::Halved,
            WdPrefactor::Eq9 => WdConvention::Full,
        }
    }
}

#[derive(Debug, Clone, Args)]
struct MeasureOptions {
    /// Scaling of the Wasserstein measure.
    #[arg(long, value_enum, default_value = "eq8")]
    wd_prefactor: WdPrefactor,

    /// Worker threads for per-sample scoring (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,

    /// Largest K for credal vertex enumeration.
    #[arg(long, default_value_t = eucompare_core::credal::DEFAULT_VERTEX_CAP)]
    vertex_cap: usize,

    /// Largest K for subset enumeration (GH, MMI).
    #[arg(long, default_value_t = eucompare_core::credal::DEFAULT_SUBSET_CAP)]
    subset_cap: usize,
}

#[derive(Debug, Clone, Args)]
struct QuantifyArgs {
    #[arg(long)]
    input: PathBuf,

    /// Comma-separated measures: mi, lwv, wd, hdiff, gh, mmi.
    #[arg(long)]
    measures: String,

    #[arg(long)]
    output: PathBuf,

    /// Cross-check every score against the brute-force oracles (K <= 4).
    #[arg(long)]
    oracle: bool,

    #[command(flatten)]
    options: MeasureOptions,
}

/// Labels recorded in the result manifest; `rank` groups runs by them.
#[derive(Debug, Clone, Args)]
struct RunLabels {
    #[arg(long, default_value = "unnamed")]
    dataset: String,

    #[arg(long, default_value = "unnamed")]
    model: String,

    /// Run index within a dataset/model pair.
    #[arg(long, default_value_t = 0)]
    run: usize,
}

#[derive(Debug, Subcommand)]
enum EvalCommand {
    /// Accuracy-rejection curves and AUARC.
    Selective(SelectiveArgs),
    /// AUROC of separating OOD from in-distribution samples.
    Ood(OodArgs),
}

#[derive(Debug, Clone, Args)]
struct SelectiveArgs {
    #[arg(long)]
    input: PathBuf,

    /// Measure to evaluate; a comma-separated list evaluates several.
    #[arg(long)]
    measure: String,

    /// `default` (0 to 0.5 by 0.01), a comma list, or start:stop:step.
    #[arg(long, default_value = "default")]
    betas: String,

    #[arg(long)]
    output: PathBuf,

    #[command(flatten)]
    labels: RunLabels,

    #[command(flatten)]
    options: MeasureOptions,
}

#[derive(Debug, Clone, Args)]
struct OodArgs {
    #[arg(long)]
    id: PathBuf,

    #[arg(long)]
    ood: PathBuf,

    /// Measure to evaluate; a comma-separated list evaluates several.
    #[arg(long)]
    measure: String,

    #[arg(long)]
    output: PathBuf,

    #[command(flatten)]
    labels: RunLabels,

    #[command(flatten)]
    options: MeasureOptions,
}

#[derive(Debug, Clone, Args)]
struct RankArgs {
    /// Directory holding evaluation results and their manifests.
    #[arg(long)]
    runs: PathBuf,

    /// intra-dist, intra-credal or inter.
    #[arg(long)]
    scope: String,

    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Clone, Args)]
struct SynthArgs {
    #[arg(long)]
    k: usize,

    #[arg(long)]
    m: usize,

    #[arg(long)]
    n: usize,

    #[arg(long)]
    error_rate: f64,

    #[arg(long)]
    separation: f64,

    #[arg(long)]
    seed: u64,

    /// Fraction of correct samples given one confidently dissenting member.
    #[arg(long, default_value_t = 0.0)]
    outlier_rate: f64,

    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Clone, Args)]
struct ReportArgs {
    /// Evaluation result files (selective or OOD).
    #[arg(long, num_args = 1..)]
    arc: Vec<PathBuf>,

    /// Ranking files written by `rank`.
    #[arg(long, num_args = 1..)]
    sig: Vec<PathBuf>,

    #[arg(long)]
    outdir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();

    let outcome = match cli.command {
        Command::Quantify(args) => commands::quantify(&args),
        Command::Eval(EvalCommand::Selective(args)) => commands::eval_selective(&args),
        Command::Eval(EvalCommand::Ood(args)) => commands::eval_ood(&args),
        Command::Rank(args) => commands::rank(&args),
        Command::Synth(args) => commands::synth(&args),
        Command::Report(args) => commands::report(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
