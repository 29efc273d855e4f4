//! Command-line driver. Every command is deterministic given the config
//! file and seed; rerunning writes byte-identical outputs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use seizdet_cli::{commands, config, fail};

#[derive(Parser)]
#[command(
    name = "seizdet",
    version,
    about = "Neonatal EEG seizure detection: synthesis, training, scoring, fusion, cross-validation"
)]
struct Cli {
    /// Experiment config file (TOML); defaults apply when omitted
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed (overrides the config)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the config)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for cross-validation (overrides the config)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset into the data directory
    Synth {
        /// Number of subjects to generate
        #[arg(long)]
        subjects: Option<usize>,
    },
    /// Print an architecture summary (cnn11 | cnn6 | baseline)
    Inspect {
        arch: String,
        /// Override the input window length in samples
        #[arg(long)]
        input_len: Option<usize>,
    },
    /// Train one model on every subject in the data directory
    Train {
        /// Architecture override (cnn11 | cnn6 | baseline)
        #[arg(long)]
        arch: Option<String>,
    },
    /// Write raw probability traces for every subject with a saved model
    Score {
        /// Model file stem (default: <out>/<configured arch>)
        #[arg(long, value_name = "STEM")]
        model: Option<PathBuf>,
        /// Trace file tag: writes <id>.<tag>.trace.csv
        #[arg(long)]
        tag: Option<String>,
    },
    /// Post-process and score one trace against a label file
    Eval {
        /// Probability trace CSV
        #[arg(long, value_name = "PATH")]
        trace: PathBuf,
        /// Label CSV
        #[arg(long, value_name = "PATH")]
        labels: PathBuf,
        /// Score the raw trace: no smoothing, adaptation, or collar
        #[arg(long)]
        no_post: bool,
    },
    /// Blend two probability traces (weight applies to the first)
    Fuse {
        trace_a: PathBuf,
        trace_b: PathBuf,
        /// Blend weight in [0, 1] (overrides the config)
        #[arg(long)]
        alpha: Option<f64>,
        /// arithmetic | geometric (overrides the config)
        #[arg(long)]
        mode: Option<String>,
        /// Output path (default: <out>/fused.trace.csv)
        #[arg(long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Sweep blend weights over saved per-subject trace pairs
    Sweep {
        /// Tag of the first (network) trace set
        #[arg(long, default_value = "cnn")]
        tag_a: String,
        /// Tag of the second (baseline) trace set
        #[arg(long, default_value = "baseline")]
        tag_b: String,
    },
    /// Leave-one-subject-out cross-validation with the baseline alongside
    Loo {
        /// Use only the first N subjects in id order
        #[arg(long)]
        subjects: Option<usize>,
    },
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let cfg = config::load(cli.config.as_deref())?;
    let ctx = commands::Ctx {
        data_dir: cfg.paths.data_dir.clone(),
        out_dir: cli.out.unwrap_or_else(|| cfg.paths.out_dir.clone()),
        seed: cli.seed.unwrap_or(cfg.experiment.master_seed),
        threads: cli.threads.unwrap_or(cfg.experiment.threads).max(1),
        cfg,
    };
    match cli.command {
        Command::Synth { subjects } => commands::synth::run(&ctx, subjects),
        Command::Inspect { arch, input_len } => commands::inspect::run(&arch, input_len),
        Command::Train { arch } => commands::train::run(&ctx, arch),
        Command::Score { model, tag } => commands::score::run(&ctx, model, tag),
        Command::Eval { trace, labels, no_post } => {
            commands::eval::run(&ctx, &trace, &labels, no_post)
        }
        Command::Fuse { trace_a, trace_b, alpha, mode, output } => {
            commands::fuse::run(&ctx, &trace_a, &trace_b, alpha, mode, output)
        }
        Command::Sweep { tag_a, tag_b } => commands::sweep::run(&ctx, &tag_a, &tag_b),
        Command::Loo { subjects } => commands::loo::run(&ctx, subjects),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version print with success; anything else is a
            // usage error.
            let code: u8 = if e.exit_code() == 0 { 0 } else { 1 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(fail::exit_code(&err) as u8)
        }
    }
}
