use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kcfgpf::bench::{run_bench, run_sequence};
use kcfgpf::config::load_config;
use kcfgpf::core::corrfilter::FilterKind;
use kcfgpf::core::metrics::evaluate;
use kcfgpf::core::synthetic::{gen_synthetic, SyntheticScript};
use kcfgpf::core::TrackerConfig;
use kcfgpf::results::{emit_results, read_predictions};
use kcfgpf::sequence::{load_sequence, write_sequence};
use kcfgpf::{Error, Result};

#[derive(Parser)]
#[command(name = "kcfgpf", version, about = "KCF-GPF ensemble tracker and benchmark harness")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track one OTB-style sequence directory and score it.
    Track {
        seq_dir: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Score an existing boxes file against a sequence's ground truth.
    Eval {
        pred: PathBuf,
        seq_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        max_frames: Option<usize>,
    },
    /// Write a scripted synthetic sequence to disk in the OTB layout.
    Synth {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(SyntheticScript::names()))]
        name: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Track every sequence under a dataset root and aggregate the scores.
    Bench {
        root: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    out: PathBuf,
    /// Flat key=value tracker configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Only use the first N frames of each sequence.
    #[arg(long)]
    max_frames: Option<usize>,
    #[arg(long, value_enum)]
    kernel: Option<Kernel>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kernel {
    Linear,
    Gaussian,
}

impl RunArgs {
    fn tracker_config(&self) -> Result<TrackerConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => TrackerConfig::default(),
        };
        cfg.seed = self.seed;
        if let Some(k) = self.kernel {
            cfg.kernel = match k {
                Kernel::Linear => FilterKind::Linear,
                Kernel::Gaussian => FilterKind::GaussianKernel,
            };
        }
        Ok(cfg)
    }
}

fn eval(pred: &Path, seq_dir: &Path, out: &Path, max_frames: Option<usize>) -> Result<()> {
    let mut seq = load_sequence(seq_dir)?;
    let mut boxes = read_predictions(pred)?;
    if let Some(n) = max_frames {
        seq.truncate(n);
        boxes.truncate(n);
    }
    let result = evaluate(&boxes, &seq.ground_truth, 0.0)?;
    emit_results(&seq.name, None, &result, out)?;
    println!("{}: precision@20 {:.3}, success AUC {:.3}", seq.name, result.precision_20(), result.success_auc());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Track { seq_dir, run } => {
            let (seq, result) = run_sequence(&seq_dir, &run.tracker_config()?, run.max_frames, &run.out)?;
            println!(
                "{}: {} frames, precision@20 {:.3}, success AUC {:.3}, {:.1} fps",
                seq.name,
                seq.len(),
                result.precision_20(),
                result.success_auc(),
                result.mean_fps
            );
        }
        Command::Eval {
            pred,
            seq_dir,
            out,
            max_frames,
        } => eval(&pred, &seq_dir, &out, max_frames)?,
        Command::Synth { name, out, seed } => {
            let script = SyntheticScript::by_name(&name).ok_or_else(|| Error::Format {
                path: out.clone(),
                message: format!("unknown script {name}"),
            })?;
            write_sequence(&gen_synthetic(&script, seed), &out)?;
            println!("wrote {} frames to {}", script.len(), out.display());
        }
        Command::Bench { root, run } => {
            let report = run_bench(&root, &run.tracker_config()?, run.max_frames, &run.out)?;
            let agg = &report.aggregate;
            println!(
                "{} sequences ({} failed): precision@20 {:.3}, success AUC {:.3}, mean {:.1} fps",
                agg.names.len(),
                report.failures.len(),
                agg.precision.precision_20(),
                agg.success.auc,
                agg.mean_fps
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
