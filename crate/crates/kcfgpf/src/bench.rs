//! Running the tracker over sequences and scoring the result.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use kcfgpf_core::metrics::{evaluate, EvalResult, PrecisionCurve, SuccessCurve};
use kcfgpf_core::{GrayImage, Rect, Tracker, TrackerConfig};

use crate::io::load_frame;
use crate::results::{emit_results, num, precision_csv, success_csv, write_metrics, write_text, Metrics};
use crate::sequence::{load_sequence, Sequence};
use crate::{Error, Result};

/// Boxes of one tracked sequence, the first being the initial box.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackRun {
    pub boxes: Vec<Rect>,
    /// Wall-clock seconds spent inside `Tracker::step`.
    pub step_seconds: f64,
}

impl TrackRun {
    /// Steps per second. Decoding and initialization are excluded.
    pub fn fps(&self) -> f64 {
        let steps = self.boxes.len().saturating_sub(1);
        if steps == 0 || self.step_seconds <= 0.0 {
            0.0
        } else {
            steps as f64 / self.step_seconds
        }
    }
}

/// Tracks `frames` frames fetched on demand by `frame`, starting from `init`.
pub fn track_frames(
    frames: usize,
    init: Rect,
    cfg: &TrackerConfig,
    mut frame: impl FnMut(usize) -> Result<GrayImage>,
) -> Result<TrackRun> {
    if frames == 0 {
        return Err(Error::Track(kcfgpf_core::Error::Input("no frames to track")));
    }
    let mut tracker = Tracker::init(&frame(0)?, init, cfg.clone())?;
    let mut boxes = Vec::with_capacity(frames);
    boxes.push(init);
    let mut step_seconds = 0.0;
    for i in 1..frames {
        let img = frame(i)?;
        let start = Instant::now();
        let out = tracker.step(&img)?;
        step_seconds += start.elapsed().as_secs_f64();
        boxes.push(out.rect);
    }
    Ok(TrackRun { boxes, step_seconds })
}

pub fn track_sequence(seq: &Sequence, cfg: &TrackerConfig) -> Result<TrackRun> {
    track_frames(seq.len(), seq.ground_truth[0], cfg, |i| load_frame(&seq.frames[i]))
}

/// Tracks, scores and writes one sequence directory's results to `out_dir`.
pub fn run_sequence(dir: &Path, cfg: &TrackerConfig, max_frames: Option<usize>, out_dir: &Path) -> Result<(Sequence, EvalResult)> {
    let mut seq = load_sequence(dir)?;
    if let Some(n) = max_frames {
        seq.truncate(n);
    }
    let run = track_sequence(&seq, cfg)?;
    let eval = evaluate(&run.boxes, &seq.ground_truth, run.fps())?;
    emit_results(&seq.name, Some(&run.boxes), &eval, out_dir)?;
    Ok((seq, eval))
}

/// Subdirectories of `root` that look like sequences, sorted by name.
pub fn sequence_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("img").is_dir())
        .collect();
    dirs.sort();
    Ok(dirs)
}

/// Per-sequence results averaged into one summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub names: Vec<String>,
    pub precision: PrecisionCurve,
    pub success: SuccessCurve,
    pub mean_fps: f64,
}

/// Averages the curves over sequences, each sequence counting once.
pub fn aggregate(results: &[(String, EvalResult)]) -> Option<Aggregate> {
    if results.is_empty() {
        return None;
    }
    let n = results.len() as f64;
    let mean_curve = |f: &dyn Fn(&EvalResult) -> &[f64]| -> Vec<f64> {
        let len = f(&results[0].1).len();
        (0..len).map(|i| results.iter().map(|(_, r)| f(r)[i]).sum::<f64>() / n).collect()
    };
    let precision = PrecisionCurve {
        values: mean_curve(&|r| &r.precision.values),
    };
    let values = mean_curve(&|r| &r.success.values);
    let auc = values.iter().sum::<f64>() / values.len() as f64;
    let success = SuccessCurve { values, auc };
    Some(Aggregate {
        names: results.iter().map(|(name, _)| name.clone()).collect(),
        mean_fps: results.iter().map(|(_, r)| r.mean_fps).sum::<f64>() / n,
        precision,
        success,
    })
}

/// Outcome of a benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub aggregate: Aggregate,
    /// Sequences that could not be loaded or tracked, with the reason.
    pub failures: Vec<(String, String)>,
}

/// Runs every sequence under `root` one after another, so that the step
/// timings do not compete for cores. Per-sequence results go to
/// `out/<name>/`, the summary to `out/summary/` and `out/sequences.csv`.
/// Failing sequences are reported and skipped.
pub fn run_bench(root: &Path, cfg: &TrackerConfig, max_frames: Option<usize>, out: &Path) -> Result<BenchReport> {
    let dirs = sequence_dirs(root)?;
    if dirs.is_empty() {
        return Err(Error::format(root, "no sequence directories (with an img/ folder)"));
    }
    let mut results = Vec::new();
    let mut failures = Vec::new();
    let mut table = String::from("sequence,frames,precision_20,success_auc,mean_fps\n");
    for dir in &dirs {
        let name = dir.file_name().and_then(|n| n.to_str()).unwrap_or("sequence").to_string();
        match run_sequence(dir, cfg, max_frames, &out.join(&name)) {
            Ok((seq, eval)) => {
                table.push_str(&format!(
                    "{},{},{},{},{}\n",
                    seq.name,
                    seq.len(),
                    num(eval.precision_20()),
                    num(eval.success_auc()),
                    num(eval.mean_fps)
                ));
                results.push((seq.name, eval));
            }
            Err(e) => {
                eprintln!("warning: skipping {name}: {e}");
                failures.push((name, e.to_string()));
            }
        }
    }
    let aggregate = aggregate(&results).ok_or_else(|| Error::format(root, "every sequence failed"))?;
    let summary = out.join("summary");
    let mut m = Metrics::new();
    m.push("sequences", aggregate.names.len())
        .push("failed", failures.len())
        .push("precision_20", num(aggregate.precision.precision_20()))
        .push("success_auc", num(aggregate.success.auc))
        .push("mean_fps", num(aggregate.mean_fps));
    write_metrics(&m, &summary.join(crate::results::METRICS_FILE))?;
    write_text(&summary.join(crate::results::PRECISION_FILE), &precision_csv(&aggregate.precision))?;
    write_text(&summary.join(crate::results::SUCCESS_FILE), &success_csv(&aggregate.success))?;
    write_text(&out.join("sequences.csv"), &table)?;
    Ok(BenchReport { aggregate, failures })
}
