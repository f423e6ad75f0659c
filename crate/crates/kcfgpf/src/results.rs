//! Result files: per-frame boxes, flat metrics and curve tables.
//!
//! All writers are deterministic: the same inputs give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use kcfgpf_core::metrics::{EvalResult, PrecisionCurve, SuccessCurve};
use kcfgpf_core::Rect;

use crate::sequence::{otb_line, parse_box_line};
use crate::{Error, Result};

pub const BOXES_FILE: &str = "boxes.csv";
pub const METRICS_FILE: &str = "metrics.txt";
pub const PRECISION_FILE: &str = "precision.csv";
pub const SUCCESS_FILE: &str = "success.csv";

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `frame,x,y,w,h` per line, 1-based frame numbers and 1-indexed corners,
/// no header.
pub fn boxes_csv(boxes: &[Rect]) -> String {
    let mut out = String::new();
    for (i, r) in boxes.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, otb_line(r));
    }
    out
}

/// Reads predictions written by [`boxes_csv`]. Plain `x,y,w,h` lines are
/// accepted as well.
pub fn read_predictions(path: &Path) -> Result<Vec<Rect>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut boxes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        let parsed = match fields.len() {
            0 => continue,
            4 => parse_box_line(line),
            5 => parse_box_line(&fields[1..].join(",")),
            n => Err(format!("expected 4 or 5 fields, found {n}")),
        };
        boxes.push(parsed.map_err(|m| Error::parse(path, i + 1, m))?);
    }
    Ok(boxes)
}

/// Flat `key=value` lines in a fixed order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics {
    entries: Vec<(String, String)>,
}

impl Metrics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect();
        Metrics { entries }
    }
}

/// Floats keep a decimal point (`1.0`, not `1`) and round-trip exactly.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn eval_metrics(name: &str, eval: &EvalResult) -> Metrics {
    let mut m = Metrics::new();
    m.push("sequence", name)
        .push("frames", eval.center_errors.len())
        .push("precision_20", num(eval.precision_20()))
        .push("success_auc", num(eval.success_auc()))
        .push("mean_center_error", num(eval.mean_center_error()))
        .push("mean_fps", num(eval.mean_fps));
    m
}

pub fn precision_csv(curve: &PrecisionCurve) -> String {
    let mut out = String::from("threshold,value\n");
    for (t, v) in curve.thresholds().zip(&curve.values) {
        let _ = writeln!(out, "{},{}", num(t), num(*v));
    }
    out
}

pub fn success_csv(curve: &SuccessCurve) -> String {
    let mut out = String::from("threshold,value\n");
    for (t, v) in curve.thresholds().zip(&curve.values) {
        let _ = writeln!(out, "{},{}", num(t), num(*v));
    }
    out
}

/// Writes the full result set of one sequence into `out_dir`.
/// `boxes` may be `None` when scoring predictions that already live elsewhere.
pub fn emit_results(name: &str, boxes: Option<&[Rect]>, eval: &EvalResult, out_dir: &Path) -> Result<()> {
    if let Some(boxes) = boxes {
        write(&out_dir.join(BOXES_FILE), &boxes_csv(boxes))?;
    }
    write(&out_dir.join(METRICS_FILE), &eval_metrics(name, eval).render())?;
    write(&out_dir.join(PRECISION_FILE), &precision_csv(&eval.precision))?;
    write(&out_dir.join(SUCCESS_FILE), &success_csv(&eval.success))
}

pub fn write_metrics(metrics: &Metrics, path: &Path) -> Result<()> {
    write(path, &metrics.render())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use kcfgpf_core::metrics::evaluate;

    fn boxes() -> Vec<Rect> {
        (0..5).map(|i| Rect::from_corner(i as f64 * 1.5, 2.0, 10.25, 8.0)).collect()
    }

    #[test]
    fn boxes_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(BOXES_FILE);
        fs::write(&path, boxes_csv(&boxes())).unwrap();
        assert_eq!(read_predictions(&path).unwrap(), boxes());
        assert_eq!(boxes_csv(&boxes()).lines().count(), 5);
        assert!(boxes_csv(&boxes()).starts_with("1,1,3,10.25,8\n"));
    }

    #[test]
    fn emitted_files() {
        let dir = tempfile::tempdir().unwrap();
        let b = boxes();
        let eval = evaluate(&b, &b, 12.5).unwrap();
        emit_results("demo", Some(&b), &eval, dir.path()).unwrap();
        let m = Metrics::parse(&fs::read_to_string(dir.path().join(METRICS_FILE)).unwrap());
        assert_eq!(m.get("precision_20"), Some("1.0"));
        assert!(m.get("success_auc").is_some() && m.get("mean_fps") == Some("12.5"));
        let p = fs::read_to_string(dir.path().join(PRECISION_FILE)).unwrap();
        assert_eq!(p.lines().next(), Some("threshold,value"));
        assert_eq!(p.lines().count(), 52);
        let s = fs::read_to_string(dir.path().join(SUCCESS_FILE)).unwrap();
        assert_eq!(s.lines().count(), 22);
        assert_eq!(s.lines().nth(2), Some("0.05,1.0"));
    }

    #[test]
    fn prediction_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        fs::write(&path, "1,1,1,4,4\n2,1,1\n").unwrap();
        assert!(matches!(read_predictions(&path), Err(Error::Parse { line: 2, .. })));
    }
}
