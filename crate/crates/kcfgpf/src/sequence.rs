//! OTB-style sequence directories.
//!
//! A sequence directory holds `img/` with numbered frames and
//! `groundtruth_rect.txt` with one `x,y,w,h` line per frame, where `(x, y)`
//! is the 1-indexed top-left corner. Commas, tabs and spaces all separate
//! fields. Files are taken at face value: known annotation offsets in some
//! public sequences are not patched here.

use std::fs;
use std::path::{Path, PathBuf};

use kcfgpf_core::synthetic::SyntheticSequence;
use kcfgpf_core::Rect;

use crate::io::save_frame;
use crate::{Error, Result};

const FRAME_EXTENSIONS: &[&str] = &["jpg", "jpeg", "png", "pgm", "ppm", "pnm"];
const GROUND_TRUTH: &str = "groundtruth_rect.txt";
const ATTRIBUTES: &str = "attributes.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub name: String,
    pub frames: Vec<PathBuf>,
    /// Boxes in center form, already shifted to 0-indexed pixels.
    pub ground_truth: Vec<Rect>,
    /// Free-form attribute tags such as `OCC` or `FM`, when provided.
    pub attributes: Vec<String>,
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Keeps the first `n` frames.
    pub fn truncate(&mut self, n: usize) {
        self.frames.truncate(n);
        self.ground_truth.truncate(n);
    }
}

/// 1-indexed corner box to the internal center form.
pub fn from_otb(x: f64, y: f64, w: f64, h: f64) -> Rect {
    Rect::from_corner(x - 1.0, y - 1.0, w, h)
}

/// Internal center form to the 1-indexed corner box.
pub fn to_otb(r: &Rect) -> (f64, f64, f64, f64) {
    let (x, y, w, h) = r.to_corner();
    (x + 1.0, y + 1.0, w, h)
}

fn split_fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty())
}

/// Parses one box line; the error says what is wrong with it.
pub fn parse_box_line(line: &str) -> std::result::Result<Rect, String> {
    let fields: Vec<&str> = split_fields(line).collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 fields, found {}", fields.len()));
    }
    let mut v = [0.0; 4];
    for (slot, f) in v.iter_mut().zip(&fields) {
        *slot = f.parse::<f64>().map_err(|_| format!("not a number: {f:?}"))?;
        if !slot.is_finite() {
            return Err(format!("not a finite number: {f:?}"));
        }
    }
    if v[2] <= 0.0 || v[3] <= 0.0 {
        return Err("box extents must be positive".into());
    }
    Ok(from_otb(v[0], v[1], v[2], v[3]))
}

/// Reads a box file, skipping blank lines. Errors carry 1-based line numbers.
pub fn read_boxes(path: &Path) -> Result<Vec<Rect>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut boxes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        boxes.push(parse_box_line(line).map_err(|m| Error::parse(path, i + 1, m))?);
    }
    Ok(boxes)
}

fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut frames = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if ext.is_some_and(|e| FRAME_EXTENSIONS.contains(&e.as_str())) {
            frames.push(path);
        }
    }
    frames.sort();
    Ok(frames)
}

// Sequences with several annotated targets ship `groundtruth_rect.1.txt`,
// `groundtruth_rect.2.txt`, ...; the first one is used.
fn ground_truth_path(dir: &Path) -> Result<PathBuf> {
    let plain = dir.join(GROUND_TRUTH);
    if plain.is_file() {
        return Ok(plain);
    }
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut numbered: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("groundtruth_rect.") && n.ends_with(".txt"))
        })
        .collect();
    numbered.sort();
    numbered
        .into_iter()
        .next()
        .ok_or_else(|| Error::format(dir, format!("no {GROUND_TRUTH}")))
}

pub fn load_sequence(dir: &Path) -> Result<Sequence> {
    let name = dir
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("sequence")
        .to_string();
    let frames = list_frames(&dir.join("img"))?;
    let gt_path = ground_truth_path(dir)?;
    let ground_truth = read_boxes(&gt_path)?;
    if frames.is_empty() {
        return Err(Error::format(dir.join("img"), "no frames"));
    }
    if frames.len() != ground_truth.len() {
        return Err(Error::format(
            &gt_path,
            format!("{} frames but {} boxes", frames.len(), ground_truth.len()),
        ));
    }
    let attributes = match fs::read_to_string(dir.join(ATTRIBUTES)) {
        Ok(text) => split_fields(&text).map(str::to_string).collect(),
        Err(_) => Vec::new(),
    };
    Ok(Sequence {
        name,
        frames,
        ground_truth,
        attributes,
    })
}

/// Formats a box as a comma-separated 1-indexed corner line.
pub fn otb_line(r: &Rect) -> String {
    let (x, y, w, h) = to_otb(r);
    format!("{x},{y},{w},{h}")
}

/// Writes a sequence in the OTB layout: `img/0001.png`, ... plus
/// `groundtruth_rect.txt`.
pub fn write_sequence(seq: &SyntheticSequence, dir: &Path) -> Result<()> {
    let img_dir = dir.join("img");
    fs::create_dir_all(&img_dir).map_err(|e| Error::io(&img_dir, e))?;
    for (i, frame) in seq.frames.iter().enumerate() {
        save_frame(frame, &img_dir.join(format!("{:04}.png", i + 1)))?;
    }
    let mut gt = String::new();
    for r in &seq.ground_truth {
        gt.push_str(&otb_line(r));
        gt.push('\n');
    }
    let gt_path = dir.join(GROUND_TRUTH);
    fs::write(&gt_path, gt).map_err(|e| Error::io(&gt_path, e))
}
