//! Scripted synthetic sequences: a textured square over a noise background.
//!
//! The script fixes the target center, scale and occlusion flag of every
//! frame; the seed fixes the background, the target texture and the
//! per-frame sensor noise. Ground truth equals the script.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::Grid;
use crate::imaging::{GrayImage, Rect};

const TEXELS: usize = 6;
const BACKGROUND_CELL: usize = 10;
const SENSOR_NOISE: f64 = 0.03;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScript {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub base_w: f64,
    pub base_h: f64,
    pub centers: Vec<(f64, f64)>,
    pub scales: Vec<f64>,
    pub occluded: Vec<bool>,
}

impl SyntheticScript {
    fn from_centers(name: &str, centers: Vec<(f64, f64)>) -> Self {
        let n = centers.len();
        SyntheticScript {
            name: name.into(),
            width: 320,
            height: 240,
            base_w: 40.0,
            base_h: 40.0,
            centers,
            scales: alloc::vec![1.0; n],
            occluded: alloc::vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Target at rest in the frame center.
    pub fn stationary(frames: usize) -> Self {
        Self::from_centers("static", alloc::vec![(160.0, 120.0); frames])
    }

    /// Constant velocity, `speed` pixels per frame along a fixed diagonal.
    pub fn linear(frames: usize, speed: f64) -> Self {
        let (vx, vy) = (0.8 * speed, 0.6 * speed);
        let centers = (0..frames)
            .map(|i| (80.0 + vx * i as f64, 70.0 + vy * i as f64))
            .collect();
        Self::from_centers("linear", centers)
    }

    /// Horizontal motion that starts at 2 px/frame, ramps to `top_speed`
    /// over ten frames and bounces between the frame margins.
    pub fn fast_motion(frames: usize, top_speed: f64) -> Self {
        let (lo, hi) = (50.0, 270.0);
        let mut x: f64 = 60.0;
        let mut dir = 1.0;
        let mut centers = Vec::with_capacity(frames);
        for i in 0..frames {
            centers.push((x, 120.0));
            let speed = if i < 10 {
                2.0
            } else if i < 20 {
                2.0 + (top_speed - 2.0) * (i - 9) as f64 / 10.0
            } else {
                top_speed
            };
            let mut next = x + dir * speed;
            if next > hi {
                next = 2.0 * hi - next;
                dir = -dir;
            } else if next < lo {
                next = 2.0 * lo - next;
                dir = -dir;
            }
            x = next;
        }
        Self::from_centers("fast", centers)
    }

    /// Static target whose scale grows linearly from 1 to `final_scale`.
    pub fn scale_ramp(frames: usize, final_scale: f64) -> Self {
        let mut script = Self::from_centers("scale", alloc::vec![(160.0, 120.0); frames]);
        let last = frames.saturating_sub(1).max(1) as f64;
        script.scales = (0..frames)
            .map(|i| 1.0 + (final_scale - 1.0) * i as f64 / last)
            .collect();
        script
    }

    /// Slowly drifting target hidden on frames `start .. start + len`.
    pub fn occlusion(frames: usize, start: usize, len: usize) -> Self {
        let centers = (0..frames)
            .map(|i| (140.0 + 0.5 * i as f64, 120.0))
            .collect();
        let mut script = Self::from_centers("occlusion", centers);
        for (i, flag) in script.occluded.iter_mut().enumerate() {
            *flag = i >= start && i < start + len;
        }
        script
    }

    /// Built-in scripts by name: `static`, `linear`, `fast`, `scale`, `occlusion`.
    pub fn by_name(name: &str) -> Option<Self> {
        Some(match name {
            "static" => Self::stationary(60),
            "linear" => Self::linear(100, 2.0),
            "fast" => Self::fast_motion(80, 15.0),
            "scale" => Self::scale_ramp(100, 1.8),
            "occlusion" => Self::occlusion(60, 30, 5),
            _ => return None,
        })
    }

    pub fn names() -> &'static [&'static str] {
        &["static", "linear", "fast", "scale", "occlusion"]
    }

    pub fn ground_truth(&self, i: usize) -> Rect {
        let (cx, cy) = self.centers[i];
        let s = self.scales[i];
        Rect::new(cx, cy, s * self.base_w, s * self.base_h)
    }
}

fn mix_seed(seed: u64, salt: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Renders frames of a script on demand.
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    script: SyntheticScript,
    seed: u64,
    background: GrayImage,
    texture: Grid<f64>,
}

impl SyntheticScene {
    pub fn new(script: SyntheticScript, seed: u64) -> Self {
        let (w, h) = (script.width, script.height);
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 1));
        let coarse_w = w / BACKGROUND_CELL + 2;
        let coarse_h = h / BACKGROUND_CELL + 2;
        let coarse = GrayImage::from_fn(coarse_w, coarse_h, |_, _| rng.random_range(0.3..0.7));
        let cell = BACKGROUND_CELL as f64;
        let background = GrayImage::from_fn(w, h, |x, y| {
            coarse.sample_bilinear(x as f64 / cell, y as f64 / cell) + rng.random_range(-0.1..0.1)
        });
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 2));
        let texture = Grid::from_fn(TEXELS, TEXELS, |_, _| rng.random_range(0.0..1.0));
        SyntheticScene {
            script,
            seed,
            background,
            texture,
        }
    }

    pub fn script(&self) -> &SyntheticScript {
        &self.script
    }

    pub fn len(&self) -> usize {
        self.script.len()
    }

    pub fn is_empty(&self) -> bool {
        self.script.is_empty()
    }

    pub fn ground_truth(&self, i: usize) -> Rect {
        self.script.ground_truth(i)
    }

    pub fn frame(&self, i: usize) -> GrayImage {
        let target = self.script.ground_truth(i);
        let hidden = self.script.occluded[i];
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.seed, 1000 + i as u64));
        let (left, top) = (target.left(), target.top());
        GrayImage::from_fn(self.script.width, self.script.height, |x, y| {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let base = if !hidden && target.contains_point(px, py) && px < target.right() && py < target.bottom() {
                let u = ((px - left) / target.w * TEXELS as f64) as usize;
                let v = ((py - top) / target.h * TEXELS as f64) as usize;
                self.texture[(u.min(TEXELS - 1), v.min(TEXELS - 1))]
            } else {
                self.background.get(x, y)
            };
            base + rng.random_range(-SENSOR_NOISE..SENSOR_NOISE)
        })
    }
}

/// A fully rendered synthetic sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSequence {
    pub name: String,
    pub frames: Vec<GrayImage>,
    pub ground_truth: Vec<Rect>,
    pub occluded: Vec<bool>,
}

/// Renders every frame of `script` in memory.
pub fn gen_synthetic(script: &SyntheticScript, seed: u64) -> SyntheticSequence {
    let scene = SyntheticScene::new(script.clone(), seed);
    SyntheticSequence {
        name: script.name.clone(),
        frames: (0..scene.len()).map(|i| scene.frame(i)).collect(),
        ground_truth: (0..scene.len()).map(|i| scene.ground_truth(i)).collect(),
        occluded: script.occluded.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationary_ground_truth_is_constant() {
        let s = gen_synthetic(&SyntheticScript::stationary(5), 3);
        assert!(s.ground_truth.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(s.frames.len(), 5);
    }

    #[test]
    fn linear_centers_form_a_progression() {
        let s = SyntheticScript::linear(20, 2.0);
        for i in 1..s.len() {
            let (a, b) = (s.ground_truth(i - 1), s.ground_truth(i));
            let step = libm::sqrt((b.cx - a.cx).powi(2) + (b.cy - a.cy).powi(2));
            assert!((step - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn occluded_frames_show_background() {
        let script = SyntheticScript::occlusion(12, 4, 3);
        let scene = SyntheticScene::new(script.clone(), 9);
        let gt = scene.ground_truth(5);
        let frame = scene.frame(5);
        let (x, y) = (gt.cx as usize, gt.cy as usize);
        let diff = (frame.get(x, y) - scene.background.get(x, y)).abs();
        assert!(diff <= SENSOR_NOISE);
        assert!(script.occluded[4] && script.occluded[6] && !script.occluded[7]);
    }

    #[test]
    fn rendering_is_seeded() {
        let script = SyntheticScript::stationary(2);
        let a = gen_synthetic(&script, 5);
        assert_eq!(a, gen_synthetic(&script, 5));
        assert_ne!(a.frames, gen_synthetic(&script, 6).frames);
    }

    #[test]
    fn fast_motion_reaches_top_speed() {
        let s = SyntheticScript::fast_motion(80, 15.0);
        let max_step = (1..s.len())
            .map(|i| (s.centers[i].0 - s.centers[i - 1].0).abs())
            .fold(0.0, f64::max);
        assert!((max_step - 15.0).abs() < 1e-9);
        assert!(s.centers.iter().all(|c| c.0 >= 50.0 && c.0 <= 270.0));
    }
}
