//! Gray frames, center-form rectangles and patch sampling.
//!
//! Continuous pixel coordinates place pixel `i` on the interval `[i, i + 1)`,
//! so its center sits at `i + 0.5`. A rectangle with an integral corner and
//! integral extents therefore covers whole pixels exactly.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::grid::Grid;
use crate::{Error, Result};

/// Row-major intensity image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Input("image must be at least 1x1"));
        }
        if data.len() != width * height {
            return Err(Error::Dimension {
                expected: "width * height samples",
                actual: "different sample count",
            });
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::Input("intensities must be finite and within [0, 1]"));
        }
        Ok(GrayImage {
            width,
            height,
            data,
        })
    }

    /// Builds an image from a generator; values are clamped into `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "image must be at least 1x1");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let v = f(x, y);
                data.push(if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) });
            }
        }
        GrayImage {
            width,
            height,
            data,
        }
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self::from_fn(width, height, |_, _| value)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Pixel lookup with nearest-edge replication outside the image.
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yc * self.width + xc]
    }

    /// Bilinear sample at a pixel-index position (pixel `i` sits at `i`).
    pub fn sample_bilinear(&self, px: f64, py: f64) -> f64 {
        let x0 = libm::floor(px);
        let y0 = libm::floor(py);
        let fx = px - x0;
        let fy = py - y0;
        let (x0, y0) = (x0 as isize, y0 as isize);
        let a = self.get_clamped(x0, y0);
        let b = self.get_clamped(x0 + 1, y0);
        let c = self.get_clamped(x0, y0 + 1);
        let d = self.get_clamped(x0 + 1, y0 + 1);
        let top = a + (b - a) * fx;
        let bottom = c + (d - c) * fx;
        top + (bottom - top) * fy
    }

    pub fn flip_horizontal(&self) -> GrayImage {
        GrayImage::from_fn(self.width, self.height, |x, y| {
            self.get(self.width - 1 - x, y)
        })
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

/// Axis-aligned box stored by its center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Rect { cx, cy, w, h }
    }

    /// From a zero-indexed top-left corner and extents.
    pub fn from_corner(x: f64, y: f64, w: f64, h: f64) -> Self {
        Rect {
            cx: x + w / 2.0,
            cy: y + h / 2.0,
            w,
            h,
        }
    }

    /// Zero-indexed top-left corner and extents `(x, y, w, h)`.
    pub fn to_corner(&self) -> (f64, f64, f64, f64) {
        (self.left(), self.top(), self.w, self.h)
    }

    pub fn left(&self) -> f64 {
        self.cx - self.w / 2.0
    }

    pub fn top(&self) -> f64 {
        self.cy - self.h / 2.0
    }

    pub fn right(&self) -> f64 {
        self.cx + self.w / 2.0
    }

    pub fn bottom(&self) -> f64 {
        self.cy + self.h / 2.0
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.cx, self.cy)
    }

    pub fn with_center(&self, cx: f64, cy: f64) -> Rect {
        Rect { cx, cy, ..*self }
    }

    pub fn scaled(&self, factor: f64) -> Rect {
        Rect {
            w: self.w * factor,
            h: self.h * factor,
            ..*self
        }
    }

    pub fn is_valid(&self) -> bool {
        self.cx.is_finite()
            && self.cy.is_finite()
            && self.w.is_finite()
            && self.h.is_finite()
            && self.w > 0.0
            && self.h > 0.0
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= self.left() && x <= self.right() && y >= self.top() && y <= self.bottom()
    }
}

/// Image region together with the rectangle it was cut from.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub pixels: GrayImage,
    pub source: Rect,
}

fn pixel_extent(v: f64) -> usize {
    let r = libm::round(v);
    if r < 1.0 {
        1
    } else {
        r as usize
    }
}

/// Crops `r` out of `img` at integer pixel alignment. Pixels outside the
/// image replicate the nearest edge, so every rectangle is valid.
pub fn extract_patch(img: &GrayImage, r: &Rect) -> Patch {
    let w = pixel_extent(r.w);
    let h = pixel_extent(r.h);
    let x0 = libm::round(r.cx - w as f64 / 2.0) as isize;
    let y0 = libm::round(r.cy - h as f64 / 2.0) as isize;
    let pixels = GrayImage::from_fn(w, h, |x, y| {
        img.get_clamped(x0 + x as isize, y0 + y as isize)
    });
    Patch { pixels, source: *r }
}

/// Bilinear resize with pixel centers aligned between input and output.
pub fn resize_patch(p: &Patch, out_w: usize, out_h: usize) -> Patch {
    let src = &p.pixels;
    let (out_w, out_h) = (out_w.max(1), out_h.max(1));
    if out_w == src.width() && out_h == src.height() {
        return p.clone();
    }
    let sx = src.width() as f64 / out_w as f64;
    let sy = src.height() as f64 / out_h as f64;
    let pixels = GrayImage::from_fn(out_w, out_h, |x, y| {
        src.sample_bilinear((x as f64 + 0.5) * sx - 0.5, (y as f64 + 0.5) * sy - 0.5)
    });
    Patch {
        pixels,
        source: p.source,
    }
}

/// Samples the continuous region `r` straight into an `out_w` x `out_h`
/// patch with bilinear interpolation and edge replication.
///
/// For integral rectangles at native size this equals [`extract_patch`];
/// otherwise it keeps sub-pixel placement that cropping would round away.
pub fn sample_patch(img: &GrayImage, r: &Rect, out_w: usize, out_h: usize) -> Patch {
    let (out_w, out_h) = (out_w.max(1), out_h.max(1));
    let sx = r.w / out_w as f64;
    let sy = r.h / out_h as f64;
    let left = r.left();
    let top = r.top();
    let pixels = GrayImage::from_fn(out_w, out_h, |x, y| {
        img.sample_bilinear(
            left + (x as f64 + 0.5) * sx - 0.5,
            top + (y as f64 + 0.5) * sy - 0.5,
        )
    });
    Patch { pixels, source: *r }
}

/// One-dimensional raised-cosine window; `hann(1) = [1]`.
pub fn hann(n: usize) -> Vec<f64> {
    if n <= 1 {
        return alloc::vec![1.0; n];
    }
    let denom = (n - 1) as f64;
    (0..n)
        .map(|i| 0.5 * (1.0 - libm::cos(2.0 * PI * i as f64 / denom)))
        .collect()
}

/// Separable cosine window over a `w` x `h` grid.
pub fn hann_window(w: usize, h: usize) -> Grid<f64> {
    let hx = hann(w);
    let hy = hann(h);
    Grid::from_fn(w, h, |x, y| hx[x] * hy[y])
}
