//! Dense features: 31-channel HOG and gray-normalized intensities.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::grid::Grid;
use crate::imaging::{resize_patch, GrayImage, Patch};
use crate::{Error, Result};

/// Number of HOG channels: 18 signed orientations, 9 unsigned, 4 texture.
pub const HOG_CHANNELS: usize = 31;
const SIGNED_BINS: usize = 18;
const UNSIGNED_BINS: usize = 9;
const HOG_CLIP: f64 = 0.2;
const HOG_EPS: f64 = 1e-4;
const TEXTURE_SCALE: f64 = 0.2357;

/// `height` x `width` x `depth` real tensor, stored channel by channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    width: usize,
    height: usize,
    depth: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn zeros(width: usize, height: usize, depth: usize) -> Self {
        FeatureMap {
            width,
            height,
            depth,
            data: vec![0.0; width * height * depth],
        }
    }

    pub fn from_vec(width: usize, height: usize, depth: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || depth == 0 {
            return Err(Error::Input("feature map dimensions must be positive"));
        }
        if data.len() != width * height * depth {
            return Err(Error::Dimension {
                expected: "width * height * depth values",
                actual: "different value count",
            });
        }
        Ok(FeatureMap {
            width,
            height,
            depth,
            data,
        })
    }

    /// Single-channel map from a grid.
    pub fn from_grid(grid: &Grid<f64>) -> Self {
        FeatureMap {
            width: grid.width(),
            height: grid.height(),
            depth: 1,
            data: grid.as_slice().to_vec(),
        }
    }

    /// Number of cell columns.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of cell rows.
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn channel(&self, d: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.data[d * n..(d + 1) * n]
    }

    pub fn channel_mut(&mut self, d: usize) -> &mut [f64] {
        let n = self.width * self.height;
        &mut self.data[d * n..(d + 1) * n]
    }

    pub fn get(&self, x: usize, y: usize, d: usize) -> f64 {
        self.data[(d * self.height + y) * self.width + x]
    }

    pub fn same_shape(&self, other: &FeatureMap) -> bool {
        self.width == other.width && self.height == other.height && self.depth == other.depth
    }

    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn squared_distance(&self, other: &FeatureMap) -> Result<f64> {
        if !self.same_shape(other) {
            return Err(Error::Dimension {
                expected: "feature maps of equal shape",
                actual: "differently shaped feature maps",
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    /// Multiplies every channel element-wise by a spatial window.
    pub fn apply_window(&mut self, window: &Grid<f64>) -> Result<()> {
        if window.width() != self.width || window.height() != self.height {
            return Err(Error::Dimension {
                expected: "window matching the feature grid",
                actual: "window of another size",
            });
        }
        let n = self.width * self.height;
        for chunk in self.data.chunks_mut(n) {
            for (v, w) in chunk.iter_mut().zip(window.as_slice()) {
                *v *= w;
            }
        }
        Ok(())
    }

    /// Circular shift of every channel: output `(x, y)` reads input `(x - sx, y - sy)`.
    pub fn circshift(&self, sx: isize, sy: isize) -> FeatureMap {
        let (w, h) = (self.width as isize, self.height as isize);
        let mut out = FeatureMap::zeros(self.width, self.height, self.depth);
        for d in 0..self.depth {
            for y in 0..h {
                for x in 0..w {
                    let src_x = (x - sx).rem_euclid(w) as usize;
                    let src_y = (y - sy).rem_euclid(h) as usize;
                    out.data[(d * self.height + y as usize) * self.width + x as usize] =
                        self.get(src_x, src_y, d);
                }
            }
        }
        out
    }

    /// Convex blend `keep * self + (1 - keep) * fresh`.
    pub fn blend(&self, fresh: &FeatureMap, keep: f64) -> Result<FeatureMap> {
        if !self.same_shape(fresh) {
            return Err(Error::Dimension {
                expected: "feature maps of equal shape",
                actual: "differently shaped feature maps",
            });
        }
        let data = self
            .data
            .iter()
            .zip(&fresh.data)
            .map(|(a, b)| keep * a + (1.0 - keep) * b)
            .collect();
        Ok(FeatureMap { data, ..*self })
    }
}

// Unit directions for the nine unsigned orientations.
fn orientation_basis() -> ([f64; UNSIGNED_BINS], [f64; UNSIGNED_BINS]) {
    let mut uu = [0.0; UNSIGNED_BINS];
    let mut vv = [0.0; UNSIGNED_BINS];
    for o in 0..UNSIGNED_BINS {
        let a = o as f64 * PI / UNSIGNED_BINS as f64;
        uu[o] = libm::cos(a);
        vv[o] = libm::sin(a);
    }
    (uu, vv)
}

/// Felzenszwalb-style 31-channel HOG, one column per `cell_size` square.
///
/// Gradients are central differences with edge replication. Each pixel
/// votes its magnitude into the best of 18 signed orientations, spread
/// bilinearly over the four nearest cells. Every cell is normalized against
/// its four 2x2 blocks (border blocks replicate the edge cells), clipped at
/// 0.2 and summed, which yields the 18 signed and 9 unsigned channels; the
/// last four channels hold per-block texture energy.
pub fn hog_features(img: &GrayImage, cell_size: usize) -> Result<FeatureMap> {
    if cell_size == 0 {
        return Err(Error::Input("cell size must be at least 1"));
    }
    let (w, h) = (img.width(), img.height());
    if w < cell_size || h < cell_size {
        return Err(Error::PatchTooSmall {
            width: w,
            height: h,
            cell: cell_size,
        });
    }
    let cells_x = w / cell_size;
    let cells_y = h / cell_size;
    let visible_x = cells_x * cell_size;
    let visible_y = cells_y * cell_size;
    let (uu, vv) = orientation_basis();
    let bin_len = cells_x * cells_y;
    let mut hist = vec![0.0; bin_len * SIGNED_BINS];
    let sbin = cell_size as f64;

    for y in 0..visible_y {
        for x in 0..visible_x {
            let (xi, yi) = (x as isize, y as isize);
            let dx = img.get_clamped(xi + 1, yi) - img.get_clamped(xi - 1, yi);
            let dy = img.get_clamped(xi, yi + 1) - img.get_clamped(xi, yi - 1);
            let magnitude = libm::sqrt(dx * dx + dy * dy);
            if magnitude == 0.0 {
                continue;
            }

            let mut best_dot = 0.0;
            let mut best_o = 0;
            for o in 0..UNSIGNED_BINS {
                let dot = uu[o] * dx + vv[o] * dy;
                if dot > best_dot {
                    best_dot = dot;
                    best_o = o;
                } else if -dot > best_dot {
                    best_dot = -dot;
                    best_o = o + UNSIGNED_BINS;
                }
            }

            let xp = (x as f64 + 0.5) / sbin - 0.5;
            let yp = (y as f64 + 0.5) / sbin - 0.5;
            let ixp = libm::floor(xp) as isize;
            let iyp = libm::floor(yp) as isize;
            let vx0 = xp - ixp as f64;
            let vy0 = yp - iyp as f64;
            let vx1 = 1.0 - vx0;
            let vy1 = 1.0 - vy0;
            for (cx, wx) in [(ixp, vx1), (ixp + 1, vx0)] {
                for (cy, wy) in [(iyp, vy1), (iyp + 1, vy0)] {
                    if cx >= 0 && cy >= 0 && (cx as usize) < cells_x && (cy as usize) < cells_y {
                        let cell = cy as usize * cells_x + cx as usize;
                        hist[best_o * bin_len + cell] += wx * wy * magnitude;
                    }
                }
            }
        }
    }

    // Unsigned energy per cell.
    let mut energy = vec![0.0; bin_len];
    for (cell, e) in energy.iter_mut().enumerate() {
        for o in 0..UNSIGNED_BINS {
            let s = hist[o * bin_len + cell] + hist[(o + UNSIGNED_BINS) * bin_len + cell];
            *e += s * s;
        }
    }
    let energy_at = |x: isize, y: isize| -> f64 {
        let xc = x.clamp(0, cells_x as isize - 1) as usize;
        let yc = y.clamp(0, cells_y as isize - 1) as usize;
        energy[yc * cells_x + xc]
    };

    let mut out = FeatureMap::zeros(cells_x, cells_y, HOG_CHANNELS);
    for y in 0..cells_y {
        for x in 0..cells_x {
            let cell = y * cells_x + x;
            let (xi, yi) = (x as isize, y as isize);
            let block = |ox: isize, oy: isize| -> f64 {
                let e = energy_at(xi + ox, yi + oy)
                    + energy_at(xi + ox + 1, yi + oy)
                    + energy_at(xi + ox, yi + oy + 1)
                    + energy_at(xi + ox + 1, yi + oy + 1);
                1.0 / libm::sqrt(e + HOG_EPS)
            };
            let norms = [block(0, 0), block(-1, 0), block(0, -1), block(-1, -1)];
            let mut texture = [0.0; 4];

            for o in 0..SIGNED_BINS {
                let v = hist[o * bin_len + cell];
                let mut acc = 0.0;
                for (t, n) in texture.iter_mut().zip(norms) {
                    let c = (v * n).min(HOG_CLIP);
                    acc += c;
                    *t += c;
                }
                out.data[o * bin_len + cell] = 0.5 * acc;
            }
            for o in 0..UNSIGNED_BINS {
                let v = hist[o * bin_len + cell] + hist[(o + UNSIGNED_BINS) * bin_len + cell];
                let acc: f64 = norms.iter().map(|n| (v * n).min(HOG_CLIP)).sum();
                out.data[(SIGNED_BINS + o) * bin_len + cell] = 0.5 * acc;
            }
            for (i, t) in texture.iter().enumerate() {
                out.data[(SIGNED_BINS + UNSIGNED_BINS + i) * bin_len + cell] = TEXTURE_SCALE * t;
            }
        }
    }
    Ok(out)
}

/// Zero-mean, unit-variance intensities (population statistics) as a
/// depth-1 map. Flat images map to all zeros.
pub fn gray_norm(img: &GrayImage) -> FeatureMap {
    let values = img.as_slice();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = libm::sqrt(var);
    let data = if std < 1e-12 {
        vec![0.0; values.len()]
    } else {
        values.iter().map(|v| (v - mean) / std).collect()
    };
    FeatureMap {
        width: img.width(),
        height: img.height(),
        depth: 1,
        data,
    }
}

/// Resizes the patch to the template size, then applies [`gray_norm`].
pub fn gray_norm_features(p: &Patch, template_w: usize, template_h: usize) -> FeatureMap {
    let resized = resize_patch(p, template_w, template_h);
    gray_norm(&resized.pixels)
}
