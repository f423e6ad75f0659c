//! Correlation-filter training and detection in the Fourier domain.
//!
//! Two models share one contract: a linear multi-channel ridge regression
//! over all circular shifts of the training map, and its Gaussian-kernel
//! (KCF) dual. Detection scores every circular shift of a test map at once;
//! a response peak at cell `(u, v)` means the test content is displaced by
//! `(u, v)` relative to the training content (wrapping around the grid).

use alloc::vec;
use alloc::vec::Vec;

use crate::features::FeatureMap;
use crate::fft::{Complex, Fft2};
use crate::grid::Grid;
use crate::{Error, Result};

pub type ResponseMap = Grid<f64>;

/// Gaussian regression target with its peak at the origin cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLabel {
    pub data: Grid<f64>,
    pub sigma: f64,
}

impl GaussianLabel {
    /// Cell that carries the peak value.
    pub fn peak(&self) -> (usize, usize) {
        (0, 0)
    }
}

/// Circular distance from index `i` to zero on a ring of length `n`.
fn ring_distance(i: usize, n: usize) -> f64 {
    let d = i.min(n - i);
    d as f64
}

/// `y(x, y) = exp(-(dx^2 + dy^2) / (2 sigma^2))` with circular distances to
/// the origin.
pub fn make_label(width: usize, height: usize, sigma: f64) -> GaussianLabel {
    assert!(width > 0 && height > 0 && sigma > 0.0);
    let data = Grid::from_fn(width, height, |x, y| {
        let dx = ring_distance(x, width);
        let dy = ring_distance(y, height);
        libm::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma))
    });
    GaussianLabel { data, sigma }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    Linear,
    GaussianKernel,
}

/// A trained correlation filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterModel {
    kind: FilterKind,
    width: usize,
    height: usize,
    depth: usize,
    /// Spectra of the (windowed) training map, one per channel.
    xf: Vec<Vec<Complex>>,
    /// Linear: per-channel filter spectra. Kernel: one dual-coefficient spectrum.
    solution: Vec<Vec<Complex>>,
    yf: Vec<Complex>,
    lambda: f64,
    sigma_kernel: f64,
    window: Option<Grid<f64>>,
    fft: Fft2,
}

fn check_grid(x: &FeatureMap, width: usize, height: usize) -> Result<()> {
    if x.width() != width || x.height() != height {
        return Err(Error::Dimension {
            expected: "feature grid matching the filter",
            actual: "feature grid of another size",
        });
    }
    Ok(())
}

fn channel_spectra(fft: &Fft2, x: &FeatureMap) -> Vec<Vec<Complex>> {
    (0..x.depth()).map(|d| fft.forward_real(x.channel(d))).collect()
}

fn spectra_energy(spectra: &[Vec<Complex>], cells: usize) -> f64 {
    // Parseval: spatial squared norm from unnormalized spectra.
    spectra
        .iter()
        .flat_map(|s| s.iter())
        .map(|c| c.norm_sqr())
        .sum::<f64>()
        / cells as f64
}

/// Kernel correlation spectrum between `x` (reference) and `z` (test):
/// `k(u) = exp(-max(0, |x|^2 + |z|^2 - 2 c(u)) / (sigma^2 N))` with
/// `c(u) = sum_n z(n + u) x(n)` and `N` the total element count.
fn kernel_correlation_spatial(
    fft: &Fft2,
    xf: &[Vec<Complex>],
    zf: &[Vec<Complex>],
    sigma: f64,
) -> Vec<f64> {
    let cells = fft.width() * fft.height();
    let depth = xf.len();
    let xx = spectra_energy(xf, cells);
    let zz = spectra_energy(zf, cells);
    let mut cross = vec![Complex::new(0.0, 0.0); cells];
    for (xc, zc) in xf.iter().zip(zf) {
        for ((acc, a), b) in cross.iter_mut().zip(xc).zip(zc) {
            *acc += b * a.conj();
        }
    }
    fft.inverse(&mut cross);
    let denom = sigma * sigma * (cells * depth) as f64;
    cross
        .iter()
        .map(|c| {
            let d = (xx + zz - 2.0 * c.re).max(0.0);
            libm::exp(-d / denom)
        })
        .collect()
}

fn to_response(fft: &Fft2, mut spectrum: Vec<Complex>) -> ResponseMap {
    fft.inverse(&mut spectrum);
    let peak = spectrum.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    debug_assert!(
        spectrum.iter().all(|c| c.im.abs() <= 1e-8 * (1.0 + peak)),
        "response carries an imaginary residue"
    );
    let data = spectrum.into_iter().map(|c| c.re).collect();
    Grid::from_vec(fft.width(), fft.height(), data).expect("response grid")
}

/// Gaussian-kernel correlation of every circular shift of `z` against `x`:
/// entry `u` is `exp(-|shift_u(z) - x|^2 / (sigma^2 N))`.
pub fn gaussian_kernel_correlation(x: &FeatureMap, z: &FeatureMap, sigma: f64) -> Result<ResponseMap> {
    if !x.same_shape(z) {
        return Err(Error::Dimension {
            expected: "feature maps of equal shape",
            actual: "differently shaped feature maps",
        });
    }
    if sigma <= 0.0 {
        return Err(Error::Input("kernel bandwidth must be positive"));
    }
    let fft = Fft2::new(x.width(), x.height());
    let xf = channel_spectra(&fft, x);
    let zf = channel_spectra(&fft, z);
    let k = kernel_correlation_spatial(&fft, &xf, &zf, sigma);
    Ok(Grid::from_vec(x.width(), x.height(), k).expect("kernel grid"))
}

/// Trains a filter of the requested kind. When `window` is given it is
/// multiplied into the training map here and into every test map later.
pub fn train(
    kind: FilterKind,
    x: &FeatureMap,
    y: &GaussianLabel,
    lambda: f64,
    sigma_kernel: f64,
    window: Option<Grid<f64>>,
) -> Result<FilterModel> {
    if !(lambda > 0.0) {
        return Err(Error::Input("ridge weight must be positive"));
    }
    if !(sigma_kernel > 0.0) {
        return Err(Error::Input("kernel bandwidth must be positive"));
    }
    let (width, height) = (x.width(), x.height());
    if y.data.width() != width || y.data.height() != height {
        return Err(Error::Dimension {
            expected: "label matching the feature grid",
            actual: "label of another size",
        });
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("training features must be finite"));
    }
    let fft = Fft2::new(width, height);
    let windowed;
    let x = match &window {
        Some(w) => {
            let mut xw = x.clone();
            xw.apply_window(w)?;
            windowed = xw;
            &windowed
        }
        None => x,
    };
    let xf = channel_spectra(&fft, x);
    let yf = fft.forward_real(y.data.as_slice());
    let cells = width * height;

    let solution = match kind {
        FilterKind::Linear => {
            let mut power = vec![0.0; cells];
            for spectrum in &xf {
                for (p, c) in power.iter_mut().zip(spectrum) {
                    *p += c.norm_sqr();
                }
            }
            xf.iter()
                .map(|spectrum| {
                    spectrum
                        .iter()
                        .zip(&yf)
                        .zip(&power)
                        .map(|((xc, yc), p)| yc * xc.conj() / (p + lambda))
                        .collect()
                })
                .collect()
        }
        FilterKind::GaussianKernel => {
            let kxx = kernel_correlation_spatial(&fft, &xf, &xf, sigma_kernel);
            let kf = fft.forward_real(&kxx);
            let alpha = yf
                .iter()
                .zip(&kf)
                .map(|(yc, kc)| yc / (kc + lambda))
                .collect();
            vec![alpha]
        }
    };

    Ok(FilterModel {
        kind,
        width,
        height,
        depth: x.depth(),
        xf,
        solution,
        yf,
        lambda,
        sigma_kernel,
        window,
        fft,
    })
}

/// Closed-form linear multi-channel filter without windowing.
pub fn train_linear(x: &FeatureMap, y: &GaussianLabel, lambda: f64) -> Result<FilterModel> {
    train(FilterKind::Linear, x, y, lambda, 1.0, None)
}

/// Gaussian-kernel ridge regression (dual form) without windowing.
pub fn train_kcf(x: &FeatureMap, y: &GaussianLabel, lambda: f64, sigma: f64) -> Result<FilterModel> {
    train(FilterKind::GaussianKernel, x, y, lambda, sigma, None)
}

impl FilterModel {
    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma_kernel(&self) -> f64 {
        self.sigma_kernel
    }

    pub fn window(&self) -> Option<&Grid<f64>> {
        self.window.as_ref()
    }

    pub fn label_spectrum(&self) -> &[Complex] {
        &self.yf
    }

    /// Scores every circular shift of `t`.
    pub fn respond(&self, t: &FeatureMap) -> Result<ResponseMap> {
        check_grid(t, self.width, self.height)?;
        if t.depth() != self.depth {
            return Err(Error::Dimension {
                expected: "feature depth matching the filter",
                actual: "feature map of another depth",
            });
        }
        let windowed;
        let t = match &self.window {
            Some(w) => {
                let mut tw = t.clone();
                tw.apply_window(w)?;
                windowed = tw;
                &windowed
            }
            None => t,
        };
        let tf = channel_spectra(&self.fft, t);
        let spectrum = match self.kind {
            FilterKind::Linear => {
                let mut acc = vec![Complex::new(0.0, 0.0); self.width * self.height];
                for (tc, wc) in tf.iter().zip(&self.solution) {
                    for ((a, t), w) in acc.iter_mut().zip(tc).zip(wc) {
                        *a += t * w;
                    }
                }
                acc
            }
            FilterKind::GaussianKernel => {
                let k = kernel_correlation_spatial(&self.fft, &self.xf, &tf, self.sigma_kernel);
                let kf = self.fft.forward_real(&k);
                kf.iter()
                    .zip(&self.solution[0])
                    .map(|(kc, ac)| kc * ac)
                    .collect()
            }
        };
        Ok(to_response(&self.fft, spectrum))
    }

    /// Blends the model toward a freshly trained one:
    /// `(1 - rate) * self + rate * fresh`, spectrum by spectrum.
    pub fn adapt(&self, fresh: &FilterModel, rate: f64) -> Result<FilterModel> {
        if self.kind != fresh.kind
            || self.width != fresh.width
            || self.height != fresh.height
            || self.depth != fresh.depth
        {
            return Err(Error::Dimension {
                expected: "models of identical kind and grid",
                actual: "mismatched models",
            });
        }
        let mix = |old: &[Vec<Complex>], new: &[Vec<Complex>]| -> Vec<Vec<Complex>> {
            old.iter()
                .zip(new)
                .map(|(o, n)| {
                    o.iter()
                        .zip(n)
                        .map(|(a, b)| a * (1.0 - rate) + b * rate)
                        .collect()
                })
                .collect()
        };
        Ok(FilterModel {
            xf: mix(&self.xf, &fresh.xf),
            solution: mix(&self.solution, &fresh.solution),
            ..self.clone()
        })
    }

    /// Spatial-domain linear filter, one real plane per channel.
    pub fn spatial_filter(&self) -> Option<FeatureMap> {
        if self.kind != FilterKind::Linear {
            return None;
        }
        let cells = self.width * self.height;
        let mut data = Vec::with_capacity(cells * self.depth);
        for spectrum in &self.solution {
            // the response is a correlation with conj(W), i.e. with the real filter w
            let mut buf: Vec<Complex> = spectrum.iter().map(|c| c.conj()).collect();
            self.fft.inverse(&mut buf);
            data.extend(buf.iter().map(|c| c.re));
        }
        FeatureMap::from_vec(self.width, self.height, self.depth, data).ok()
    }

    /// Largest dual coefficient magnitude (kernel models).
    pub fn max_dual_coefficient(&self) -> Option<f64> {
        if self.kind != FilterKind::GaussianKernel {
            return None;
        }
        let mut buf = self.solution[0].clone();
        self.fft.inverse(&mut buf);
        Some(buf.iter().map(|c| c.re.abs()).fold(0.0, f64::max))
    }
}

/// Detection with a linear model.
pub fn respond_linear(m: &FilterModel, t: &FeatureMap) -> Result<ResponseMap> {
    if m.kind != FilterKind::Linear {
        return Err(Error::Input("model is not a linear filter"));
    }
    m.respond(t)
}

/// Detection with a Gaussian-kernel model.
pub fn respond_kcf(m: &FilterModel, t: &FeatureMap) -> Result<ResponseMap> {
    if m.kind != FilterKind::GaussianKernel {
        return Err(Error::Input("model is not a kernel filter"));
    }
    m.respond(t)
}

/// Position `(x, y)` and value of the maximum; the first in row-major order
/// wins ties.
pub fn argmax_response(s: &ResponseMap) -> (usize, usize, f64) {
    let mut best = (0, 0, f64::NEG_INFINITY);
    for y in 0..s.height() {
        for (x, &v) in s.row(y).iter().enumerate() {
            if v > best.2 {
                best = (x, y, v);
            }
        }
    }
    best
}

/// Signed circular displacement of a peak index on a ring of length `n`.
pub fn wrap_displacement(i: usize, n: usize) -> isize {
    if i > n / 2 {
        i as isize - n as isize
    } else {
        i as isize
    }
}
