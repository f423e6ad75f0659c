//! Discrete Fourier transforms for arbitrary lengths.
//!
//! Power-of-two lengths use an iterative radix-2 transform; every other
//! length goes through Bluestein's chirp-z algorithm on top of it.
//! Forward is `X[k] = sum x[n] exp(-2 pi i k n / N)`; inverse carries the
//! `1 / N` factor.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

pub use num_complex::Complex64 as Complex;

#[derive(Debug, Clone, PartialEq)]
struct Radix2 {
    n: usize,
    twiddles: Vec<Complex>,
    reversed: Vec<usize>,
}

impl Radix2 {
    fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let twiddles = (0..n / 2)
            .map(|k| Complex::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
            .collect();
        let bits = n.trailing_zeros();
        let reversed = (0..n)
            .map(|i| {
                if bits == 0 {
                    0
                } else {
                    i.reverse_bits() >> (usize::BITS - bits)
                }
            })
            .collect();
        Radix2 {
            n,
            twiddles,
            reversed,
        }
    }

    fn forward(&self, buf: &mut [Complex]) {
        let n = self.n;
        for i in 0..n {
            let j = self.reversed[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let step = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let t = self.twiddles[k * step] * buf[start + k + half];
                    let u = buf[start + k];
                    buf[start + k] = u + t;
                    buf[start + k + half] = u - t;
                }
            }
            len <<= 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Bluestein {
    n: usize,
    chirp: Vec<Complex>,
    kernel_spectrum: Vec<Complex>,
    inner: Radix2,
}

impl Bluestein {
    fn new(n: usize) -> Self {
        let m = (2 * n - 1).next_power_of_two();
        let inner = Radix2::new(m);
        let modulus = 2 * n as u128;
        // exp(-i pi k^2 / n), with k^2 reduced mod 2n to keep the angle exact.
        let chirp: Vec<Complex> = (0..n)
            .map(|k| {
                let k2 = (k as u128 * k as u128) % modulus;
                Complex::from_polar(1.0, -PI * k2 as f64 / n as f64)
            })
            .collect();
        let mut kernel = vec![Complex::new(0.0, 0.0); m];
        kernel[0] = chirp[0].conj();
        for k in 1..n {
            kernel[k] = chirp[k].conj();
            kernel[m - k] = chirp[k].conj();
        }
        inner.forward(&mut kernel);
        Bluestein {
            n,
            chirp,
            kernel_spectrum: kernel,
            inner,
        }
    }

    fn forward(&self, buf: &mut [Complex]) {
        let m = self.inner.n;
        let mut work = vec![Complex::new(0.0, 0.0); m];
        for k in 0..self.n {
            work[k] = buf[k] * self.chirp[k];
        }
        self.inner.forward(&mut work);
        for (w, k) in work.iter_mut().zip(&self.kernel_spectrum) {
            *w *= k;
        }
        // inverse through conjugation
        for w in work.iter_mut() {
            *w = w.conj();
        }
        self.inner.forward(&mut work);
        let scale = 1.0 / m as f64;
        for k in 0..self.n {
            buf[k] = work[k].conj() * scale * self.chirp[k];
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Plan {
    Radix2(Radix2),
    Bluestein(Bluestein),
}

/// Precomputed one-dimensional transform of a fixed length.
#[derive(Debug, Clone, PartialEq)]
pub struct Fft {
    n: usize,
    plan: Plan,
}

impl Fft {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "transform length must be positive");
        let plan = if n.is_power_of_two() {
            Plan::Radix2(Radix2::new(n))
        } else {
            Plan::Bluestein(Bluestein::new(n))
        };
        Fft { n, plan }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn forward(&self, buf: &mut [Complex]) {
        assert_eq!(buf.len(), self.n);
        match &self.plan {
            Plan::Radix2(p) => p.forward(buf),
            Plan::Bluestein(p) => p.forward(buf),
        }
    }

    pub fn inverse(&self, buf: &mut [Complex]) {
        for v in buf.iter_mut() {
            *v = v.conj();
        }
        self.forward(buf);
        let scale = 1.0 / self.n as f64;
        for v in buf.iter_mut() {
            *v = v.conj() * scale;
        }
    }
}

/// Row-major two-dimensional transform over a `width` x `height` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Fft2 {
    width: usize,
    height: usize,
    rows: Fft,
    cols: Fft,
}

impl Fft2 {
    pub fn new(width: usize, height: usize) -> Self {
        Fft2 {
            width,
            height,
            rows: Fft::new(width),
            cols: Fft::new(height),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn forward(&self, buf: &mut [Complex]) {
        self.apply(buf, false);
    }

    pub fn inverse(&self, buf: &mut [Complex]) {
        self.apply(buf, true);
    }

    /// Forward transform of a real plane.
    pub fn forward_real(&self, plane: &[f64]) -> Vec<Complex> {
        let mut buf: Vec<Complex> = plane.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    fn apply(&self, buf: &mut [Complex], inverse: bool) {
        assert_eq!(buf.len(), self.width * self.height);
        for row in buf.chunks_mut(self.width) {
            if inverse {
                self.rows.inverse(row);
            } else {
                self.rows.forward(row);
            }
        }
        let mut column = vec![Complex::new(0.0, 0.0); self.height];
        for x in 0..self.width {
            for y in 0..self.height {
                column[y] = buf[y * self.width + x];
            }
            if inverse {
                self.cols.inverse(&mut column);
            } else {
                self.cols.forward(&mut column);
            }
            for y in 0..self.height {
                buf[y * self.width + x] = column[y];
            }
        }
    }
}
