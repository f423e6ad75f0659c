//! Brute-force reference implementations shared by the integration suites.
//! Everything here is deliberately slow and spelled out: dense matrices
//! instead of spectra, explicit shift loops instead of FFT tricks.

#![allow(dead_code)]

use kcfgpf_core::features::FeatureMap;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_map(rng: &mut ChaCha8Rng, w: usize, h: usize, d: usize) -> FeatureMap {
    let data = (0..w * h * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    FeatureMap::from_vec(w, h, d, data).unwrap()
}

/// `shift(v, a)(n) = v(n + a)`, indices wrapping.
pub fn shifted(v: &FeatureMap, ax: usize, ay: usize) -> Vec<f64> {
    let (w, h) = (v.width(), v.height());
    let mut out = Vec::with_capacity(w * h * v.depth());
    for d in 0..v.depth() {
        for y in 0..h {
            for x in 0..w {
                out.push(v.get((x + ax) % w, (y + ay) % h, d));
            }
        }
    }
    out
}

fn all_shifts(v: &FeatureMap) -> Vec<Vec<f64>> {
    let (w, h) = (v.width(), v.height());
    (0..h)
        .flat_map(|ay| (0..w).map(move |ax| (ax, ay)))
        .map(|(ax, ay)| shifted(v, ax, ay))
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Ridge regression over every circular shift of `x`, the shift by `a`
/// carrying label `y[a]`; returns the score of every shift of `t`.
/// Solved in the sample space: `w = X^T (X X^T + lambda I)^-1 y`.
pub fn dense_linear_response(x: &FeatureMap, y: &[f64], lambda: f64, t: &FeatureMap) -> Vec<f64> {
    let samples = all_shifts(x);
    let n = samples.len();
    let gram = DMatrix::from_fn(n, n, |i, j| dot(&samples[i], &samples[j]));
    let a = (gram + DMatrix::identity(n, n) * lambda)
        .lu()
        .solve(&DVector::from_column_slice(y))
        .expect("regularized gram matrix is invertible");
    let dim = samples[0].len();
    let mut w = vec![0.0; dim];
    for (i, s) in samples.iter().enumerate() {
        for k in 0..dim {
            w[k] += a[i] * s[k];
        }
    }
    all_shifts(t).iter().map(|s| dot(s, &w)).collect()
}

pub fn gaussian_kernel(a: &[f64], b: &[f64], sigma: f64) -> f64 {
    (-sq_dist(a, b) / (sigma * sigma * a.len() as f64)).exp()
}

/// Kernel ridge regression over every circular shift of `x`:
/// `(K + lambda I) alpha = y`, `f(u) = sum_i alpha_i k(shift(t, u), shift(x, i))`.
pub fn dense_kcf_response(x: &FeatureMap, y: &[f64], lambda: f64, sigma: f64, t: &FeatureMap) -> Vec<f64> {
    let samples = all_shifts(x);
    let n = samples.len();
    let k = DMatrix::from_fn(n, n, |i, j| gaussian_kernel(&samples[i], &samples[j], sigma));
    let alpha = (k + DMatrix::identity(n, n) * lambda)
        .lu()
        .solve(&DVector::from_column_slice(y))
        .expect("regularized kernel matrix is invertible");
    all_shifts(t)
        .iter()
        .map(|tu| (0..n).map(|i| alpha[i] * gaussian_kernel(tu, &samples[i], sigma)).sum())
        .collect()
}

/// `k(u) = exp(-|shift(z, u) - x|^2 / (sigma^2 N))` for every shift `u`.
pub fn direct_kernel_correlation(x: &FeatureMap, z: &FeatureMap, sigma: f64) -> Vec<f64> {
    let base = shifted(x, 0, 0);
    all_shifts(z).iter().map(|zu| gaussian_kernel(zu, &base, sigma)).collect()
}

/// Peak-to-correlation energy straight from its definition.
pub fn direct_apce(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut energy = 0.0;
    for v in values {
        energy += (v - min) * (v - min);
    }
    energy /= values.len() as f64;
    if energy < 1e-12 {
        0.0
    } else {
        (max - min) * (max - min) / energy
    }
}

/// Scalar random walk observed in Gaussian noise.
#[derive(Debug, Clone, Copy)]
pub struct ScalarModel {
    pub prior_mean: f64,
    pub prior_var: f64,
    pub process_var: f64,
    pub noise_var: f64,
}

/// Exact posterior means of the scalar model.
pub fn kalman_means(model: &ScalarModel, observations: &[f64]) -> Vec<f64> {
    let (mut m, mut p) = (model.prior_mean, model.prior_var);
    observations
        .iter()
        .map(|&z| {
            p += model.process_var;
            let gain = p / (p + model.noise_var);
            m += gain * (z - m);
            p *= 1.0 - gain;
            m
        })
        .collect()
}

/// One seeded run of the Gaussian particle filter on the scalar model,
/// built from the library's sampling, weighting and moment operations.
/// The unused state components are pinned by zero variance.
pub fn gpf_scalar_means(model: &ScalarModel, observations: &[f64], particles: usize, seed: u64) -> Vec<f64> {
    use kcfgpf_core::gpf::{estimate_moments, normalize_weights, sample_particles, ScaleLimits, State};
    use nalgebra::Matrix3;

    let mut mean = model.prior_mean;
    let mut var = model.prior_var;
    let mut out = Vec::with_capacity(observations.len());
    for (t, &z) in observations.iter().enumerate() {
        let mut sigma = Matrix3::zeros();
        sigma[(0, 0)] = var + model.process_var;
        let set = sample_particles(
            &State::new(mean, 0.0, 1.0),
            &sigma,
            particles,
            seed.wrapping_mul(1_000_003).wrapping_add(t as u64),
            ScaleLimits::default(),
        )
        .unwrap();
        let mut w: Vec<f64> = set
            .states
            .iter()
            .map(|s| (-(z - s.x) * (z - s.x) / (2.0 * model.noise_var)).exp())
            .collect();
        normalize_weights(&mut w);
        let belief = estimate_moments(&set.states, &w).unwrap();
        mean = belief.mu.x;
        var = belief.sigma[(0, 0)];
        out.push(mean);
    }
    out
}

/// Observations of one fixed trajectory of the scalar model.
pub fn scalar_observations(model: &ScalarModel, steps: usize, seed: u64) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut r = rng(seed);
    let mut x = model.prior_mean;
    (0..steps)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut r);
            let b: f64 = StandardNormal.sample(&mut r);
            x += a * model.process_var.sqrt();
            x + b * model.noise_var.sqrt()
        })
        .collect()
}

/// Largest deviation of the seed-averaged particle-filter mean from the
/// Kalman mean, in Monte-Carlo standard errors, over all steps.
pub fn gpf_kalman_worst_z(steps: usize, particles: usize, runs: u64) -> f64 {
    let model = ScalarModel {
        prior_mean: 0.0,
        prior_var: 1.0,
        process_var: 1.0,
        noise_var: 1.0,
    };
    let obs = scalar_observations(&model, steps, 2024);
    let exact = kalman_means(&model, &obs);
    let runs_out: Vec<Vec<f64>> = (0..runs).map(|s| gpf_scalar_means(&model, &obs, particles, s)).collect();
    let n = runs as f64;
    (0..steps)
        .map(|t| {
            let mean = runs_out.iter().map(|r| r[t]).sum::<f64>() / n;
            let var = runs_out.iter().map(|r| (r[t] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            (mean - exact[t]).abs() / se
        })
        .fold(0.0, f64::max)
}
