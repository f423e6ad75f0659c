//! Multi-task Gaussian particle filter.
//!
//! The posterior over the target state is kept as a Gaussian. Each frame
//! draws particles from a Gaussian importance density, weights them by how
//! well their HOG and gray-normalized appearance matches the template,
//! fuses the two weightings, and re-estimates the mean and covariance from
//! the weighted particles. There is no resampling step.

use alloc::vec::Vec;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::features::{gray_norm, hog_features, FeatureMap};
use crate::imaging::{sample_patch, GrayImage, Rect};
use crate::{Error, Result};

/// Variance floor applied to the diagonal of estimated covariances.
pub const COVARIANCE_FLOOR: f64 = 1e-6;
const EIGEN_CLAMP: f64 = 1e-12;

/// Target center in pixels and scale relative to the initial box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub x: f64,
    pub y: f64,
    pub s: f64,
}

impl State {
    pub fn new(x: f64, y: f64, s: f64) -> Self {
        State { x, y, s }
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.s)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        State::new(v[0], v[1], v[2])
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.s.is_finite()
    }

    /// Box of `base` extents scaled by `s`, centered on the state.
    pub fn rect(&self, base_w: f64, base_h: f64) -> Rect {
        Rect::new(self.x, self.y, self.s * base_w, self.s * base_h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleLimits {
    pub min: f64,
    pub max: f64,
}

impl Default for ScaleLimits {
    fn default() -> Self {
        ScaleLimits { min: 0.2, max: 5.0 }
    }
}

/// Gaussian posterior `N(mu, sigma)` over [`State`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBelief {
    pub mu: State,
    pub sigma: Matrix3<f64>,
}

/// Particles with their per-task and fused weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    pub states: Vec<State>,
    pub w_hog: Vec<f64>,
    pub w_norm: Vec<f64>,
    pub w_fused: Vec<f64>,
}

impl ParticleSet {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Appearance template for both weighting tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub f_hog: FeatureMap,
    pub f_norm: FeatureMap,
    pub base_w: f64,
    pub base_h: f64,
}

/// Square-root factor `L` with `L L^T = sigma`.
///
/// Cholesky is tried first. Semidefinite or slightly indefinite matrices
/// fall back to an eigen-decomposition where eigenvalues below `1e-12`
/// contribute nothing, so a zero covariance yields a zero factor.
pub fn covariance_factor(sigma: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    if sigma.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("covariance has non-finite entries"));
    }
    let sym = (sigma + sigma.transpose()) * 0.5;
    if let Some(chol) = sym.cholesky() {
        return Ok(chol.l());
    }
    let eig = SymmetricEigen::new(sym);
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("covariance eigen-decomposition failed"));
    }
    let roots = eig
        .eigenvalues
        .map(|l| if l > EIGEN_CLAMP { libm::sqrt(l) } else { 0.0 });
    Ok(eig.eigenvectors * Matrix3::from_diagonal(&roots))
}

/// Draws `m` particles from `N(mu, sigma)` with a seeded ChaCha stream.
/// Scales are clamped into `limits`. All weights start uniform.
pub fn sample_particles(
    mu: &State,
    sigma: &Matrix3<f64>,
    m: usize,
    seed: u64,
    limits: ScaleLimits,
) -> Result<ParticleSet> {
    if m == 0 {
        return Err(Error::Input("particle count must be at least 1"));
    }
    if !mu.is_finite() {
        return Err(Error::Input("mean state must be finite"));
    }
    let factor = covariance_factor(sigma)?;
    let center = mu.to_vector();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = (0..m)
        .map(|_| {
            let z = Vector3::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            );
            let mut s = State::from_vector(&(center + factor * z));
            s.s = s.s.clamp(limits.min, limits.max);
            s
        })
        .collect();
    let uniform = alloc::vec![1.0 / m as f64; m];
    Ok(ParticleSet {
        states,
        w_hog: uniform.clone(),
        w_norm: uniform.clone(),
        w_fused: uniform,
    })
}

/// Normalizes in place so the weights sum to one. Non-finite or negative
/// entries count as zero; an all-zero vector becomes uniform.
pub fn normalize_weights(weights: &mut [f64]) {
    for w in weights.iter_mut() {
        if !w.is_finite() || *w < 0.0 {
            *w = 0.0;
        }
    }
    let total: f64 = weights.iter().sum();
    if total > 0.0 && total.is_finite() {
        for w in weights.iter_mut() {
            *w /= total;
        }
    } else if !weights.is_empty() {
        let uniform = 1.0 / weights.len() as f64;
        weights.iter_mut().for_each(|w| *w = uniform);
    }
}

/// Which appearance cue a weighting uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Hog,
    Norm,
}

/// How particles are turned into appearance observations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationModel {
    pub template_w: usize,
    pub template_h: usize,
    pub cell_size: usize,
    /// Likelihood bandwidth.
    /// Likelihood bandwidth of the gray-norm task.
    pub sigma_l: f64,
    /// Likelihood bandwidth of the HOG task, whose features are far smaller
    /// than the unit-variance gray-norm ones.
    pub sigma_l_hog: f64,
}

/// Gaussian similarity `exp(-|a - b|^2 / (2 sigma_l^2 dim))`.
pub fn similarity(template: &FeatureMap, observed: &FeatureMap, sigma_l: f64) -> Result<f64> {
    let d2 = template.squared_distance(observed)?;
    let dim = template.as_slice().len() as f64;
    Ok(libm::exp(-d2 / (2.0 * sigma_l * sigma_l * dim)))
}

/// HOG and gray-norm features of the box a state describes.
pub fn observe(
    frame: &GrayImage,
    state: &State,
    base_w: f64,
    base_h: f64,
    obs: &ObservationModel,
) -> Result<(FeatureMap, FeatureMap)> {
    let patch = sample_patch(frame, &state.rect(base_w, base_h), obs.template_w, obs.template_h);
    let hog = hog_features(&patch.pixels, obs.cell_size)?;
    Ok((hog, gray_norm(&patch.pixels)))
}

/// Unnormalized likelihoods for both tasks, from one patch per particle.
pub fn raw_task_likelihoods(
    states: &[State],
    frame: &GrayImage,
    template: &Template,
    obs: &ObservationModel,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut hog = Vec::with_capacity(states.len());
    let mut norm = Vec::with_capacity(states.len());
    for s in states {
        let (fh, fn_) = observe(frame, s, template.base_w, template.base_h, obs)?;
        hog.push(similarity(&template.f_hog, &fh, obs.sigma_l_hog)?);
        norm.push(similarity(&template.f_norm, &fn_, obs.sigma_l)?);
    }
    Ok((hog, norm))
}

/// Normalized weights of one task for every particle.
pub fn particle_weights(
    states: &[State],
    frame: &GrayImage,
    template: &Template,
    task: Task,
    obs: &ObservationModel,
) -> Result<Vec<f64>> {
    if states.is_empty() {
        return Err(Error::Input("no particles to weight"));
    }
    let mut w = Vec::with_capacity(states.len());
    for s in states {
        let (fh, fn_) = observe(frame, s, template.base_w, template.base_h, obs)?;
        w.push(match task {
            Task::Hog => similarity(&template.f_hog, &fh, obs.sigma_l_hog)?,
            Task::Norm => similarity(&template.f_norm, &fn_, obs.sigma_l)?,
        });
    }
    normalize_weights(&mut w);
    Ok(w)
}

/// Convex combination `theta * w_hog + (1 - theta) * w_norm`.
pub fn fuse_weights(w_hog: &[f64], w_norm: &[f64], theta: f64) -> Result<Vec<f64>> {
    if w_hog.len() != w_norm.len() {
        return Err(Error::Dimension {
            expected: "weight vectors of equal length",
            actual: "weight vectors of different length",
        });
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::Input("theta must lie in [0, 1]"));
    }
    Ok(w_hog
        .iter()
        .zip(w_norm)
        .map(|(h, n)| theta * h + (1.0 - theta) * n)
        .collect())
}

/// Weighted mean and outer-product covariance of the particles, with the
/// covariance diagonal floored at [`COVARIANCE_FLOOR`].
pub fn estimate_moments(states: &[State], weights: &[f64]) -> Result<GaussianBelief> {
    if states.is_empty() || states.len() != weights.len() {
        return Err(Error::Dimension {
            expected: "one weight per particle",
            actual: "mismatched particle and weight counts",
        });
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::Numeric("weights must be finite and non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numeric("weights sum to zero"));
    }
    let mut mean = Vector3::zeros();
    for (s, w) in states.iter().zip(weights) {
        mean += s.to_vector() * (w / total);
    }
    let mut cov = Matrix3::zeros();
    for (s, w) in states.iter().zip(weights) {
        let d = mean - s.to_vector();
        cov += d * d.transpose() * (w / total);
    }
    for i in 0..3 {
        cov[(i, i)] = cov[(i, i)].max(COVARIANCE_FLOOR);
    }
    Ok(GaussianBelief {
        mu: State::from_vector(&mean),
        sigma: cov,
    })
}
