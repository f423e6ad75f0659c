//! The KCF-GPF tracking loop.
//!
//! Per frame: tile windows over the search scope, let every weak expert
//! detect, gate the strongest decision on its reliability, sample particles
//! around it, fuse their HOG and gray-norm weights into a new Gaussian
//! belief, grow the motion bound, and adapt template and filter when the
//! frame was reliable.

use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector3};

use crate::corrfilter::{make_label, train, FilterKind, FilterModel, GaussianLabel};
use crate::ensemble::{
    expert_weights, select_expert, tile_windows, update_motion_bound, weak_decide,
    window_features, ExpertDecision, MotionBound, ReliabilityState, SearchScope, WeightRule,
    WindowGeometry,
};
use crate::features::FeatureMap;
use crate::gpf::{
    estimate_moments, fuse_weights, normalize_weights, observe, raw_task_likelihoods,
    sample_particles, GaussianBelief, ObservationModel, ScaleLimits, State, Template,
};
use crate::grid::Grid;
use crate::imaging::{hann_window, GrayImage, Rect};
use crate::{Error, Result};

/// Longest side a search window is resampled to before feature extraction.
const WINDOW_MAX_PX: f64 = 96.0;
/// Shortest side a search window is resampled to before feature extraction.
const WINDOW_MIN_PX: f64 = 32.0;

/// Overrides the reliability gate, mainly for experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GateOverride {
    #[default]
    None,
    AlwaysPass,
    AlwaysFail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    /// Window size relative to the target box.
    pub padding: f64,
    /// Gaussian kernel bandwidth of the correlation filter.
    pub kernel_sigma: f64,
    /// Filter adaptation rate.
    pub adaptation_rate: f64,
    /// Particles per frame.
    pub sample_count: usize,
    /// Weight of the HOG task in the fused particle weights.
    pub theta: f64,
    /// Template memory.
    pub rho: f64,
    /// Ridge weight of the correlation filter.
    pub lambda: f64,
    pub cell_size: usize,
    pub max_experts: usize,
    pub beta_f: f64,
    pub beta_a: f64,
    /// Likelihood bandwidth of the gray-norm particle weights.
    pub sigma_l: f64,
    /// Likelihood bandwidth of the HOG particle weights.
    pub sigma_l_hog: f64,
    pub template_w: usize,
    pub template_h: usize,
    pub scale_min: f64,
    pub scale_max: f64,
    pub seed: u64,
    pub kernel: FilterKind,
    pub weight_rule: WeightRule,
    /// Label bandwidth as a fraction of `sqrt(cells)`.
    pub label_sigma_factor: f64,
    /// Initial positional std as a fraction of the box extent.
    pub init_position_frac: f64,
    pub init_scale_std: f64,
    /// Positional std used when the gate rejects a frame.
    pub fallback_position_std: f64,
    pub fallback_scale_std: f64,
    /// Std added to the previous covariance before sampling a reliable frame.
    pub process_position_std: f64,
    pub process_scale_std: f64,
    pub gate_override: GateOverride,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            padding: 1.2,
            kernel_sigma: 0.5,
            adaptation_rate: 0.045,
            sample_count: 200,
            theta: 0.65,
            rho: 0.8,
            lambda: 1e-4,
            cell_size: 4,
            max_experts: 9,
            beta_f: 0.6,
            beta_a: 0.5,
            sigma_l: 0.2,
            sigma_l_hog: 0.03,
            template_w: 32,
            template_h: 32,
            scale_min: 0.2,
            scale_max: 5.0,
            seed: 0,
            kernel: FilterKind::GaussianKernel,
            weight_rule: WeightRule::PeakTimesApce,
            label_sigma_factor: 0.1,
            init_position_frac: 0.1,
            init_scale_std: 0.02,
            fallback_position_std: 6.0,
            fallback_scale_std: 0.05,
            process_position_std: 1.0,
            process_scale_std: 0.04,
            gate_override: GateOverride::None,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v <= 1.0;
        let unit_closed = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.adaptation_rate) {
            return Err(Error::Input("adaptation_rate must lie in (0, 1]"));
        }
        if !unit_closed(self.theta) || !unit_closed(self.rho) {
            return Err(Error::Input("theta and rho must lie in [0, 1]"));
        }
        if !unit(self.beta_f) || !unit(self.beta_a) {
            return Err(Error::Input("beta_f and beta_a must lie in (0, 1]"));
        }
        if self.sample_count == 0 || self.max_experts == 0 || self.cell_size == 0 {
            return Err(Error::Input("sample_count, max_experts and cell_size must be at least 1"));
        }
        if self.template_w < self.cell_size || self.template_h < self.cell_size {
            return Err(Error::Input("template must hold at least one cell"));
        }
        if !(self.padding >= 1.0) {
            return Err(Error::Input("padding must be at least 1"));
        }
        if !(self.lambda > 0.0) || !(self.kernel_sigma > 0.0) || !(self.sigma_l > 0.0) || !(self.sigma_l_hog > 0.0) {
            return Err(Error::Input("lambda, kernel_sigma and both likelihood bandwidths must be positive"));
        }
        if !(self.label_sigma_factor > 0.0) {
            return Err(Error::Input("label_sigma_factor must be positive"));
        }
        if !(self.scale_min > 0.0) || !(self.scale_min <= 1.0) || !(self.scale_max >= 1.0) {
            return Err(Error::Input("scale limits must bracket 1"));
        }
        let stds = [
            self.init_position_frac,
            self.init_scale_std,
            self.fallback_position_std,
            self.fallback_scale_std,
            self.process_position_std,
            self.process_scale_std,
        ];
        if stds.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Input("standard deviations must be finite and non-negative"));
        }
        Ok(())
    }

    fn scale_limits(&self) -> ScaleLimits {
        ScaleLimits {
            min: self.scale_min,
            max: self.scale_max,
        }
    }

    fn observation(&self) -> ObservationModel {
        ObservationModel {
            template_w: self.template_w,
            template_h: self.template_h,
            cell_size: self.cell_size,
            sigma_l: self.sigma_l,
            sigma_l_hog: self.sigma_l_hog,
        }
    }
}

fn diag(position_std_x: f64, position_std_y: f64, scale_std: f64) -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(
        position_std_x * position_std_x,
        position_std_y * position_std_y,
        scale_std * scale_std,
    ))
}

/// Blends both task templates: `rho * old + (1 - rho) * fresh`.
pub fn update_template(t: &Template, hog: &FeatureMap, norm: &FeatureMap, rho: f64) -> Result<Template> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Input("rho must lie in [0, 1]"));
    }
    Ok(Template {
        f_hog: t.f_hog.blend(hog, rho)?,
        f_norm: t.f_norm.blend(norm, rho)?,
        base_w: t.base_w,
        base_h: t.base_h,
    })
}

fn frame_seed(seed: u64, frame: u64) -> u64 {
    let mut z = seed ^ frame.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn window_geometry(window_w: f64, window_h: f64, cell_size: usize) -> WindowGeometry {
    let longest = window_w.max(window_h);
    let factor = if longest > WINDOW_MAX_PX {
        WINDOW_MAX_PX / longest
    } else if longest < WINDOW_MIN_PX {
        WINDOW_MIN_PX / longest
    } else {
        1.0
    };
    let cells = |v: f64| ((libm::round(v * factor) as usize) / cell_size).max(2);
    WindowGeometry {
        width_px: cells(window_w) * cell_size,
        height_px: cells(window_h) * cell_size,
        cell_size,
    }
}

/// Result of one tracking step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub rect: Rect,
    pub gate_passed: bool,
    pub decisions: Vec<ExpertDecision>,
    pub selected_expert: usize,
    pub belief: GaussianBelief,
}

/// Tracker state carried across frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracker {
    cfg: TrackerConfig,
    frame_w: usize,
    frame_h: usize,
    base_w: f64,
    base_h: f64,
    geometry: WindowGeometry,
    label: GaussianLabel,
    cosine: Grid<f64>,
    filter: FilterModel,
    template: Template,
    belief: GaussianBelief,
    motion: MotionBound,
    reliability: ReliabilityState,
    frame_index: u64,
}

impl Tracker {
    /// Initializes on the first frame from the given target box.
    pub fn init(frame: &GrayImage, target: Rect, cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        if !target.is_valid() || target.w < 2.0 || target.h < 2.0 {
            return Err(Error::Input("target box must be at least 2x2 pixels"));
        }
        let geometry = window_geometry(cfg.padding * target.w, cfg.padding * target.h, cfg.cell_size);
        let (cells_x, cells_y) = geometry.cells();
        let label = make_label(
            cells_x,
            cells_y,
            cfg.label_sigma_factor * libm::sqrt((cells_x * cells_y) as f64),
        );
        let cosine = hann_window(cells_x, cells_y);
        let window = target.scaled(cfg.padding);
        let features = window_features(frame, &window, &geometry)?;
        let filter = train(
            cfg.kernel,
            &features,
            &label,
            cfg.lambda,
            cfg.kernel_sigma,
            Some(cosine.clone()),
        )?;

        let mu = State::new(target.cx, target.cy, 1.0);
        let (f_hog, f_norm) = observe(frame, &mu, target.w, target.h, &cfg.observation())?;
        let template = Template {
            f_hog,
            f_norm,
            base_w: target.w,
            base_h: target.h,
        };
        let belief = GaussianBelief {
            mu,
            sigma: diag(
                cfg.init_position_frac * target.w,
                cfg.init_position_frac * target.h,
                cfg.init_scale_std,
            ),
        };
        Ok(Tracker {
            frame_w: frame.width(),
            frame_h: frame.height(),
            base_w: target.w,
            base_h: target.h,
            geometry,
            label,
            cosine,
            filter,
            template,
            belief,
            motion: MotionBound::default(),
            reliability: ReliabilityState::default(),
            frame_index: 1,
            cfg,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn belief(&self) -> &GaussianBelief {
        &self.belief
    }

    pub fn template(&self) -> &Template {
        &self.template
    }

    pub fn filter(&self) -> &FilterModel {
        &self.filter
    }

    pub fn motion_bound(&self) -> MotionBound {
        self.motion
    }

    pub fn reliability(&self) -> &ReliabilityState {
        &self.reliability
    }

    pub fn geometry(&self) -> &WindowGeometry {
        &self.geometry
    }

    /// Frames seen so far, counting the initialization frame.
    pub fn frame_index(&self) -> u64 {
        self.frame_index
    }

    pub fn current_rect(&self) -> Rect {
        self.belief.mu.rect(self.base_w, self.base_h)
    }

    fn target_rect(&self, state: &State) -> Rect {
        state.rect(self.base_w, self.base_h)
    }

    /// Tracks the target into the next frame.
    pub fn step(&mut self, frame: &GrayImage) -> Result<StepOutput> {
        if frame.width() != self.frame_w || frame.height() != self.frame_h {
            return Err(Error::Dimension {
                expected: "frame of the sequence's size",
                actual: "frame of another size",
            });
        }
        let cfg = &self.cfg;
        let prev = self.belief.mu;
        let target = self.target_rect(&prev);

        let scope = SearchScope::new((prev.x, prev.y), self.motion, cfg.padding);
        let windows = tile_windows(&scope, &target, cfg.max_experts);
        let mut decisions = windows
            .iter()
            .enumerate()
            .map(|(k, w)| weak_decide(&self.filter, &self.geometry, frame, w, k))
            .collect::<Result<Vec<_>>>()?;
        expert_weights(&mut decisions, cfg.weight_rule);
        let (position, selected) = select_expert(&decisions).ok_or(Error::Input("no experts"))?;

        let gate = match cfg.gate_override {
            GateOverride::None => self.reliability.gate(&decisions[selected], cfg.beta_f, cfg.beta_a),
            GateOverride::AlwaysPass => true,
            GateOverride::AlwaysFail => false,
        };

        let sigma = if gate {
            self.belief.sigma
                + diag(
                    cfg.process_position_std,
                    cfg.process_position_std,
                    cfg.process_scale_std,
                )
        } else {
            diag(
                cfg.fallback_position_std,
                cfg.fallback_position_std,
                cfg.fallback_scale_std,
            )
        };
        let proposal = State::new(position.0, position.1, prev.s);
        let particles = sample_particles(
            &proposal,
            &sigma,
            cfg.sample_count,
            frame_seed(cfg.seed, self.frame_index),
            cfg.scale_limits(),
        )?;
        let obs = cfg.observation();
        let (mut w_hog, mut w_norm) =
            raw_task_likelihoods(&particles.states, frame, &self.template, &obs)?;
        normalize_weights(&mut w_hog);
        normalize_weights(&mut w_norm);
        let fused = fuse_weights(&w_hog, &w_norm, cfg.theta)?;
        let mut belief = estimate_moments(&particles.states, &fused)?;
        belief.mu.s = belief.mu.s.clamp(cfg.scale_min, cfg.scale_max);

        self.motion = update_motion_bound(self.motion, (belief.mu.x, belief.mu.y), (prev.x, prev.y));

        if gate {
            let (hog, norm) = observe(frame, &belief.mu, self.base_w, self.base_h, &obs)?;
            self.template = update_template(&self.template, &hog, &norm, cfg.rho)?;
            let window = self.target_rect(&belief.mu).scaled(cfg.padding);
            let features = window_features(frame, &window, &self.geometry)?;
            let fresh = train(
                cfg.kernel,
                &features,
                &self.label,
                cfg.lambda,
                cfg.kernel_sigma,
                Some(self.cosine.clone()),
            )?;
            self.filter = self.filter.adapt(&fresh, cfg.adaptation_rate)?;
        }

        self.belief = belief;
        self.frame_index += 1;
        Ok(StepOutput {
            rect: self.current_rect(),
            gate_passed: gate,
            decisions,
            selected_expert: selected,
            belief,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureMap;
    use alloc::vec;

    fn scene_frame() -> GrayImage {
        GrayImage::from_fn(120, 100, |x, y| {
            let inside = (40..72).contains(&x) && (30..62).contains(&y);
            if inside {
                if ((x - 40) / 8 + (y - 30) / 8) % 2 == 0 { 0.9 } else { 0.1 }
            } else {
                0.5 + 0.05 * libm::sin(x as f64 * 0.9 + y as f64 * 0.4)
            }
        })
    }

    #[test]
    fn template_blend_values() {
        let t = Template {
            f_hog: FeatureMap::from_vec(1, 1, 1, vec![1.0]).unwrap(),
            f_norm: FeatureMap::from_vec(1, 1, 1, vec![1.0]).unwrap(),
            base_w: 1.0,
            base_h: 1.0,
        };
        let fresh = FeatureMap::from_vec(1, 1, 1, vec![0.5]).unwrap();
        let u = update_template(&t, &fresh, &fresh, 0.8).unwrap();
        assert!((u.f_hog.as_slice()[0] - 0.9).abs() < 1e-15);
        assert_eq!(update_template(&t, &fresh, &fresh, 1.0).unwrap(), t);
        let replaced = update_template(&t, &fresh, &fresh, 0.0).unwrap();
        assert_eq!(replaced.f_norm.as_slice(), &[0.5]);
        let wrong = FeatureMap::zeros(2, 1, 1);
        assert!(update_template(&t, &wrong, &fresh, 0.5).is_err());
    }

    #[test]
    fn tiny_box_is_rejected() {
        let err = Tracker::init(&scene_frame(), Rect::new(50.0, 50.0, 1.0, 1.0), TrackerConfig::default());
        assert!(matches!(err, Err(Error::Input(_))));
    }

    #[test]
    fn init_is_deterministic() {
        let frame = scene_frame();
        let target = Rect::from_corner(40.0, 30.0, 32.0, 32.0);
        let a = Tracker::init(&frame, target, TrackerConfig::default()).unwrap();
        let b = Tracker::init(&frame, target, TrackerConfig::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.motion_bound(), MotionBound::default());
        assert_eq!(a.belief().mu, State::new(56.0, 46.0, 1.0));
    }

    #[test]
    fn stationary_step_stays_put() {
        let frame = scene_frame();
        let target = Rect::from_corner(40.0, 30.0, 32.0, 32.0);
        let mut t = Tracker::init(&frame, target, TrackerConfig::default()).unwrap();
        let out = t.step(&frame).unwrap();
        let err = libm::sqrt((out.rect.cx - 56.0).powi(2) + (out.rect.cy - 46.0).powi(2));
        assert!(err <= 2.0, "center error {err}");
    }

    #[test]
    fn frame_size_must_match() {
        let frame = scene_frame();
        let mut t = Tracker::init(&frame, Rect::from_corner(40.0, 30.0, 32.0, 32.0), TrackerConfig::default()).unwrap();
        assert!(t.step(&GrayImage::constant(10, 10, 0.5)).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = TrackerConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.adaptation_rate = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = TrackerConfig {
            sample_count: 0,
            ..TrackerConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
