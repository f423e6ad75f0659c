//! Weak experts over a motion-bounded search scope.
//!
//! Every expert is the shared correlation filter evaluated on one sliding
//! window. Experts are scored by peak value and APCE, weighted, and the
//! maximum-weight decision is handed on to the particle filter.

use alloc::vec::Vec;

use crate::corrfilter::{argmax_response, wrap_displacement, FilterModel, ResponseMap};
use crate::features::{hog_features, FeatureMap};
use crate::imaging::{sample_patch, GrayImage, Rect};
use crate::Result;

/// Per-axis maximum historical displacement of the tracked center.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotionBound {
    pub dx: f64,
    pub dy: f64,
}

/// Grows the bound with the latest displacement; bounds never shrink.
pub fn update_motion_bound(prev: MotionBound, mu_t: (f64, f64), mu_prev: (f64, f64)) -> MotionBound {
    MotionBound {
        dx: prev.dx.max((mu_t.0 - mu_prev.0).abs()),
        dy: prev.dy.max((mu_t.1 - mu_prev.1).abs()),
    }
}

/// Region searched by the experts: the previous center widened by the
/// motion bound on each axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchScope {
    pub cx: f64,
    pub cy: f64,
    pub dx: f64,
    pub dy: f64,
    pub padding: f64,
}

impl SearchScope {
    pub fn new(center: (f64, f64), bound: MotionBound, padding: f64) -> Self {
        SearchScope {
            cx: center.0,
            cy: center.1,
            dx: bound.dx.max(0.0),
            dy: bound.dy.max(0.0),
            padding,
        }
    }

    /// Area covered by all windows that can be placed for `target`.
    pub fn rect(&self, target: &Rect) -> Rect {
        let pad = self.padding.max(1.0);
        Rect::new(
            self.cx,
            self.cy,
            2.0 * self.dx + pad * target.w,
            2.0 * self.dy + pad * target.h,
        )
    }

    /// Rectangle spanned by admissible window centers.
    pub fn center_rect(&self) -> Rect {
        Rect::new(self.cx, self.cy, 2.0 * self.dx, 2.0 * self.dy)
    }
}

const SPAN_EPS: f64 = 1e-9;

// Offsets k * stride inside [-d, d], plus the endpoints when d is not a
// whole number of strides.
fn axis_offsets(d: f64, stride: f64) -> Vec<f64> {
    if d <= SPAN_EPS || stride <= 0.0 {
        return alloc::vec![0.0];
    }
    let k = libm::floor(d / stride + SPAN_EPS) as i64;
    let mut offsets: Vec<f64> = (-k..=k).map(|i| i as f64 * stride).collect();
    if d - k as f64 * stride > SPAN_EPS {
        offsets.insert(0, -d);
        offsets.push(d);
    }
    offsets
}

/// Lays out search windows of size `padding * target` over the scope.
///
/// Window centers step by half the target extent per axis and always
/// include the scope center. When the grid holds more than `max_experts`
/// windows, the ones closest to the center are kept. The result is ordered
/// by distance from the center, so expert 0 is the centered window.
pub fn tile_windows(scope: &SearchScope, target: &Rect, max_experts: usize) -> Vec<Rect> {
    let xs = axis_offsets(scope.dx, target.w / 2.0);
    let ys = axis_offsets(scope.dy, target.h / 2.0);
    let mut offsets: Vec<(f64, usize, f64, f64)> = Vec::with_capacity(xs.len() * ys.len());
    for &oy in &ys {
        for &ox in &xs {
            offsets.push((ox * ox + oy * oy, offsets.len(), ox, oy));
        }
    }
    offsets.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    offsets
        .into_iter()
        .take(max_experts.max(1))
        .map(|(_, _, ox, oy)| {
            Rect::new(
                scope.cx + ox,
                scope.cy + oy,
                scope.padding * target.w,
                scope.padding * target.h,
            )
        })
        .collect()
}

/// Pixel size a window is resampled to before HOG extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowGeometry {
    pub width_px: usize,
    pub height_px: usize,
    pub cell_size: usize,
}

impl WindowGeometry {
    pub fn cells(&self) -> (usize, usize) {
        (self.width_px / self.cell_size, self.height_px / self.cell_size)
    }
}

/// HOG map of a window resampled to the filter geometry.
pub fn window_features(frame: &GrayImage, window: &Rect, geom: &WindowGeometry) -> Result<FeatureMap> {
    let patch = sample_patch(frame, window, geom.width_px, geom.height_px);
    hog_features(&patch.pixels, geom.cell_size)
}

/// One expert's detection.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertDecision {
    pub expert_id: usize,
    pub window: Rect,
    /// Detected target center in frame pixels.
    pub peak: (f64, f64),
    pub f_max: f64,
    pub apce: f64,
    pub weight: f64,
}

/// Average peak-to-correlation energy:
/// `(F_max - F_min)^2 / mean((F - F_min)^2)`, zero for flat maps.
pub fn apce(s: &ResponseMap) -> f64 {
    let values = s.as_slice();
    let (mut max, mut min) = (f64::NEG_INFINITY, f64::INFINITY);
    for &v in values {
        max = max.max(v);
        min = min.min(v);
    }
    let energy = values.iter().map(|v| (v - min) * (v - min)).sum::<f64>() / values.len() as f64;
    if energy < 1e-12 {
        return 0.0;
    }
    (max - min) * (max - min) / energy
}

/// Runs the filter on one window and maps the response peak back to frame
/// pixels. The weight is left at zero.
pub fn weak_decide(
    model: &FilterModel,
    geom: &WindowGeometry,
    frame: &GrayImage,
    window: &Rect,
    expert_id: usize,
) -> Result<ExpertDecision> {
    let features = window_features(frame, window, geom)?;
    let response = model.respond(&features)?;
    Ok(decision_from_response(&response, geom, window, expert_id))
}

pub(crate) fn decision_from_response(
    response: &ResponseMap,
    geom: &WindowGeometry,
    window: &Rect,
    expert_id: usize,
) -> ExpertDecision {
    let (px, py, f_max) = argmax_response(response);
    let du = wrap_displacement(px, response.width()) as f64;
    let dv = wrap_displacement(py, response.height()) as f64;
    let scale_x = window.w / geom.width_px as f64;
    let scale_y = window.h / geom.height_px as f64;
    let cell = geom.cell_size as f64;
    ExpertDecision {
        expert_id,
        window: *window,
        peak: (
            window.cx + du * cell * scale_x,
            window.cy + dv * cell * scale_y,
        ),
        f_max,
        apce: apce(response),
        weight: 0.0,
    }
}

/// How expert scores are turned into weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightRule {
    /// `w ~ F_max * APCE`
    #[default]
    PeakTimesApce,
    /// `w ~ F_max`
    Peak,
}

/// Normalizes expert scores into weights summing to one. Negative scores
/// count as zero; all-zero scores fall back to uniform weights.
pub fn expert_weights(decisions: &mut [ExpertDecision], rule: WeightRule) {
    if decisions.is_empty() {
        return;
    }
    let score = |d: &ExpertDecision| -> f64 {
        let s = match rule {
            WeightRule::PeakTimesApce => d.f_max * d.apce,
            WeightRule::Peak => d.f_max,
        };
        if s.is_finite() {
            s.max(0.0)
        } else {
            0.0
        }
    };
    let total: f64 = decisions.iter().map(score).sum();
    if total > 0.0 {
        for d in decisions.iter_mut() {
            d.weight = score(d) / total;
        }
    } else {
        let uniform = 1.0 / decisions.len() as f64;
        for d in decisions.iter_mut() {
            d.weight = uniform;
        }
    }
}

/// Peak of the maximum-weight expert; the lowest expert id wins ties.
pub fn select_expert(decisions: &[ExpertDecision]) -> Option<((f64, f64), usize)> {
    let mut best: Option<&ExpertDecision> = None;
    for d in decisions {
        best = match best {
            Some(b) if d.weight > b.weight || (d.weight == b.weight && d.expert_id < b.expert_id) => Some(d),
            Some(b) => Some(b),
            None => Some(d),
        };
    }
    best.map(|d| (d.peak, d.expert_id))
}

/// Running means of the selected expert's scores over reliable frames.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReliabilityState {
    pub mean_fmax: f64,
    pub mean_apce: f64,
    pub count: u64,
}

impl ReliabilityState {
    /// Ratio test against the historical means. The first two frames always
    /// pass. Only passing frames enter the history.
    pub fn gate(&mut self, best: &ExpertDecision, beta_f: f64, beta_a: f64) -> bool {
        let pass = self.count < 2
            || (best.f_max >= beta_f * self.mean_fmax && best.apce >= beta_a * self.mean_apce);
        if pass {
            let n = self.count as f64;
            self.mean_fmax = (self.mean_fmax * n + best.f_max.max(0.0)) / (n + 1.0);
            self.mean_apce = (self.mean_apce * n + best.apce.max(0.0)) / (n + 1.0);
            self.count += 1;
        }
        pass
    }
}

/// Free-function form of [`ReliabilityState::gate`].
pub fn reliability_gate(state: &mut ReliabilityState, best: &ExpertDecision, beta_f: f64, beta_a: f64) -> bool {
    state.gate(best, beta_f, beta_a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use alloc::vec;

    fn decision(id: usize, f_max: f64, apce: f64, peak: (f64, f64)) -> ExpertDecision {
        ExpertDecision {
            expert_id: id,
            window: Rect::new(0.0, 0.0, 1.0, 1.0),
            peak,
            f_max,
            apce,
            weight: 0.0,
        }
    }

    #[test]
    fn motion_bound_takes_per_axis_maxima() {
        let traj = [(0.0, 0.0), (3.0, 4.0), (5.0, 4.0)];
        let mut b = MotionBound::default();
        assert_eq!(b, MotionBound { dx: 0.0, dy: 0.0 });
        for w in traj.windows(2) {
            b = update_motion_bound(b, w[1], w[0]);
        }
        assert_eq!(b, MotionBound { dx: 3.0, dy: 4.0 });

        let mut still = MotionBound::default();
        for _ in 0..10 {
            still = update_motion_bound(still, (7.0, 7.0), (7.0, 7.0));
        }
        assert_eq!(still, MotionBound::default());
    }

    #[test]
    fn degenerate_scope_has_one_window() {
        let target = Rect::new(50.0, 40.0, 20.0, 30.0);
        let scope = SearchScope::new((50.0, 40.0), MotionBound::default(), 1.2);
        let w = tile_windows(&scope, &target, 9);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0], Rect::new(50.0, 40.0, 24.0, 36.0));
    }

    #[test]
    fn half_width_bound_gives_a_row_of_three() {
        let target = Rect::new(50.0, 40.0, 20.0, 30.0);
        let scope = SearchScope::new((50.0, 40.0), MotionBound { dx: 10.0, dy: 0.0 }, 1.2);
        let w = tile_windows(&scope, &target, 9);
        let mut xs: Vec<f64> = w.iter().map(|r| r.cx).collect();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs, vec![40.0, 50.0, 60.0]);
        assert!(w.iter().all(|r| r.cy == 40.0));
        assert_eq!(w[0].center(), (50.0, 40.0));
    }

    #[test]
    fn windows_are_capped_and_centered() {
        let target = Rect::new(0.0, 0.0, 10.0, 10.0);
        let scope = SearchScope::new((100.0, 100.0), MotionBound { dx: 23.0, dy: 17.0 }, 1.2);
        let w = tile_windows(&scope, &target, 9);
        assert_eq!(w.len(), 9);
        let area = scope.center_rect();
        assert!(w.iter().all(|r| area.contains_point(r.cx, r.cy)));
        assert_eq!(w[0].center(), (100.0, 100.0));
        assert_eq!(tile_windows(&scope, &target, 4).len(), 4);
    }

    #[test]
    fn apce_reference_values() {
        let mut one_hot = Grid::filled(3, 3, 0.0);
        one_hot[(1, 2)] = 1.0;
        assert_eq!(apce(&one_hot), 9.0);
        assert_eq!(apce(&Grid::filled(4, 3, 0.7)), 0.0);
        let m = Grid::from_vec(2, 2, vec![0.5, 0.1, 0.1, 0.1]).unwrap();
        assert!((apce(&m) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn weights_follow_peak_times_apce() {
        let mut one = vec![decision(0, 0.4, 3.0, (0.0, 0.0))];
        expert_weights(&mut one, WeightRule::PeakTimesApce);
        assert_eq!(one[0].weight, 1.0);

        let mut two = vec![decision(0, 1.0, 2.0, (0.0, 0.0)), decision(1, 1.0, 6.0, (0.0, 0.0))];
        expert_weights(&mut two, WeightRule::PeakTimesApce);
        assert!((two[0].weight - 0.25).abs() < 1e-15 && (two[1].weight - 0.75).abs() < 1e-15);

        let mut zeros = vec![decision(0, 0.0, 1.0, (0.0, 0.0)), decision(1, 1.0, 0.0, (0.0, 0.0)), decision(2, 0.0, 0.0, (0.0, 0.0))];
        expert_weights(&mut zeros, WeightRule::PeakTimesApce);
        assert!(zeros.iter().all(|d| (d.weight - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn selection_masks_all_but_the_heaviest() {
        let mut ds = vec![
            decision(0, 0.0, 0.0, (10.0, 10.0)),
            decision(1, 0.0, 0.0, (20.0, 20.0)),
            decision(2, 0.0, 0.0, (30.0, 30.0)),
        ];
        for (d, w) in ds.iter_mut().zip([0.2, 0.5, 0.3]) {
            d.weight = w;
        }
        assert_eq!(select_expert(&ds), Some(((20.0, 20.0), 1)));
        assert_eq!(select_expert(&ds[..1]), Some(((10.0, 10.0), 0)));
        ds[0].weight = 0.5;
        ds[1].weight = 0.5;
        assert_eq!(select_expert(&ds[..2]), Some(((10.0, 10.0), 0)));
        assert_eq!(select_expert(&[]), None);
    }

    #[test]
    fn gate_ratio_test() {
        let mut warm = ReliabilityState::default();
        assert!(warm.gate(&decision(0, 0.0, 0.0, (0.0, 0.0)), 0.6, 0.5));

        let state = ReliabilityState {
            mean_fmax: 1.0,
            mean_apce: 10.0,
            count: 5,
        };
        let mut s = state;
        assert!(s.gate(&decision(0, 0.9, 8.0, (0.0, 0.0)), 0.6, 0.5));
        assert_eq!(s.count, 6);
        let mut s = state;
        assert!(!reliability_gate(&mut s, &decision(0, 0.3, 8.0, (0.0, 0.0)), 0.6, 0.5));
        assert_eq!(s, state, "rejected frames leave the history untouched");
    }
}
