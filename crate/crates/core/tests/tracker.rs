use kcfgpf_core::corrfilter::{argmax_response, wrap_displacement};
use kcfgpf_core::ensemble::window_features;
use kcfgpf_core::metrics::center_error;
use kcfgpf_core::synthetic::{gen_synthetic, SyntheticScript, SyntheticSequence};
use kcfgpf_core::tracker::GateOverride;
use kcfgpf_core::{Rect, StepOutput, Tracker, TrackerConfig};

fn run(seq: &SyntheticSequence, cfg: TrackerConfig) -> (Tracker, Vec<StepOutput>) {
    let mut t = Tracker::init(&seq.frames[0], seq.ground_truth[0], cfg).unwrap();
    let outs = seq.frames[1..].iter().map(|f| t.step(f).unwrap()).collect();
    (t, outs)
}

#[test]
fn static_target_is_held() {
    let seq = gen_synthetic(&SyntheticScript::stationary(20), 1);
    let (_, outs) = run(&seq, TrackerConfig::default());
    let mean = outs
        .iter()
        .zip(&seq.ground_truth[1..])
        .map(|(o, g)| center_error(&o.rect, g))
        .sum::<f64>()
        / outs.len() as f64;
    assert!(mean <= 2.0, "mean center error {mean:.3}");
}

#[test]
fn fast_motion_grows_the_search_scope() {
    let seq = gen_synthetic(&SyntheticScript::fast_motion(40, 15.0), 2);
    let mut t = Tracker::init(&seq.frames[0], seq.ground_truth[0], TrackerConfig::default()).unwrap();
    for (i, f) in seq.frames.iter().enumerate().skip(1) {
        let out = t.step(f).unwrap();
        if i >= 30 {
            let e = center_error(&out.rect, &seq.ground_truth[i]);
            assert!(e <= 5.0, "frame {i}: error {e:.2}");
        }
    }
    assert!(t.motion_bound().dx >= 15.0, "bound {:?}", t.motion_bound());
}

#[test]
fn occlusion_trips_the_gate_and_freezes_the_template() {
    let script = SyntheticScript::occlusion(40, 30, 5);
    let seq = gen_synthetic(&script, 3);
    let mut t = Tracker::init(&seq.frames[0], seq.ground_truth[0], TrackerConfig::default()).unwrap();
    let mut fired = 0;
    for (i, f) in seq.frames.iter().enumerate().skip(1) {
        let before = t.template().clone();
        let out = t.step(f).unwrap();
        if seq.occluded[i] {
            if !out.gate_passed {
                fired += 1;
            }
            assert_eq!(t.template(), &before, "template changed on occluded frame {i}");
        }
    }
    assert!(fired >= 4, "gate fired on {fired} of 5 occluded frames");
}

#[test]
fn failed_gate_freezes_all_learning() {
    let seq = gen_synthetic(&SyntheticScript::linear(15, 2.0), 4);
    let cfg = TrackerConfig {
        gate_override: GateOverride::AlwaysFail,
        ..TrackerConfig::default()
    };
    let initial = Tracker::init(&seq.frames[0], seq.ground_truth[0], cfg.clone()).unwrap();
    let (t, outs) = run(&seq, cfg);
    assert!(outs.iter().all(|o| !o.gate_passed));
    assert_eq!(t.template(), initial.template());
    assert_eq!(t.filter(), initial.filter());
    assert_eq!(t.reliability(), initial.reliability());
}

#[test]
fn single_window_single_particle_is_plain_detection() {
    let seq = gen_synthetic(&SyntheticScript::linear(3, 3.0), 5);
    let cfg = TrackerConfig {
        max_experts: 1,
        sample_count: 1,
        init_position_frac: 0.0,
        init_scale_std: 0.0,
        process_position_std: 0.0,
        process_scale_std: 0.0,
        ..TrackerConfig::default()
    };
    let mut t = Tracker::init(&seq.frames[0], seq.ground_truth[0], cfg.clone()).unwrap();
    let filter = t.filter().clone();
    let geom = *t.geometry();
    let window = seq.ground_truth[0].scaled(cfg.padding);

    let response = filter.respond(&window_features(&seq.frames[1], &window, &geom).unwrap()).unwrap();
    let (px, py, _) = argmax_response(&response);
    let step_x = geom.cell_size as f64 * window.w / geom.width_px as f64;
    let step_y = geom.cell_size as f64 * window.h / geom.height_px as f64;
    let expected = Rect::new(
        window.cx + wrap_displacement(px, response.width()) as f64 * step_x,
        window.cy + wrap_displacement(py, response.height()) as f64 * step_y,
        seq.ground_truth[0].w,
        seq.ground_truth[0].h,
    );

    let out = t.step(&seq.frames[1]).unwrap();
    assert_eq!(out.decisions.len(), 1);
    assert_eq!(out.rect, expected);
}

#[test]
fn identical_runs_are_bitwise_equal() {
    let seq = gen_synthetic(&SyntheticScript::linear(12, 2.0), 6);
    let (_, a) = run(&seq, TrackerConfig::default());
    let (_, b) = run(&seq, TrackerConfig::default());
    assert_eq!(a, b);
    let (_, c) = run(
        &seq,
        TrackerConfig {
            seed: 99,
            ..TrackerConfig::default()
        },
    );
    assert_ne!(a, c);
}

#[test]
fn boxes_stay_positive_and_scales_in_limits() {
    let seq = gen_synthetic(&SyntheticScript::scale_ramp(30, 1.5), 7);
    let cfg = TrackerConfig {
        scale_min: 0.9,
        scale_max: 1.2,
        ..TrackerConfig::default()
    };
    let (_, outs) = run(&seq, cfg);
    for o in outs {
        assert!(o.rect.w > 0.0 && o.rect.h > 0.0);
        assert!((0.9..=1.2).contains(&o.belief.mu.s));
    }
}
