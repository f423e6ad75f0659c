//! Fourier-domain results checked against dense brute-force solves.

mod support;

use kcfgpf_core::corrfilter::{gaussian_kernel_correlation, make_label, train_kcf, train_linear};
use kcfgpf_core::ensemble::apce;
use kcfgpf_core::grid::Grid;
use rand::Rng;
use support::*;

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn linear_filter_matches_dense_ridge() {
    let mut r = rng(11);
    for case in 0..40 {
        let (w, h) = (r.random_range(8..=12), r.random_range(8..=12));
        let d = if case % 2 == 0 { 1 } else { 3 };
        let x = random_map(&mut r, w, h, d);
        let t = random_map(&mut r, w, h, d);
        let label = make_label(w, h, 1.5);
        let lambda = 10f64.powf(r.random_range(-3.0..0.0));
        let model = train_linear(&x, &label, lambda).unwrap();
        let fast = model.respond(&t).unwrap();
        let slow = dense_linear_response(&x, label.data.as_slice(), lambda, &t);
        let err = max_abs_diff(fast.as_slice(), &slow);
        assert!(err < 1e-8, "case {case}: {w}x{h}x{d}, error {err:e}");
    }
}

#[test]
fn kernel_filter_matches_dense_kernel_ridge() {
    let mut r = rng(12);
    for case in 0..40 {
        let (w, h) = (r.random_range(8..=12), r.random_range(8..=12));
        let d = if case % 2 == 0 { 1 } else { 3 };
        let x = random_map(&mut r, w, h, d);
        let t = random_map(&mut r, w, h, d);
        let label = make_label(w, h, 1.5);
        let sigma = r.random_range(0.3..1.5);
        let model = train_kcf(&x, &label, 1e-3, sigma).unwrap();
        let fast = model.respond(&t).unwrap();
        let slow = dense_kcf_response(&x, label.data.as_slice(), 1e-3, sigma, &t);
        let err = max_abs_diff(fast.as_slice(), &slow);
        assert!(err < 1e-8, "case {case}: {w}x{h}x{d}, error {err:e}");
    }
}

#[test]
fn kernel_correlation_matches_all_shifts() {
    let mut r = rng(13);
    for size in [3, 5] {
        for d in 1..=3 {
            for _ in 0..5 {
                let x = random_map(&mut r, size, size, d);
                let z = random_map(&mut r, size, size, d);
                let fast = gaussian_kernel_correlation(&x, &z, 0.7).unwrap();
                let slow = direct_kernel_correlation(&x, &z, 0.7);
                assert!(max_abs_diff(fast.as_slice(), &slow) < 1e-10);
            }
        }
    }
}

#[test]
fn apce_matches_definition() {
    let mut r = rng(14);
    for _ in 0..200 {
        let (w, h) = (r.random_range(1..20), r.random_range(1..20));
        let map = Grid::from_fn(w, h, |_, _| r.random_range(-2.0..3.0));
        assert_eq!(apce(&map), direct_apce(map.as_slice()));
    }
}

#[test]
fn kernel_responses_stay_bounded() {
    let mut r = rng(15);
    for _ in 0..20 {
        let x = random_map(&mut r, 9, 7, 2);
        let t = random_map(&mut r, 9, 7, 2);
        let model = train_kcf(&x, &make_label(9, 7, 1.0), 1e-4, 0.5).unwrap();
        let bound = model.max_dual_coefficient().unwrap() * 63.0;
        let resp = model.respond(&t).unwrap();
        assert!(resp.as_slice().iter().all(|v| v.is_finite() && v.abs() <= bound));
    }
}

#[test]
fn particle_filter_follows_kalman() {
    let worst = gpf_kalman_worst_z(50, 200, 20);
    assert!(worst < 3.0, "worst deviation {worst:.2} standard errors");
}
