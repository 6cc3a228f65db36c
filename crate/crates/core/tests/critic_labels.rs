mod common;

use common::direct_critic_value as direct_value;
use navgen::critic::{augment, critic_label, critic_value, select_best, CriticParams};
use navgen::esdf::{compute_esdf, EsdfMap, ObstacleMask};
use navgen::geom::{Point2, Pose2};
use navgen::seed::rng_from;
use proptest::prelude::*;
use rand::Rng;

fn cluttered_field() -> EsdfMap {
    let mut rng = rng_from(31);
    let mut m = ObstacleMask::empty(0.05, [0.0, 0.0], [200, 200]);
    for _ in 0..25 {
        let (i, j) = (rng.random_range(0..190), rng.random_range(0..190));
        for dj in 0..rng.random_range(2..10) {
            for di in 0..rng.random_range(2..10) {
                m.set_blocked(i + di, j + dj, true);
            }
        }
    }
    compute_esdf(&m, 0.25, 10.0).unwrap()
}

fn straight_tau() -> Vec<Point2> {
    (0..25).map(|k| [0.25 * k as f64, 0.0]).collect()
}

#[test]
fn fixture_values_are_exact() {
    let p = CriticParams::default();
    assert_eq!(critic_value(&[1.0; 25], &p).value, 0.0);
    assert_eq!(critic_value(&[0.2; 25], &p).value, -25.0);
    let ramp: Vec<f64> = (0..25).map(|k| 0.1 + 0.1 * k as f64).collect();
    assert!((critic_value(&ramp, &p).value - -3.76).abs() < 1e-12);
}

#[test]
fn labels_match_direct_evaluation() {
    let esdf = cluttered_field();
    let params = CriticParams::default();
    let mut rng = rng_from(12);
    let tau = straight_tau();
    for n in 0..1000 {
        let start = Pose2::new(rng.random_range(-1.0..11.0), rng.random_range(-1.0..11.0), rng.random_range(-3.1..3.1));
        let aug = augment(&tau, &mut rng, &format!("r{n}"));
        let world = aug.to_world(&start);
        let label = critic_label(&world, &esdf, &params);
        let direct = direct_value(&world, &esdf, params.d_safe, params.alpha);
        assert!((label.value - direct).abs() <= 1e-9, "{} vs {direct}", label.value);
        let sum: f64 = label.distances.windows(2).map(|w| w[1] - w[0]).sum();
        assert!((label.trend_term - sum).abs() <= 1e-12);
    }
}

proptest! {
    #[test]
    fn selection_ignores_monotone_rescaling(scores in prop::collection::vec(-25.0f64..5.0, 1..32), a in 0.1f64..10.0, b in -5.0f64..5.0) {
        let idx = select_best(&scores).unwrap();
        let scaled: Vec<f64> = scores.iter().map(|s| a * s + b).collect();
        let cubed: Vec<f64> = scores.iter().map(|s| s.powi(3)).collect();
        prop_assert_eq!(select_best(&scaled).unwrap(), idx);
        prop_assert_eq!(select_best(&cubed).unwrap(), idx);
    }

    #[test]
    fn values_are_bounded(d in prop::collection::vec(0.0f64..10.0, 25)) {
        let p = CriticParams::default();
        let v = critic_value(&d, &p).value;
        prop_assert!(v >= -25.0 - p.alpha * 10.0 && v <= p.alpha * 10.0);
    }

    #[test]
    fn augmentation_keeps_origin_and_radius_bound(seed in any::<u64>()) {
        let tau = straight_tau();
        let aug = augment(&tau, &mut rng_from(seed), "r");
        prop_assert_eq!(aug.points[0], [0.0, 0.0]);
        for (p, q) in aug.points.iter().zip(&tau) {
            prop_assert!(p[0].hypot(p[1]) <= q[0].hypot(q[1]) + 1e-12);
        }
    }
}
