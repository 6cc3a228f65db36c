use std::f64::consts::PI;

use navgen::esdf::{esdf_for_scene, EsdfParams, ObstacleMask};
use navgen::geom::Pose2;
use navgen::robot::{sample_robot, step_diff_drive, CameraModel, RobotState, HFOV, VFOV};
use navgen::scene::{Bounds, Box3, SceneSpec};
use navgen::seed::rng_from;
use navgen::simulator::{render_depth, update_explored, CoverageGrid, DEPTH_MAX, DEPTH_MIN};
use proptest::prelude::*;

fn scene(bounds: Bounds, obstacles: Vec<Box3>) -> SceneSpec {
    SceneSpec {
        id: "fixture".into(),
        seed: 0,
        bounds,
        obstacles,
    }
}

#[test]
fn projection_matches_hand_computation() {
    let cam = CameraModel::new(64, 48, HFOV, VFOV, 1.0, -15f64.to_radians());
    let (u, v) = cam.project_body_point([3.0, 0.5, 0.0]).unwrap();
    assert!((u - 24.624922354827255).abs() < 1e-6, "{u}");
    assert!((v - 27.75277216125456).abs() < 1e-6, "{v}");
}

#[test]
fn pixel_ray_round_trips_through_projection() {
    let cam = CameraModel::new(64, 48, HFOV, VFOV, 0.7, -0.2);
    for (u, v) in [(3.0, 40.0), (32.0, 24.0), (60.5, 30.25)] {
        let d = cam.pixel_ray(u, v);
        let p = [2.0 * d[0], 2.0 * d[1], 0.7 + 2.0 * d[2]];
        let (pu, pv) = cam.project_body_point(p).unwrap();
        assert!((pu - u).abs() < 1e-9 && (pv - v).abs() < 1e-9);
    }
}

/// Body-frame ray through pixel `(u, v)` for a camera pitched down by
/// `alpha`, written out from the level pinhole model.
fn hand_ray(cam: &CameraModel, alpha: f64, u: usize, v: usize) -> [f64; 3] {
    let a = (u as f64 - cam.cx) / cam.fx;
    let b = (v as f64 - cam.cy) / cam.fy;
    let (s, c) = alpha.sin_cos();
    let d = [c - b * s, -a, -s - b * c];
    let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    [d[0] / n, d[1] / n, d[2] / n]
}

#[test]
fn slab_wall_depth_closed_form() {
    let s = scene(
        Bounds::new(-5.0, 5.0, -25.0, 25.0),
        vec![Box3::new(2.0, 2.5, -20.0, 20.0, 0.0, 1.0)],
    );
    let h = 0.5;
    let cam = CameraModel::new(64, 48, HFOV, VFOV, h, 0.0);
    let img = render_depth(&s, &cam, &Pose2::IDENTITY);
    for v in 0..48 {
        for u in 0..64 {
            let d = hand_ray(&cam, 0.0, u, v);
            let mut t = f64::INFINITY;
            let wall_t = 2.0 / d[0];
            let z = h + wall_t * d[2];
            if (0.0..=1.0).contains(&z) {
                t = wall_t;
            }
            if d[2] < 0.0 {
                t = t.min(h / -d[2]);
            }
            let expect = if t.is_finite() { t.clamp(DEPTH_MIN, DEPTH_MAX) } else { DEPTH_MAX };
            assert!((img.at(u, v) - expect).abs() < 1e-6, "({u},{v}) {} vs {expect}", img.at(u, v));
        }
    }
}

#[test]
fn pitched_ground_plane_closed_form() {
    let s = scene(Bounds::new(-10.0, 10.0, -10.0, 10.0), vec![]);
    let (h, alpha) = (1.0, 20f64.to_radians());
    let cam = CameraModel::new(64, 48, HFOV, VFOV, h, -alpha);
    let img = render_depth(&s, &cam, &Pose2::new(1.0, -2.0, 0.7));
    for v in 0..48 {
        for u in 0..64 {
            let d = hand_ray(&cam, alpha, u, v);
            let expect = if d[2] < 0.0 { (h / -d[2]).clamp(DEPTH_MIN, DEPTH_MAX) } else { DEPTH_MAX };
            assert!((img.at(u, v) - expect).abs() < 1e-6);
        }
    }
}

#[test]
fn level_camera_in_empty_scene_reads_max() {
    let s = scene(Bounds::new(-10.0, 10.0, -10.0, 10.0), vec![]);
    let cam = CameraModel::new(64, 48, HFOV, VFOV, 1.2, 0.0);
    let img = render_depth(&s, &cam, &Pose2::new(0.0, 0.0, 1.0));
    assert!(img.data.iter().all(|&d| d == DEPTH_MAX));
}

#[test]
fn coverage_respects_wedge_bound() {
    let b = Bounds::new(-10.0, 10.0, -10.0, 10.0);
    let mask = ObstacleMask::empty(0.05, [-10.0, -10.0], [400, 400]);
    let (range, cell) = (5.0, 0.5);
    for theta in [0.0, 0.4, -2.0, PI] {
        let mut cov = CoverageGrid::new(&b, cell);
        update_explored(&mut cov, &Pose2::new(0.3, -0.2, theta), HFOV, range, &mask);
        // wedge dilated by half a cell diagonal (Steiner formula)
        let r = cell * std::f64::consts::SQRT_2 / 2.0;
        let area = HFOV / 2.0 * range * range;
        let perimeter = 2.0 * range + HFOV * range;
        let bound = area + perimeter * r + PI * r * r;
        assert!(cov.area() <= bound, "{} > {bound}", cov.area());
        assert!(cov.area() > 0.5 * area);
    }
}

#[test]
fn full_sweep_covers_closed_room() {
    let b = Bounds::new(0.0, 6.2, 0.0, 6.2);
    let t = 0.1;
    let walls = vec![
        Box3::new(0.0, 6.2, 0.0, t, 0.0, 2.5),
        Box3::new(0.0, 6.2, 6.2 - t, 6.2, 0.0, 2.5),
        Box3::new(0.0, t, t, 6.2 - t, 0.0, 2.5),
        Box3::new(6.2 - t, 6.2, t, 6.2 - t, 0.0, 2.5),
    ];
    let s = scene(b, walls);
    let (mask, _) = esdf_for_scene(&s, 0.6, &EsdfParams::default()).unwrap();
    let mut cov = CoverageGrid::new(&b, 0.5);
    let steps = (2.0 * PI / (HFOV / 2.0)).ceil() as usize + 1;
    for k in 0..steps {
        let pose = Pose2::new(3.1, 3.1, k as f64 * HFOV / 2.0);
        update_explored(&mut cov, &pose, HFOV, 5.0, &mask);
    }
    let room = 6.0 * 6.0;
    assert!((cov.area() - room).abs() <= 0.1 * room, "{}", cov.area());
}

#[test]
fn sampled_pitch_decreases_with_height() {
    let mut rng = rng_from(17);
    let samples: Vec<(f64, f64)> = (0..10_000)
        .map(|_| {
            let r = sample_robot(&mut rng);
            assert!(r.h_b > 0.25 && r.h_b < 1.25);
            assert!(r.camera_pitch >= -30f64.to_radians() && r.camera_pitch <= 0.0);
            (r.h_b, r.camera_pitch)
        })
        .collect();
    let n = samples.len() as f64;
    let (mx, my) = samples.iter().fold((0.0, 0.0), |a, s| (a.0 + s.0 / n, a.1 + s.1 / n));
    let cov: f64 = samples.iter().map(|s| (s.0 - mx) * (s.1 - my)).sum::<f64>() / n;
    assert!(cov < 0.0);
}

proptest! {
    #[test]
    fn constant_command_follows_circle(v in 0.1f64..2.0, w in 0.05f64..1.5, steps in 1usize..60) {
        let mut s = RobotState::default();
        for _ in 0..steps {
            s = step_diff_drive(&s, v, w, 0.1);
        }
        let t = steps as f64 * 0.1;
        let r = v / w;
        prop_assert!((s.x - r * (w * t).sin()).abs() < 1e-9);
        prop_assert!((s.y - r * (1.0 - (w * t).cos())).abs() < 1e-9);
        prop_assert!((s.t - t).abs() < 1e-9);
    }

    #[test]
    fn depth_stays_clipped(x in -3.0f64..3.0, y in -3.0f64..3.0, th in -PI..PI, pitch in -0.5f64..0.0) {
        let s = scene(
            Bounds::new(-5.0, 5.0, -5.0, 5.0),
            vec![Box3::new(1.0, 1.5, -1.0, 1.0, 0.0, 1.0), Box3::new(-2.0, -1.0, 2.0, 2.5, 0.6, 0.8)],
        );
        let cam = CameraModel::new(16, 12, HFOV, VFOV, 0.8, pitch);
        let img = render_depth(&s, &cam, &Pose2::new(x, y, th));
        prop_assert!(img.data.iter().all(|&d| (DEPTH_MIN..=DEPTH_MAX).contains(&d)));
    }
}
