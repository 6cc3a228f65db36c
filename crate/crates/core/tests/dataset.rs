use navgen::dataset::{
    derive_goals, make_record, parse_dataset, read_dataset, sample_subtrajectory, stats_of, subtrajectory_at, write_dataset,
    DatasetHeader, DatasetWriter, TrajectoryRecord, ACTION_STEPS,
};
use navgen::geom::Pose2;
use navgen::pipeline::{generate_scene_trajectories, records_for, GenerationConfig, SceneMaps};
use navgen::planner::spline_smooth;
use navgen::robot::{CameraModel, RobotModel, HFOV, VFOV};
use navgen::scene::{generate_scene, SceneGenConfig};
use navgen::seed::rng_from;
use navgen::Error;
use proptest::prelude::*;

fn generated_records(pairs: usize, seed: u64) -> Vec<TrajectoryRecord> {
    let scene = generate_scene(&SceneGenConfig::default(), seed).unwrap();
    let maps = SceneMaps::new(scene, Default::default()).unwrap();
    let cfg = GenerationConfig {
        pairs_per_scene: pairs,
        ..Default::default()
    };
    let gen = generate_scene_trajectories(&maps, &cfg, seed);
    gen.trajectories.iter().flat_map(|t| records_for(t, &cfg, seed)).collect()
}

#[test]
fn composed_poses_reproduce_source() {
    let t = spline_smooth(&[[0.0, 0.0], [4.0, 1.0], [6.0, 5.0], [3.0, 9.0]], 0.25).unwrap();
    let mut rng = rng_from(2);
    for _ in 0..20 {
        let sub = sample_subtrajectory(&t, &mut rng, 0.25).unwrap();
        let rec = make_record("s", 0, 0, t.arc_length(), RobotModel::default(), sub.clone());
        for (k, p) in rec.world_poses().iter().enumerate() {
            let src = t.poses[sub.sub_range[0] + k + 1];
            assert!((p.x - src.x).abs() < 1e-6 && (p.y - src.y).abs() < 1e-6);
        }
    }
}

#[test]
fn point_goal_is_invariant_to_rigid_motion() {
    let t = spline_smooth(&[[0.0, 0.0], [4.0, 1.0], [6.0, 5.0], [3.0, 9.0]], 0.25).unwrap();
    let a = make_record("s", 0, 0, 0.0, RobotModel::default(), subtrajectory_at(&t, 3, 1));
    let moved = t.transformed(&Pose2::new(-7.0, 2.5, 2.2));
    let b = make_record("s", 0, 0, 0.0, RobotModel::default(), subtrajectory_at(&moved, 3, 1));
    let (pa, pb) = (a.goals.point.unwrap(), b.goals.point.unwrap());
    assert!((pa[0] - pb[0]).abs() < 1e-9 && (pa[1] - pb[1]).abs() < 1e-9);
    for (x, y) in a.actions.iter().zip(&b.actions) {
        assert!((x[0] - y[0]).abs() < 1e-9 && (x[1] - y[1]).abs() < 1e-9 && (x[2] - y[2]).abs() < 1e-9);
    }
}

#[test]
fn forward_path_pixels_stay_in_image() {
    let t = spline_smooth(&[[0.0, 0.0], [10.0, 0.0]], 0.25).unwrap();
    let mut rec = make_record("s", 0, 0, 10.0, RobotModel::default(), subtrajectory_at(&t, 0, 1));
    let cam = CameraModel::new(64, 48, HFOV, VFOV, 0.6, -15f64.to_radians());
    derive_goals(&mut rec, &cam);
    assert!(!rec.goals.trajectory_pixels.is_empty());
    for [u, v] in &rec.goals.trajectory_pixels {
        assert!((0.0..64.0).contains(u) && (0.0..48.0).contains(v));
    }
}

#[test]
fn short_trajectory_is_rejected() {
    let t = spline_smooth(&[[0.0, 0.0], [3.0, 0.0]], 0.25).unwrap();
    assert!(matches!(
        sample_subtrajectory(&t, &mut rng_from(0), 0.25),
        Err(Error::TooShort { .. })
    ));
}

#[test]
fn thousand_records_round_trip() {
    let records: Vec<_> = (0..)
        .map(|s| generated_records(60, s))
        .flat_map(|v| v.into_iter())
        .take(1000)
        .collect();
    assert_eq!(records.len(), 1000);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.ndjson");
    write_dataset(&records, &path, "abc").unwrap();
    let (header, back) = read_dataset(&path).unwrap();
    assert_eq!(header, DatasetHeader::new("abc"));
    assert_eq!(back, records);
}

#[test]
fn stats_are_additive_over_shards() {
    let a = generated_records(30, 1);
    let b = generated_records(30, 2);
    let dir = tempfile::tempdir().unwrap();
    let (pa, pb) = (dir.path().join("a.ndjson"), dir.path().join("b.ndjson"));
    write_dataset(&a, &pa, "x").unwrap();
    let mut w = DatasetWriter::create(&pb, &DatasetHeader::new("x")).unwrap();
    for r in &b {
        w.write(r).unwrap();
    }
    w.finish().unwrap();
    let (sa, sb) = (stats_of(&a), stats_of(&b));
    let both = navgen::dataset::dataset_stats(&[&pa, &pb]).unwrap();
    assert_eq!(both.scenes, sa.scenes + sb.scenes);
    assert_eq!(both.trajectories, sa.trajectories + sb.trajectories);
    assert_eq!(both.records, sa.records + sb.records);
    assert!((both.total_distance_km - sa.total_distance_km - sb.total_distance_km).abs() < 1e-12);
}

#[test]
fn empty_dataset_has_zero_stats() {
    let text = serde_json::to_string(&DatasetHeader::new("x")).unwrap() + "\n";
    let (_, records) = parse_dataset(&text).unwrap();
    let s = stats_of(&records);
    assert_eq!((s.scenes, s.trajectories, s.records, s.total_distance_km), (0, 0, 0, 0.0));
}

#[test]
fn malformed_line_reports_its_number() {
    let mut text = serde_json::to_string(&DatasetHeader::new("x")).unwrap() + "\n";
    text.push_str("{\"id\": 3}\n");
    assert!(matches!(parse_dataset(&text), Err(Error::Dataset { line: 2, .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn records_have_fixed_shape(seed in any::<u64>()) {
        let t = spline_smooth(&[[0.0, 0.0], [5.0, 2.0], [9.0, -1.0], [12.0, 4.0]], 0.25).unwrap();
        let sub = sample_subtrajectory(&t, &mut rng_from(seed), 0.25).unwrap();
        prop_assert_eq!(sub.actions.len(), ACTION_STEPS);
        prop_assert_eq!(sub.sub_range[1] - sub.sub_range[0], ACTION_STEPS);
        let mut prev = [0.0, 0.0];
        for a in &sub.actions {
            prop_assert!(a.iter().all(|v| v.is_finite()));
            prop_assert!(((a[0] - prev[0]).hypot(a[1] - prev[1]) - 0.25).abs() < 1e-9);
            prev = [a[0], a[1]];
        }
    }
}
