//! End-to-end generation: scene → per-height planning maps → endpoint pairs →
//! validated trajectories → training records and critic labels.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::critic::{augment, critic_label, CriticParams};
use crate::dataset::{make_record, sample_subtrajectory, TrajectoryRecord, DEFAULT_STEP_SPACING};
use crate::error::{Error, Result};
use crate::esdf::{classify, compute_esdf, downsample, CoarseGrid, EsdfMap, EsdfParams, ObstacleMask};
use crate::geom::Point2;
use crate::planner::{
    astar, path_points, refine_waypoints, sample_endpoints, spline_smooth, validate_trajectory, Trajectory,
    DEFAULT_D_MAX, DEFAULT_D_MIN, DEFAULT_REFINE_WINDOW, DEFAULT_SPACING,
};
use crate::robot::{sample_robot, RobotModel};
use crate::scene::{voxelize, SceneSpec, VoxelGrid};
use crate::seed::{derive_rng, SeedPart};

/// Fine field, obstacle mask and coarse search grid for one robot height.
#[derive(Debug)]
pub struct PlanningMaps {
    pub mask: ObstacleMask,
    pub esdf: EsdfMap,
    pub coarse: CoarseGrid,
}

impl PlanningMaps {
    pub fn build(grid: &VoxelGrid, h_b: f64, params: &EsdfParams) -> Result<Self> {
        let mask = classify(grid, h_b, params.h_nav, params.h_obs)?;
        let esdf = compute_esdf(&mask, params.r_b, params.cap)?;
        let coarse = downsample(&esdf, params.coarse_resolution)?;
        Ok(Self { mask, esdf, coarse })
    }
}

/// A voxelized scene plus planning maps cached per distinct height band.
///
/// Two heights share maps when they include the same voxel layers, so the
/// cache holds at most one entry per layer.
pub struct SceneMaps {
    pub scene: SceneSpec,
    pub voxels: VoxelGrid,
    pub params: EsdfParams,
    cache: Mutex<HashMap<usize, Arc<PlanningMaps>>>,
}

impl SceneMaps {
    pub fn new(scene: SceneSpec, params: EsdfParams) -> Result<Self> {
        let voxels = voxelize(&scene, params.voxel_resolution)?;
        Ok(Self {
            scene,
            voxels,
            params,
            cache: Mutex::new(HashMap::new()),
        })
    }

    fn height_key(&self, h_b: f64) -> usize {
        (0..self.voxels.dims[2])
            .filter(|&k| self.voxels.center(0, 0, k)[2] <= h_b)
            .count()
    }

    pub fn maps_for(&self, h_b: f64) -> Result<Arc<PlanningMaps>> {
        let key = self.height_key(h_b);
        let mut cache = self.cache.lock().expect("map cache poisoned");
        if let Some(m) = cache.get(&key) {
            return Ok(Arc::clone(m));
        }
        let maps = Arc::new(PlanningMaps::build(&self.voxels, h_b, &self.params)?);
        cache.insert(key, Arc::clone(&maps));
        Ok(maps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub esdf: EsdfParams,
    pub pairs_per_scene: usize,
    pub d_min: f64,
    pub d_max: f64,
    pub refine_window: f64,
    pub spacing: f64,
    /// Endpoint pairs tried per pair slot before giving up.
    pub max_attempts: usize,
    pub subsamples_per_trajectory: usize,
    pub step_spacing: f64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            esdf: EsdfParams::default(),
            pairs_per_scene: 100,
            d_min: DEFAULT_D_MIN,
            d_max: DEFAULT_D_MAX,
            refine_window: DEFAULT_REFINE_WINDOW,
            spacing: DEFAULT_SPACING,
            max_attempts: 8,
            subsamples_per_trajectory: 4,
            step_spacing: DEFAULT_STEP_SPACING,
        }
    }
}

/// One validated reference trajectory with its provenance and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedTrajectory {
    pub scene_id: String,
    pub trajectory_id: u64,
    pub robot: RobotModel,
    pub trajectory: Trajectory,
    pub grid_cost: f64,
    pub attempts: usize,
    pub min_clearance: f64,
    /// Grid-search waypoints before and after refinement.
    pub raw_waypoints: Vec<Point2>,
    pub refined_waypoints: Vec<Point2>,
    /// Fine-cell distance at each waypoint before and after refinement.
    pub clearance_before: Vec<f64>,
    pub clearance_after: Vec<f64>,
}

fn cell_distance(esdf: &EsdfMap, p: Point2) -> f64 {
    esdf.cell_of(p[0], p[1])
        .map(|(i, j)| esdf.distance_at(i, j))
        .unwrap_or(0.0)
}

/// Plans one pair slot. The random stream is derived from
/// `(global_seed, scene_id, pair_index)` so the result is schedule-independent.
pub fn plan_pair(maps: &SceneMaps, config: &GenerationConfig, global_seed: u64, pair_index: u64) -> Result<GeneratedTrajectory> {
    let scene_id = maps.scene.id.as_str();
    let mut rng = derive_rng(global_seed, &[SeedPart::Str(scene_id), SeedPart::Int(pair_index)]);
    let robot = sample_robot(&mut rng);
    let pm = maps.maps_for(robot.h_b)?;
    for attempt in 1..=config.max_attempts {
        let (start, goal) = sample_endpoints(&pm.coarse, &mut rng, config.d_min, config.d_max)?;
        let path = match astar(&pm.coarse, start, goal) {
            Ok(p) => p,
            Err(Error::Unreachable) => continue,
            Err(e) => return Err(e),
        };
        let raw = path_points(&pm.coarse, &path);
        let refined = refine_waypoints(&raw, &pm.esdf, config.refine_window);
        let traj = match spline_smooth(&refined, config.spacing) {
            Ok(t) => t,
            Err(Error::Degenerate) => continue,
            Err(e) => return Err(e),
        };
        let check = validate_trajectory(&traj, &pm.esdf, robot.r_b);
        if !check.valid {
            continue;
        }
        return Ok(GeneratedTrajectory {
            scene_id: scene_id.to_owned(),
            trajectory_id: pair_index,
            robot,
            trajectory: traj,
            grid_cost: path.cost,
            attempts: attempt,
            min_clearance: check.min_clearance,
            clearance_before: raw.iter().map(|&p| cell_distance(&pm.esdf, p)).collect(),
            clearance_after: refined.iter().map(|&p| cell_distance(&pm.esdf, p)).collect(),
            raw_waypoints: raw,
            refined_waypoints: refined,
        });
    }
    Err(Error::PlanningFailed(config.max_attempts))
}

/// Outcome of planning every pair slot of a scene.
#[derive(Debug, Default)]
pub struct SceneGeneration {
    pub trajectories: Vec<GeneratedTrajectory>,
    pub failures: Vec<(u64, String)>,
}

pub fn generate_scene_trajectories(maps: &SceneMaps, config: &GenerationConfig, global_seed: u64) -> SceneGeneration {
    let results: Vec<(u64, Result<GeneratedTrajectory>)> = (0..config.pairs_per_scene as u64)
        .into_par_iter()
        .map(|k| (k, plan_pair(maps, config, global_seed, k)))
        .collect();
    let mut out = SceneGeneration::default();
    for (k, r) in results {
        match r {
            Ok(t) => out.trajectories.push(t),
            Err(e) => out.failures.push((k, e.to_string())),
        }
    }
    out
}

/// Slices a trajectory into training records. Too-short trajectories give none.
pub fn records_for(traj: &GeneratedTrajectory, config: &GenerationConfig, global_seed: u64) -> Vec<TrajectoryRecord> {
    let length = traj.trajectory.arc_length();
    (0..config.subsamples_per_trajectory as u32)
        .filter_map(|k| {
            let mut rng = derive_rng(
                global_seed,
                &[
                    SeedPart::Str(&traj.scene_id),
                    SeedPart::Int(traj.trajectory_id),
                    SeedPart::Str("sub"),
                    SeedPart::Int(k as u64),
                ],
            );
            let sub = sample_subtrajectory(&traj.trajectory, &mut rng, config.step_spacing).ok()?;
            Some(make_record(&traj.scene_id, traj.trajectory_id, k, length, traj.robot, sub))
        })
        .collect()
}

/// One critic label line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelLine {
    pub record_id: String,
    pub aug_index: u32,
    pub beta: f64,
    pub rotation: f64,
    pub value: f64,
    pub unsafe_count: usize,
    pub trend_term: f64,
    pub distances: Vec<f64>,
    /// Augmented start-frame points (25 × 2).
    pub points: Vec<Point2>,
}

pub fn label_record(
    record: &TrajectoryRecord,
    esdf: &EsdfMap,
    params: &CriticParams,
    aug_per_record: usize,
    global_seed: u64,
) -> Vec<LabelLine> {
    let tau = record.start_frame_points();
    (0..aug_per_record as u32)
        .map(|a| {
            let mut rng = derive_rng(global_seed, &[SeedPart::Str(&record.id), SeedPart::Int(a as u64)]);
            let aug = augment(&tau, &mut rng, &record.id);
            let label = critic_label(&aug.to_world(&record.start_pose), esdf, params);
            LabelLine {
                record_id: record.id.clone(),
                aug_index: a,
                beta: aug.beta,
                rotation: aug.rotation,
                value: label.value,
                unsafe_count: label.unsafe_count,
                trend_term: label.trend_term,
                distances: label.distances,
                points: aug.points,
            }
        })
        .collect()
}
