//! Closed-loop episodes: depth raycasting, collision and success checks,
//! explored-area bookkeeping and the benchmark metrics.

use std::f64::consts::PI;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::esdf::{downsample, CoarseGrid, EsdfMap, EsdfParams, ObstacleMask};
use crate::geom::{wrap_angle, Point2, Pose2};
use crate::pipeline::SceneMaps;
use crate::planner::{astar, sample_endpoints};
use crate::policy::{Command, Policy, PolicyContext, PolicyError, PolicySpec};
use crate::robot::{step_diff_drive, CameraModel, RobotModel, RobotState};
use crate::scene::{Bounds, SceneSpec};
use crate::seed::{derive_rng, derive_seed, SeedPart};

pub const DEPTH_MIN: f64 = 0.1;
pub const DEPTH_MAX: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    pub max_time: f64,
    pub dt: f64,
    pub success_radius: f64,
    pub success_speed: f64,
    pub goal_range: [f64; 2],
    pub sensing_range_for_coverage: f64,
    pub coverage_cell: f64,
    pub image_width: usize,
    pub image_height: usize,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            max_time: 120.0,
            dt: 0.1,
            success_radius: 1.0,
            success_speed: 0.5,
            goal_range: [3.0, 15.0],
            sensing_range_for_coverage: 5.0,
            coverage_cell: 0.5,
            image_width: 64,
            image_height: 48,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.max_time,
            self.dt,
            self.success_radius,
            self.success_speed,
            self.goal_range[0],
            self.sensing_range_for_coverage,
            self.coverage_cell,
        ]
        .iter()
        .all(|&v| v > 0.0);
        if !positive || self.image_width == 0 || self.image_height == 0 {
            return Err(Error::InvalidArgument("episode parameters must be positive".into()));
        }
        if self.goal_range[1] < self.goal_range[0] || self.success_radius >= self.goal_range[0] {
            return Err(Error::InvalidArgument(
                "goal range must be ordered and start beyond the success radius".into(),
            ));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.max_time / self.dt).round() as usize
    }
}

/// Row-major depth image in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl DepthImage {
    pub fn at(&self, u: usize, v: usize) -> f64 {
        self.data[v * self.width + u]
    }
}

/// Entry distance of a ray into a box, if it hits in front of the origin.
pub fn ray_box(origin: [f64; 3], dir: [f64; 3], min: [f64; 3], max: [f64; 3]) -> Option<f64> {
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    for a in 0..3 {
        if dir[a].abs() < 1e-15 {
            if origin[a] < min[a] || origin[a] > max[a] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / dir[a];
        let (mut n, mut f) = ((min[a] - origin[a]) * inv, (max[a] - origin[a]) * inv);
        if n > f {
            std::mem::swap(&mut n, &mut f);
        }
        t0 = t0.max(n);
        t1 = t1.min(f);
    }
    (t1 >= t0.max(0.0)).then_some(t0.max(0.0))
}

/// Nearest hit along each pixel ray against the boxes and the floor, clipped
/// to `[0.1, 3.0]`; pixels without a hit read 3.0.
pub fn render_depth(scene: &SceneSpec, cam: &CameraModel, pose: &Pose2) -> DepthImage {
    let origin = [pose.x, pose.y, cam.mount_height];
    let (s, c) = pose.theta.sin_cos();
    let mut data = Vec::with_capacity(cam.width * cam.height);
    for v in 0..cam.height {
        for u in 0..cam.width {
            let b = cam.pixel_ray(u as f64, v as f64);
            let dir = [c * b[0] - s * b[1], s * b[0] + c * b[1], b[2]];
            let mut best = f64::INFINITY;
            if dir[2] < -1e-12 {
                best = origin[2] / -dir[2];
            }
            for o in &scene.obstacles {
                if let Some(t) = ray_box(origin, dir, o.min, o.max) {
                    best = best.min(t);
                }
            }
            data.push(if best.is_finite() { best.clamp(DEPTH_MIN, DEPTH_MAX) } else { DEPTH_MAX });
        }
    }
    DepthImage {
        width: cam.width,
        height: cam.height,
        data,
    }
}

/// Boolean grid of seen floor cells over the scene bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageGrid {
    pub origin: [f64; 2],
    pub cell: f64,
    pub dims: [usize; 2],
    pub seen: Vec<bool>,
}

impl CoverageGrid {
    pub fn new(bounds: &Bounds, cell: f64) -> Self {
        let dims = [
            crate::scene::cells_to_cover(bounds.width(), cell),
            crate::scene::cells_to_cover(bounds.height(), cell),
        ];
        Self {
            origin: [bounds.x_min, bounds.y_min],
            cell,
            dims,
            seen: vec![false; dims[0] * dims[1]],
        }
    }

    pub fn center(&self, i: usize, j: usize) -> Point2 {
        [
            self.origin[0] + (i as f64 + 0.5) * self.cell,
            self.origin[1] + (j as f64 + 0.5) * self.cell,
        ]
    }

    pub fn seen_count(&self) -> usize {
        self.seen.iter().filter(|&&s| s).count()
    }

    pub fn area(&self) -> f64 {
        self.seen_count() as f64 * self.cell * self.cell
    }
}

/// True when the straight segment from `a` to `b` crosses no blocked cell of
/// the mask (the cell containing `a` is not checked).
pub fn line_of_sight(mask: &ObstacleMask, a: Point2, b: Point2) -> bool {
    let res = mask.resolution;
    let to_grid = |p: Point2| [(p[0] - mask.origin[0]) / res, (p[1] - mask.origin[1]) / res];
    let (ga, gb) = (to_grid(a), to_grid(b));
    let (mut i, mut j) = (ga[0].floor() as i64, ga[1].floor() as i64);
    let (ei, ej) = (gb[0].floor() as i64, gb[1].floor() as i64);
    let d = [gb[0] - ga[0], gb[1] - ga[1]];
    let step_i = if d[0] > 0.0 { 1 } else { -1 };
    let step_j = if d[1] > 0.0 { 1 } else { -1 };
    let next_boundary = |g: f64, cell: i64, step: i64| if step > 0 { (cell + 1) as f64 - g } else { g - cell as f64 };
    let mut t_max_i = if d[0] != 0.0 { next_boundary(ga[0], i, step_i) / d[0].abs() } else { f64::INFINITY };
    let mut t_max_j = if d[1] != 0.0 { next_boundary(ga[1], j, step_j) / d[1].abs() } else { f64::INFINITY };
    let t_delta_i = if d[0] != 0.0 { 1.0 / d[0].abs() } else { f64::INFINITY };
    let t_delta_j = if d[1] != 0.0 { 1.0 / d[1].abs() } else { f64::INFINITY };
    let blocked = |i: i64, j: i64| {
        i >= 0 && j >= 0 && (i as usize) < mask.dims[0] && (j as usize) < mask.dims[1] && mask.is_blocked(i as usize, j as usize)
    };
    let limit = (ei - i).abs() + (ej - j).abs() + 2;
    for _ in 0..limit {
        if i == ei && j == ej {
            break;
        }
        if t_max_i < t_max_j {
            i += step_i;
            t_max_i += t_delta_i;
        } else {
            j += step_j;
            t_max_j += t_delta_j;
        }
        if blocked(i, j) {
            return false;
        }
    }
    true
}

/// Marks coverage cells whose centers lie inside the horizontal view wedge
/// (half-angle `hfov / 2`, radius `range`) with a clear line of sight.
pub fn update_explored(coverage: &mut CoverageGrid, pose: &Pose2, hfov: f64, range: f64, mask: &ObstacleMask) {
    let c = coverage.cell;
    let i0 = (((pose.x - range - coverage.origin[0]) / c).floor().max(0.0)) as usize;
    let j0 = (((pose.y - range - coverage.origin[1]) / c).floor().max(0.0)) as usize;
    let i1 = ((((pose.x + range - coverage.origin[0]) / c).ceil()).max(0.0) as usize).min(coverage.dims[0]);
    let j1 = ((((pose.y + range - coverage.origin[1]) / c).ceil()).max(0.0) as usize).min(coverage.dims[1]);
    for j in j0..j1 {
        for i in i0..i1 {
            let idx = j * coverage.dims[0] + i;
            if coverage.seen[idx] {
                continue;
            }
            let p = coverage.center(i, j);
            let (dx, dy) = (p[0] - pose.x, p[1] - pose.y);
            if dx.hypot(dy) > range {
                continue;
            }
            if wrap_angle(dy.atan2(dx) - pose.theta).abs() > hfov / 2.0 {
                continue;
            }
            if line_of_sight(mask, [pose.x, pose.y], p) {
                coverage.seen[idx] = true;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Goal {
    /// Goal position in the robot body frame.
    Point { x: f64, y: f64 },
    TrajectoryPixels { pixels: Vec<Point2> },
    None,
}

#[derive(Debug, Clone)]
pub struct Observation {
    pub depth: Option<DepthImage>,
    pub robot_pose: Pose2,
    pub state: RobotState,
    pub goal: Goal,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Collision,
    Timeout,
    PolicyFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub t: f64,
    pub state: RobotState,
    pub v: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub outcome: Outcome,
    pub failure_reason: Option<String>,
    pub elapsed: f64,
    pub path_length: f64,
    pub shortest_path: Option<f64>,
    pub explored_area: f64,
    /// Explored area after each step; non-decreasing.
    pub explored_curve: Vec<f64>,
    pub spawn: Pose2,
    pub goal: Option<Point2>,
    pub seed: u64,
    pub policy_flags: usize,
    pub trace: Vec<TraceStep>,
}

impl EpisodeResult {
    pub fn success(&self) -> bool {
        self.outcome == Outcome::Success
    }
}

/// Everything an episode reads but never mutates.
pub struct EpisodeContext<'a> {
    pub scene: &'a SceneSpec,
    pub mask: &'a ObstacleMask,
    pub esdf: &'a EsdfMap,
    pub coarse: &'a CoarseGrid,
    pub robot: &'a RobotModel,
}

/// Collision test shared by the simulator: outside the map or closer than
/// `r_b` to an obstacle.
pub fn in_collision(esdf: &EsdfMap, x: f64, y: f64, r_b: f64) -> bool {
    match esdf.query(x, y) {
        Ok(d) => d < r_b,
        Err(_) => true,
    }
}

pub fn run_episode(
    ctx: &EpisodeContext<'_>,
    policy: &mut dyn Policy,
    spawn: Pose2,
    goal: Option<Point2>,
    config: &EpisodeConfig,
    seed: u64,
) -> EpisodeResult {
    policy.reset(seed);
    let cam = ctx.robot.camera(config.image_width, config.image_height);
    let pctx = PolicyContext {
        esdf: ctx.esdf,
        coarse: ctx.coarse,
        robot: ctx.robot,
        config,
    };
    let mut state = RobotState::at(spawn);
    let mut coverage = CoverageGrid::new(&ctx.scene.bounds, config.coverage_cell);
    let range = config.sensing_range_for_coverage;
    update_explored(&mut coverage, &spawn, ctx.robot.hfov, range, ctx.mask);
    let mut trace = Vec::new();
    let mut curve = Vec::new();
    let mut path_length = 0.0;
    let mut outcome = Outcome::Timeout;
    let mut failure_reason = None;
    let steps = config.steps();
    let mut taken = 0;
    for step in 0..steps {
        let t = step as f64 * config.dt;
        let pose = state.pose();
        let obs = Observation {
            depth: policy.wants_depth().then(|| render_depth(ctx.scene, &cam, &pose)),
            robot_pose: pose,
            state,
            goal: match goal {
                Some(g) => {
                    let [x, y] = pose.inverse_transform_point(g);
                    Goal::Point { x, y }
                }
                None => Goal::None,
            },
            t,
        };
        let cmd = match policy.act(&obs, &pctx) {
            Ok(c) if c.v.is_finite() && c.omega.is_finite() => c,
            Ok(c) => {
                outcome = Outcome::PolicyFailure;
                failure_reason = Some(PolicyError::Protocol(format!("non-finite command {c:?}")).to_string());
                break;
            }
            Err(e) => {
                outcome = Outcome::PolicyFailure;
                failure_reason = Some(e.to_string());
                break;
            }
        };
        let cmd = Command {
            v: cmd.v.clamp(-ctx.robot.v_max, ctx.robot.v_max),
            omega: cmd.omega.clamp(-ctx.robot.omega_max, ctx.robot.omega_max),
        };
        state = step_diff_drive(&state, cmd.v, cmd.omega, config.dt);
        state.t = (step + 1) as f64 * config.dt;
        taken = step + 1;
        path_length += cmd.v.abs() * config.dt;
        update_explored(&mut coverage, &state.pose(), ctx.robot.hfov, range, ctx.mask);
        curve.push(coverage.area());
        trace.push(TraceStep {
            t: state.t,
            state,
            v: cmd.v,
            omega: cmd.omega,
        });
        if in_collision(ctx.esdf, state.x, state.y, ctx.robot.r_b) {
            outcome = Outcome::Collision;
            break;
        }
        if let Some(g) = goal {
            if (g[0] - state.x).hypot(g[1] - state.y) < config.success_radius && state.v.abs() < config.success_speed {
                outcome = Outcome::Success;
                break;
            }
        }
    }
    EpisodeResult {
        outcome,
        failure_reason,
        elapsed: taken as f64 * config.dt,
        path_length,
        shortest_path: None,
        explored_area: coverage.area(),
        explored_curve: curve,
        spawn,
        goal,
        seed,
        policy_flags: policy.flags(),
        trace,
    }
}

/// Success weighted by path length: mean of `S · l / max(p, l)`.
pub fn spl(results: &[EpisodeResult]) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    let total: f64 = results
        .iter()
        .map(|r| match (r.success(), r.shortest_path) {
            (true, Some(l)) if l > 0.0 => l / r.path_length.max(l),
            _ => 0.0,
        })
        .sum();
    total / results.len() as f64
}

pub fn success_rate(results: &[EpisodeResult]) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    results.iter().filter(|r| r.success()).count() as f64 / results.len() as f64
}

/// Shortest collision-free path length at the fine resolution.
pub fn fine_shortest_path(fine: &CoarseGrid, from: Point2, to: Point2) -> Option<f64> {
    let (si, sj) = fine.cell_of(from[0], from[1])?;
    let (gi, gj) = fine.cell_of(to[0], to[1])?;
    let (s, g) = (fine.index(si, sj), fine.index(gi, gj));
    if !fine.navigable[s] || !fine.navigable[g] {
        return None;
    }
    astar(fine, s, g).ok().map(|p| p.cost)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    #[serde(alias = "no-goal", alias = "no_goal")]
    NoGoal,
    #[serde(alias = "point-goal", alias = "point_goal")]
    PointGoal,
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Task::NoGoal => "nogoal",
            Task::PointGoal => "pointgoal",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub task: Task,
    pub n_spawns: usize,
    pub seed: u64,
    #[serde(default)]
    pub episode: EpisodeConfig,
    #[serde(default)]
    pub esdf: EsdfParams,
}

/// Per-(scene, robot) metrics. Point-goal rows report SR/SPL; no-goal rows
/// report mean episode time and explored area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scene_id: String,
    pub robot_index: usize,
    pub h_b: f64,
    pub task: Task,
    pub episodes: usize,
    pub success_rate: f64,
    pub spl: f64,
    pub mean_episode_time: f64,
    pub mean_explored_area: f64,
    pub collision_rate: f64,
    pub policy_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub scene_id: String,
    pub robot_index: usize,
    pub spawn_index: usize,
    pub result: EpisodeResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub task: Task,
    pub rows: Vec<MetricsRow>,
    pub episodes: Vec<EpisodeRecord>,
}

impl BenchmarkReport {
    pub fn results(&self) -> Vec<EpisodeResult> {
        self.episodes.iter().map(|e| e.result.clone()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self.task {
            Task::PointGoal => out.push_str("scene,robot,h_b,task,episodes,sr,spl,collision_rate,policy_failures\n"),
            Task::NoGoal => out.push_str("scene,robot,h_b,task,episodes,time,area,collision_rate,policy_failures\n"),
        }
        for r in &self.rows {
            let (a, b) = match self.task {
                Task::PointGoal => (r.success_rate, r.spl),
                Task::NoGoal => (r.mean_episode_time, r.mean_explored_area),
            };
            out.push_str(&format!(
                "{},{},{:.4},{},{},{:.6},{:.6},{:.6},{}\n",
                r.scene_id, r.robot_index, r.h_b, r.task, r.episodes, a, b, r.collision_rate, r.policy_failures
            ));
        }
        out
    }
}

fn metrics_row(scene_id: &str, robot_index: usize, robot: &RobotModel, task: Task, results: &[EpisodeResult]) -> MetricsRow {
    let n = results.len().max(1) as f64;
    MetricsRow {
        scene_id: scene_id.to_owned(),
        robot_index,
        h_b: robot.h_b,
        task,
        episodes: results.len(),
        success_rate: success_rate(results),
        spl: spl(results),
        mean_episode_time: results.iter().map(|r| r.elapsed).sum::<f64>() / n,
        mean_explored_area: results.iter().map(|r| r.explored_area).sum::<f64>() / n,
        collision_rate: results.iter().filter(|r| r.outcome == Outcome::Collision).count() as f64 / n,
        policy_failures: results.iter().filter(|r| r.outcome == Outcome::PolicyFailure).count(),
    }
}

struct Spawn {
    pose: Pose2,
    goal: Option<Point2>,
}

fn sample_spawn(coarse: &CoarseGrid, task: Task, config: &EpisodeConfig, rng: &mut crate::seed::Rng) -> Result<Spawn> {
    let center = |c: usize| {
        let (i, j) = coarse.coords(c);
        coarse.cell_center(i, j)
    };
    let heading = |rng: &mut crate::seed::Rng| rng.random_range(-PI..PI);
    match task {
        Task::PointGoal => {
            let (s, g) = sample_endpoints(coarse, rng, config.goal_range[0], config.goal_range[1])?;
            let [x, y] = center(s);
            Ok(Spawn {
                pose: Pose2::new(x, y, heading(rng)),
                goal: Some(center(g)),
            })
        }
        Task::NoGoal => {
            let nav: Vec<usize> = (0..coarse.len()).filter(|&c| coarse.navigable[c]).collect();
            if nav.is_empty() {
                return Err(Error::NoEndpoints(0));
            }
            let [x, y] = center(nav[rng.random_range(0..nav.len())]);
            Ok(Spawn {
                pose: Pose2::new(x, y, heading(rng)),
                goal: None,
            })
        }
    }
}

/// Runs `n_spawns` episodes for every (scene, robot) pair. Spawns and
/// episode seeds derive from `(seed, scene_id, robot_index, spawn_index)`,
/// so two policies evaluated with the same spec see identical spawns.
pub fn run_benchmark(
    scenes: &[SceneSpec],
    robots: &[RobotModel],
    policy: &PolicySpec,
    spec: &BenchmarkSpec,
) -> Result<BenchmarkReport> {
    spec.episode.validate()?;
    // fail fast on policies that cannot start
    drop(policy.build(&spec.episode)?);
    let mut rows = Vec::new();
    let mut episodes = Vec::new();
    for scene in scenes {
        let maps = SceneMaps::new(scene.clone(), spec.esdf)?;
        for (ri, robot) in robots.iter().enumerate() {
            let pm = maps.maps_for(robot.h_b)?;
            let fine = downsample(&pm.esdf, pm.esdf.resolution)?;
            let spawns: Vec<Spawn> = (0..spec.n_spawns)
                .map(|k| {
                    let mut rng = derive_rng(
                        spec.seed,
                        &[SeedPart::Str(&scene.id), SeedPart::Int(ri as u64), SeedPart::Int(k as u64)],
                    );
                    sample_spawn(&pm.coarse, spec.task, &spec.episode, &mut rng)
                })
                .collect::<Result<_>>()?;
            let ctx = EpisodeContext {
                scene,
                mask: &pm.mask,
                esdf: &pm.esdf,
                coarse: &pm.coarse,
                robot,
            };
            let results: Vec<EpisodeResult> = spawns
                .par_iter()
                .enumerate()
                .map(|(k, sp)| {
                    let seed = derive_seed(
                        spec.seed,
                        &[
                            SeedPart::Str(&scene.id),
                            SeedPart::Int(ri as u64),
                            SeedPart::Int(k as u64),
                            SeedPart::Str("episode"),
                        ],
                    );
                    let mut result = match policy.build(&spec.episode) {
                        Ok(mut p) => run_episode(&ctx, p.as_mut(), sp.pose, sp.goal, &spec.episode, seed),
                        Err(e) => failed_start(sp, seed, e.to_string()),
                    };
                    if let Some(g) = sp.goal {
                        result.shortest_path = fine_shortest_path(&fine, sp.pose.position(), g);
                    }
                    result
                })
                .collect();
            rows.push(metrics_row(&scene.id, ri, robot, spec.task, &results));
            episodes.extend(results.into_iter().enumerate().map(|(k, result)| EpisodeRecord {
                scene_id: scene.id.clone(),
                robot_index: ri,
                spawn_index: k,
                result,
            }));
        }
    }
    Ok(BenchmarkReport {
        task: spec.task,
        rows,
        episodes,
    })
}

fn failed_start(sp: &Spawn, seed: u64, reason: String) -> EpisodeResult {
    EpisodeResult {
        outcome: Outcome::PolicyFailure,
        failure_reason: Some(reason),
        elapsed: 0.0,
        path_length: 0.0,
        shortest_path: None,
        explored_area: 0.0,
        explored_curve: Vec::new(),
        spawn: sp.pose,
        goal: sp.goal,
        seed,
        policy_flags: 0,
        trace: Vec::new(),
    }
}
