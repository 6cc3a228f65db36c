//! Training records: 24-step relative-pose actions sliced from planned
//! trajectories, goal derivation, and the NDJSON dataset format.
//!
//! A dataset file starts with one header line
//! `{"schema":"navgen.dataset","version":1,"config_digest":"..."}` followed by
//! one [`TrajectoryRecord`] JSON object per line.

use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Point2, Pose2};
use crate::planner::{Frame, Trajectory};
use crate::robot::{project_trajectory, CameraModel, RobotModel, RobotState};
use crate::seed::Rng;

pub const ACTION_STEPS: usize = 24;
pub const DEFAULT_STEP_SPACING: f64 = 0.25;
pub const SCHEMA: &str = "navgen.dataset";
pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_IMAGE_WIDTH: usize = 64;
pub const DEFAULT_IMAGE_HEIGHT: usize = 48;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Goals {
    /// Final waypoint position in the start frame.
    pub point: Option<Point2>,
    /// Waypoints projected into the start camera image, `(u, v)` pixels.
    pub trajectory_pixels: Vec<Point2>,
    /// World camera pose at the endpoint: `[x, y, z, roll, pitch, yaw]`.
    pub image_camera_pose: Option<[f64; 6]>,
    pub nogoal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub id: String,
    pub scene_id: String,
    pub source_trajectory_id: u64,
    pub sub_index: u32,
    /// Pose index range `[start, end]` in the source trajectory.
    pub sub_range: [usize; 2],
    /// Arc length of the whole source trajectory, meters.
    pub source_length: f64,
    pub robot: RobotModel,
    pub start_pose: Pose2,
    /// `(Δx, Δy, Δθ)` of waypoints 1..=24 relative to `start_pose`.
    pub actions: Vec<[f64; 3]>,
    pub goals: Goals,
}

impl TrajectoryRecord {
    /// Start-frame positions: the origin followed by the 24 waypoints.
    pub fn start_frame_points(&self) -> Vec<Point2> {
        std::iter::once([0.0, 0.0])
            .chain(self.actions.iter().map(|a| [a[0], a[1]]))
            .collect()
    }

    /// Waypoint poses recovered in the world frame.
    pub fn world_poses(&self) -> Vec<Pose2> {
        self.actions
            .iter()
            .map(|a| self.start_pose.compose(&Pose2::new(a[0], a[1], a[2])))
            .collect()
    }
}

/// A 24-step slice with its relative actions.
#[derive(Debug, Clone, PartialEq)]
pub struct SubTrajectory {
    pub start_pose: Pose2,
    pub actions: Vec<[f64; 3]>,
    pub sub_range: [usize; 2],
}

/// Number of leading poses whose consecutive spacing equals `traj.spacing`.
fn uniform_prefix(traj: &Trajectory) -> usize {
    let mut n = traj.poses.len().min(1);
    for w in traj.poses.windows(2) {
        let d = (w[1].x - w[0].x).hypot(w[1].y - w[0].y);
        if (d - traj.spacing).abs() > 1e-6 {
            break;
        }
        n += 1;
    }
    n
}

/// Uniformly random start index, 24 poses at `step_spacing` after it. The
/// step spacing must be an integer multiple of the trajectory spacing.
pub fn sample_subtrajectory(traj: &Trajectory, rng: &mut Rng, step_spacing: f64) -> Result<SubTrajectory> {
    let ratio = step_spacing / traj.spacing;
    let stride = ratio.round();
    if !(stride >= 1.0) || (ratio - stride).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "step spacing {step_spacing} is not a multiple of trajectory spacing {}",
            traj.spacing
        )));
    }
    let stride = stride as usize;
    let span = ACTION_STEPS * stride;
    let usable = uniform_prefix(traj);
    if usable < span + 1 {
        return Err(Error::TooShort {
            needed: ACTION_STEPS as f64 * step_spacing,
            available: traj.arc_length(),
        });
    }
    let start = rng.random_range(0..=usable - 1 - span);
    Ok(subtrajectory_at(traj, start, stride))
}

pub fn subtrajectory_at(traj: &Trajectory, start: usize, stride: usize) -> SubTrajectory {
    let origin = traj.poses[start];
    let actions = (1..=ACTION_STEPS)
        .map(|k| {
            let r = origin.relative(&traj.poses[start + k * stride]);
            [r.x, r.y, r.theta]
        })
        .collect();
    SubTrajectory {
        start_pose: origin,
        actions,
        sub_range: [start, start + ACTION_STEPS * stride],
    }
}

/// Fills point, trajectory-pixel, image-pose and no-goal conditioning.
pub fn derive_goals(record: &mut TrajectoryRecord, camera: &CameraModel) {
    let last = record.actions[ACTION_STEPS - 1];
    let traj = Trajectory {
        poses: record.actions.iter().map(|a| Pose2::new(a[0], a[1], a[2])).collect(),
        frame: Frame::RobotStart,
        spacing: DEFAULT_STEP_SPACING,
    };
    let pixels = project_trajectory(&traj, camera, &RobotState::default());
    let end = record.start_pose.compose(&Pose2::new(last[0], last[1], last[2]));
    record.goals = Goals {
        point: Some([last[0], last[1]]),
        trajectory_pixels: pixels.into_iter().map(|(u, v)| [u, v]).collect(),
        image_camera_pose: Some([end.x, end.y, camera.mount_height, 0.0, camera.pitch, end.theta]),
        nogoal: true,
    };
}

/// Builds a record with derived goals from a slice.
pub fn make_record(
    scene_id: &str,
    source_trajectory_id: u64,
    sub_index: u32,
    source_length: f64,
    robot: RobotModel,
    sub: SubTrajectory,
) -> TrajectoryRecord {
    let mut record = TrajectoryRecord {
        id: format!("{scene_id}:{source_trajectory_id}:{sub_index}"),
        scene_id: scene_id.to_owned(),
        source_trajectory_id,
        sub_index,
        sub_range: sub.sub_range,
        source_length,
        robot,
        start_pose: sub.start_pose,
        actions: sub.actions,
        goals: Goals::default(),
    };
    let cam = robot.camera(DEFAULT_IMAGE_WIDTH, DEFAULT_IMAGE_HEIGHT);
    derive_goals(&mut record, &cam);
    record
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub schema: String,
    pub version: u32,
    pub config_digest: String,
}

impl DatasetHeader {
    pub fn new(config_digest: impl Into<String>) -> Self {
        Self {
            schema: SCHEMA.into(),
            version: SCHEMA_VERSION,
            config_digest: config_digest.into(),
        }
    }
}

/// Line-oriented writer. Records are flushed on drop or [`finish`](Self::finish).
pub struct DatasetWriter {
    out: BufWriter<File>,
    path: std::path::PathBuf,
}

impl DatasetWriter {
    /// Truncates `path` and writes the header line.
    pub fn create(path: impl AsRef<Path>, header: &DatasetHeader) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = Self {
            out: BufWriter::new(file),
            path,
        };
        w.write_line(&serde_json::to_string(header)?)?;
        Ok(w)
    }

    /// Appends to an existing dataset after checking its header.
    pub fn append(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        read_header(&path)?;
        let file = OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            out: BufWriter::new(file),
            path,
        })
    }

    fn write_line(&mut self, line: &str) -> Result<()> {
        self.out
            .write_all(line.as_bytes())
            .and_then(|_| self.out.write_all(b"\n"))
            .map_err(|e| Error::io(&self.path, e))
    }

    pub fn write(&mut self, record: &TrajectoryRecord) -> Result<()> {
        let line = serde_json::to_string(record)?;
        self.write_line(&line)
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn write_dataset(records: &[TrajectoryRecord], path: impl AsRef<Path>, config_digest: &str) -> Result<()> {
    let mut w = DatasetWriter::create(path, &DatasetHeader::new(config_digest))?;
    for r in records {
        w.write(r)?;
    }
    w.finish()
}

fn parse_header(line: &str) -> Result<DatasetHeader> {
    let header: DatasetHeader = serde_json::from_str(line).map_err(|e| Error::Dataset {
        line: 1,
        message: format!("bad header: {e}"),
    })?;
    if header.schema != SCHEMA {
        return Err(Error::Dataset {
            line: 1,
            message: format!("unknown schema {:?}", header.schema),
        });
    }
    if header.version != SCHEMA_VERSION {
        return Err(Error::VersionMismatch {
            expected: SCHEMA_VERSION,
            found: header.version,
        });
    }
    Ok(header)
}

pub fn read_header(path: impl AsRef<Path>) -> Result<DatasetHeader> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut first = String::new();
    BufReader::new(file)
        .read_line(&mut first)
        .map_err(|e| Error::io(path, e))?;
    if first.trim().is_empty() {
        return Err(Error::Dataset {
            line: 1,
            message: "missing header".into(),
        });
    }
    parse_header(first.trim_end())
}

/// Reads every record; errors carry the 1-based line number.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<(DatasetHeader, Vec<TrajectoryRecord>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text)
}

pub fn parse_dataset(text: &str) -> Result<(DatasetHeader, Vec<TrajectoryRecord>)> {
    let mut lines = text.lines().enumerate();
    let header = match lines.next() {
        Some((_, l)) if !l.trim().is_empty() => parse_header(l)?,
        _ => {
            return Err(Error::Dataset {
                line: 1,
                message: "missing header".into(),
            })
        }
    };
    let mut records = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let r: TrajectoryRecord = serde_json::from_str(line).map_err(|e| Error::Dataset {
            line: i + 1,
            message: e.to_string(),
        })?;
        if r.actions.len() != ACTION_STEPS {
            return Err(Error::Dataset {
                line: i + 1,
                message: format!("expected {ACTION_STEPS} actions, found {}", r.actions.len()),
            });
        }
        records.push(r);
    }
    Ok((header, records))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetStats {
    pub scenes: usize,
    pub trajectories: usize,
    pub total_distance_km: f64,
    pub records: usize,
}

impl std::fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:>8} {:>14} {:>12} {:>10}", "scenes", "trajectories", "distance_km", "records")?;
        write!(
            f,
            "{:>8} {:>14} {:>12.3} {:>10}",
            self.scenes, self.trajectories, self.total_distance_km, self.records
        )
    }
}

/// Counts over records: distinct scenes, distinct source trajectories and the
/// summed arc length of those trajectories.
pub fn stats_of(records: &[TrajectoryRecord]) -> DatasetStats {
    let scenes: BTreeSet<&str> = records.iter().map(|r| r.scene_id.as_str()).collect();
    let mut seen = BTreeSet::new();
    let mut meters = 0.0;
    for r in records {
        if seen.insert((r.scene_id.as_str(), r.source_trajectory_id)) {
            meters += r.source_length;
        }
    }
    DatasetStats {
        scenes: scenes.len(),
        trajectories: seen.len(),
        total_distance_km: meters / 1000.0,
        records: records.len(),
    }
}

/// Statistics over one or more dataset shards.
pub fn dataset_stats<P: AsRef<Path>>(paths: &[P]) -> Result<DatasetStats> {
    let mut all = Vec::new();
    for p in paths {
        all.extend(read_dataset(p)?.1);
    }
    Ok(stats_of(&all))
}
