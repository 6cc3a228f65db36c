//! Cylindrical differential-drive robot with a pitched pinhole camera on top.

use std::f64::consts::PI;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::geom::{wrap_angle, Point2, Pose2};
use crate::planner::{Frame, Trajectory};
use crate::seed::Rng;

pub const SAFE_RADIUS: f64 = 0.25;
pub const HEIGHT_RANGE: (f64, f64) = (0.25, 1.25);
pub const PITCH_MIN: f64 = -30.0 * PI / 180.0;
pub const HFOV: f64 = 69.0 * PI / 180.0;
pub const VFOV: f64 = 42.0 * PI / 180.0;
pub const V_MAX: f64 = 2.0;
pub const OMEGA_MAX: f64 = 1.5;
pub const PITCH_JITTER: f64 = 5.0 * PI / 180.0;
pub const DEFAULT_K_V: f64 = 1.0;
pub const DEFAULT_K_OMEGA: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    pub r_b: f64,
    pub h_b: f64,
    pub camera_pitch: f64,
    pub hfov: f64,
    pub vfov: f64,
    pub v_max: f64,
    pub omega_max: f64,
}

impl RobotModel {
    /// Robot of height `h_b` with default radius, optics and speed limits.
    pub fn with_height(h_b: f64, camera_pitch: f64) -> Self {
        Self {
            r_b: SAFE_RADIUS,
            h_b,
            camera_pitch,
            hfov: HFOV,
            vfov: VFOV,
            v_max: V_MAX,
            omega_max: OMEGA_MAX,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.r_b > 0.0
            && self.h_b > HEIGHT_RANGE.0
            && self.h_b < HEIGHT_RANGE.1
            && self.camera_pitch >= PITCH_MIN
            && self.camera_pitch <= 0.0
    }

    pub fn camera(&self, width: usize, height: usize) -> CameraModel {
        CameraModel::new(width, height, self.hfov, self.vfov, self.h_b, self.camera_pitch)
    }
}

impl Default for RobotModel {
    fn default() -> Self {
        Self::with_height(0.6, pitch_for_height(0.6, 0.0))
    }
}

/// Taller robots look further down: linear from 0° at the lowest height to
/// −30° at the tallest, plus `jitter`, clamped to `[−30°, 0°]`.
pub fn pitch_for_height(h_b: f64, jitter: f64) -> f64 {
    let base = PITCH_MIN * (h_b - HEIGHT_RANGE.0) / (HEIGHT_RANGE.1 - HEIGHT_RANGE.0);
    (base + jitter).clamp(PITCH_MIN, 0.0)
}

pub fn sample_robot(rng: &mut Rng) -> RobotModel {
    let mut h_b = rng.random_range(HEIGHT_RANGE.0..HEIGHT_RANGE.1);
    if h_b <= HEIGHT_RANGE.0 {
        // the open interval excludes the lower endpoint
        h_b = HEIGHT_RANGE.0 + 1e-9;
    }
    let jitter = rng.random_range(-PITCH_JITTER..=PITCH_JITTER);
    RobotModel::with_height(h_b, pitch_for_height(h_b, jitter))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub omega: f64,
    pub t: f64,
}

impl RobotState {
    pub fn at(pose: Pose2) -> Self {
        Self {
            x: pose.x,
            y: pose.y,
            theta: wrap_angle(pose.theta),
            ..Default::default()
        }
    }

    pub fn pose(&self) -> Pose2 {
        Pose2::new(self.x, self.y, self.theta)
    }
}

/// Exact unicycle arc integration over one control period.
pub fn step_diff_drive(state: &RobotState, v: f64, omega: f64, dt: f64) -> RobotState {
    let th = state.theta;
    let (x, y) = if omega.abs() < 1e-9 {
        (state.x + v * dt * th.cos(), state.y + v * dt * th.sin())
    } else {
        let r = v / omega;
        let th1 = th + omega * dt;
        (state.x + r * (th1.sin() - th.sin()), state.y + r * (th.cos() - th1.cos()))
    };
    RobotState {
        x,
        y,
        theta: wrap_angle(th + omega * dt),
        v,
        omega,
        t: state.t + dt,
    }
}

/// Midpoint command rule: `v` from the forward offset of the middle pose,
/// `ω` from its bearing, both scaled by proportional gains and clamped.
/// The trajectory must be expressed in the robot body frame.
pub fn trajectory_to_cmd(points: &[Point2], k_v: f64, k_omega: f64, model: &RobotModel) -> (f64, f64) {
    if points.is_empty() {
        return (0.0, 0.0);
    }
    let p = points[points.len() / 2];
    if p[0] == 0.0 && p[1] == 0.0 {
        return (0.0, 0.0);
    }
    let v = (k_v * p[0]).clamp(0.0, model.v_max);
    let w = (k_omega * p[1].atan2(p[0])).clamp(-model.omega_max, model.omega_max);
    (v, w)
}

/// Pinhole camera mounted at `mount_height` on the robot's vertical axis,
/// pitched by `pitch` (negative looks down). Pixel `(u, v)` samples the
/// image plane at `(u, v)` with `(cx, cy) = (width / 2, height / 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub mount_height: f64,
    pub pitch: f64,
}

impl CameraModel {
    pub fn new(width: usize, height: usize, hfov: f64, vfov: f64, mount_height: f64, pitch: f64) -> Self {
        Self {
            width,
            height,
            fx: (width as f64 / 2.0) / (hfov / 2.0).tan(),
            fy: (height as f64 / 2.0) / (vfov / 2.0).tan(),
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            mount_height,
            pitch,
        }
    }

    /// Camera axes in the robot body frame: (forward, right, down).
    pub fn axes(&self) -> ([f64; 3], [f64; 3], [f64; 3]) {
        let (s, c) = self.pitch.sin_cos();
        ([c, 0.0, s], [0.0, -1.0, 0.0], [s, 0.0, -c])
    }

    /// Projects a body-frame 3D point; `None` behind the image plane or
    /// outside the frame.
    pub fn project_body_point(&self, p: [f64; 3]) -> Option<(f64, f64)> {
        let (fwd, right, down) = self.axes();
        let r = [p[0], p[1], p[2] - self.mount_height];
        let dot = |a: [f64; 3]| a[0] * r[0] + a[1] * r[1] + a[2] * r[2];
        let zc = dot(fwd);
        if zc <= 1e-9 {
            return None;
        }
        let u = self.cx + self.fx * dot(right) / zc;
        let v = self.cy + self.fy * dot(down) / zc;
        let inside = u >= 0.0 && u < self.width as f64 && v >= 0.0 && v < self.height as f64;
        inside.then_some((u, v))
    }

    /// Unit ray direction (body frame) through pixel coordinates `(u, v)`.
    pub fn pixel_ray(&self, u: f64, v: f64) -> [f64; 3] {
        let (fwd, right, down) = self.axes();
        let a = (u - self.cx) / self.fx;
        let b = (v - self.cy) / self.fy;
        let d = [
            fwd[0] + a * right[0] + b * down[0],
            fwd[1] + a * right[1] + b * down[1],
            fwd[2] + a * right[2] + b * down[2],
        ];
        let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        [d[0] / n, d[1] / n, d[2] / n]
    }
}

/// Ground-plane trajectory projected into the first-person view. World-frame
/// trajectories are first moved into the frame of `robot_pose`; robot-start
/// frame trajectories are taken as already relative to the camera's robot.
pub fn project_trajectory(traj: &Trajectory, cam: &CameraModel, robot_pose: &RobotState) -> Vec<(f64, f64)> {
    let pose = robot_pose.pose();
    traj.poses
        .iter()
        .filter_map(|p| {
            let [bx, by] = match traj.frame {
                Frame::World => pose.inverse_transform_point([p.x, p.y]),
                Frame::RobotStart => [p.x, p.y],
            };
            cam.project_body_point([bx, by, 0.0])
        })
        .collect()
}
