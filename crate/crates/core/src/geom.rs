//! Planar poses and angle helpers shared by every stage.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

pub type Point2 = [f64; 2];

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

/// Planar rigid pose. `theta` is the heading of the body x axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub const IDENTITY: Pose2 = Pose2 {
        x: 0.0,
        y: 0.0,
        theta: 0.0,
    };

    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn position(&self) -> Point2 {
        [self.x, self.y]
    }

    /// Maps a point from this pose's local frame into the parent frame.
    pub fn transform_point(&self, p: Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        [self.x + c * p[0] - s * p[1], self.y + s * p[0] + c * p[1]]
    }

    /// Maps a parent-frame point into this pose's local frame.
    pub fn inverse_transform_point(&self, p: Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        let dx = p[0] - self.x;
        let dy = p[1] - self.y;
        [c * dx + s * dy, -s * dx + c * dy]
    }

    /// `self ∘ local`: the pose `local`, given relative to `self`, in the parent frame.
    pub fn compose(&self, local: &Pose2) -> Pose2 {
        let [x, y] = self.transform_point([local.x, local.y]);
        Pose2::new(x, y, wrap_angle(self.theta + local.theta))
    }

    /// `other` expressed in the frame of `self`.
    pub fn relative(&self, other: &Pose2) -> Pose2 {
        let [x, y] = self.inverse_transform_point([other.x, other.y]);
        Pose2::new(x, y, wrap_angle(other.theta - self.theta))
    }
}

pub fn distance(a: Point2, b: Point2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}
