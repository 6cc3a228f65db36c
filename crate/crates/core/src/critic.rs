//! Negative-sample augmentation and distance-based critic values.
//!
//! An expert sub-trajectory (current position plus 24 waypoints, start frame)
//! is rotated about its origin and blended with the original. Its value is
//! `-(points closer than d_safe) + α · (d_last - d_first)`, where the
//! distances are read from the global distance field. The value never looks
//! at a goal.

use std::f64::consts::FRAC_PI_2;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::esdf::EsdfMap;
use crate::geom::{Point2, Pose2};
use crate::seed::Rng;

/// Number of sampled points per labeled trajectory: current pose + 24 waypoints.
pub const LABEL_POINTS: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CriticParams {
    pub d_safe: f64,
    pub alpha: f64,
}

impl Default for CriticParams {
    fn default() -> Self {
        Self { d_safe: 0.5, alpha: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedTrajectory {
    /// Start-frame points; index 0 is the current position.
    pub points: Vec<Point2>,
    pub beta: f64,
    pub rotation: f64,
    pub source_record_id: String,
}

impl AugmentedTrajectory {
    pub fn to_world(&self, start: &Pose2) -> Vec<Point2> {
        self.points.iter().map(|&p| start.transform_point(p)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticLabel {
    pub value: f64,
    pub unsafe_count: usize,
    pub trend_term: f64,
    pub distances: Vec<f64>,
}

pub fn rotate_trajectory(points: &[Point2], angle: f64) -> Vec<Point2> {
    let (s, c) = angle.sin_cos();
    points.iter().map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]]).collect()
}

/// Pointwise `(1 - β)·τ + β·τ_r`.
pub fn interpolate(tau: &[Point2], tau_r: &[Point2], beta: f64) -> Result<Vec<Point2>> {
    if tau.len() != tau_r.len() {
        return Err(Error::LengthMismatch(tau.len(), tau_r.len()));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!("beta must lie in [0, 1], got {beta}")));
    }
    Ok(tau
        .iter()
        .zip(tau_r)
        .map(|(a, b)| [(1.0 - beta) * a[0] + beta * b[0], (1.0 - beta) * a[1] + beta * b[1]])
        .collect())
}

/// Rotation uniform in (−90°, 90°), blend weight uniform in (0, 1).
pub fn augment(points: &[Point2], rng: &mut Rng, source_record_id: &str) -> AugmentedTrajectory {
    let rotation = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
    let beta = rng.random_range(0.0..1.0);
    let rotated = rotate_trajectory(points, rotation);
    let points = interpolate(points, &rotated, beta).expect("equal lengths and beta in range");
    AugmentedTrajectory {
        points,
        beta,
        rotation,
        source_record_id: source_record_id.to_owned(),
    }
}

/// Value from precomputed distances.
pub fn critic_value(distances: &[f64], params: &CriticParams) -> CriticLabel {
    let unsafe_count = distances.iter().filter(|&&d| d < params.d_safe).count();
    let trend_term = match (distances.first(), distances.last()) {
        (Some(first), Some(last)) => last - first,
        _ => 0.0,
    };
    CriticLabel {
        value: -(unsafe_count as f64) + params.alpha * trend_term,
        unsafe_count,
        trend_term,
        distances: distances.to_vec(),
    }
}

/// Labels world-frame points against the distance field; points outside the
/// map read distance 0.
pub fn critic_label(world_points: &[Point2], esdf: &EsdfMap, params: &CriticParams) -> CriticLabel {
    let d: Vec<f64> = world_points.iter().map(|p| esdf.query_or_zero(p[0], p[1])).collect();
    critic_value(&d, params)
}

/// Index of the largest score; the lowest index wins ties.
pub fn select_best(scores: &[f64]) -> Result<usize> {
    if scores.is_empty() {
        return Err(Error::Empty);
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(best)
}
