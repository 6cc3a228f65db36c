//! Trajectory generation, critic labeling and closed-loop navigation
//! benchmarking over box-world scenes.
//!
//! The pipeline runs bottom-up:
//!
//! 1. [`scene`] defines box-world scenes, generates them procedurally and
//!    voxelizes them.
//! 2. [`esdf`] classifies voxel columns against a robot height and builds an
//!    exact, truncated 2D Euclidean distance field plus a coarse planning grid.
//! 3. [`planner`] samples endpoints, runs A* on the coarse grid, pushes
//!    waypoints away from obstacles and smooths them with a natural cubic spline.
//! 4. [`dataset`] slices planned trajectories into 24-step training records with
//!    point, trajectory and no-goal conditioning.
//! 5. [`critic`] augments records by rotation/interpolation and computes
//!    distance-based safety values.
//! 6. [`simulator`] and [`policy`] run closed-loop episodes and the benchmark
//!    metrics (success rate, SPL, episode time, explored area).
//!
//! The `navgen` binary exposes each stage as a subcommand; see [`cli`].

pub mod cli;
pub mod critic;
pub mod dataset;
pub mod error;
pub mod esdf;
pub mod geom;
pub mod pipeline;
pub mod planner;
pub mod policy;
pub mod robot;
pub mod scene;
pub mod seed;
pub mod simulator;
pub mod spline;

pub use error::{Error, Result};
pub use geom::{wrap_angle, Point2, Pose2};
