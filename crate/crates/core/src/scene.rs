//! Box-world scenes: axis-aligned boxes over a rectangular floor.
//!
//! A scene file is a JSON object
//! `{"id", "seed", "bounds": [x0, x1, y0, y1], "obstacles": [[x0, x1, y0, y1, z0, z1], ...]}`
//! with all lengths in meters. The floor is the `z = 0` plane.

use std::fs;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from;

/// Upper bound on voxel count accepted by [`voxelize`].
pub const DEFAULT_VOXEL_BUDGET: usize = 200_000_000;

/// Axis-aligned rectangle `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Bounds {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

impl From<[f64; 4]> for Bounds {
    fn from(a: [f64; 4]) -> Self {
        Bounds::new(a[0], a[1], a[2], a[3])
    }
}

impl From<Bounds> for [f64; 4] {
    fn from(b: Bounds) -> Self {
        [b.x_min, b.x_max, b.y_min, b.y_max]
    }
}

/// Axis-aligned box obstacle. Serialized as `[x0, x1, y0, y1, z0, z1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 6]", into = "[f64; 6]")]
pub struct Box3 {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Box3 {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64, z0: f64, z1: f64) -> Self {
        Self {
            min: [x0, y0, z0],
            max: [x1, y1, z1],
        }
    }

    /// Closed containment test.
    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    pub fn volume(&self) -> f64 {
        (0..3).map(|a| self.max[a] - self.min[a]).product()
    }

    /// Euclidean gap between the x–y footprints (0 when they touch or overlap).
    pub fn footprint_gap(&self, other: &Box3) -> f64 {
        let gx = (other.min[0] - self.max[0]).max(self.min[0] - other.max[0]).max(0.0);
        let gy = (other.min[1] - self.max[1]).max(self.min[1] - other.max[1]).max(0.0);
        gx.hypot(gy)
    }

    fn footprint_overlaps(&self, b: &Bounds) -> bool {
        self.min[0] < b.x_max && self.max[0] > b.x_min && self.min[1] < b.y_max && self.max[1] > b.y_min
    }
}

impl From<[f64; 6]> for Box3 {
    fn from(a: [f64; 6]) -> Self {
        Box3::new(a[0], a[1], a[2], a[3], a[4], a[5])
    }
}

impl From<Box3> for [f64; 6] {
    fn from(b: Box3) -> Self {
        [b.min[0], b.max[0], b.min[1], b.max[1], b.min[2], b.max[2]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub id: String,
    pub seed: u64,
    pub bounds: Bounds,
    pub obstacles: Vec<Box3>,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let b = &self.bounds;
        let finite = [b.x_min, b.x_max, b.y_min, b.y_max].iter().all(|v| v.is_finite());
        if !finite || b.width() <= 0.0 || b.height() <= 0.0 {
            return Err(Error::InvalidScene(format!(
                "bounds must be finite with positive extent, got {:?}",
                <[f64; 4]>::from(*b)
            )));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if o.min.iter().chain(o.max.iter()).any(|v| !v.is_finite()) {
                return Err(Error::InvalidScene(format!("obstacle {i} has non-finite coordinates")));
            }
            if (0..3).any(|a| o.max[a] - o.min[a] <= 0.0) {
                return Err(Error::InvalidScene(format!("obstacle {i} has non-positive extent")));
            }
            if o.min[2] < 0.0 {
                return Err(Error::InvalidScene(format!("obstacle {i} extends below the floor")));
            }
            if !o.footprint_overlaps(b) {
                return Err(Error::InvalidScene(format!("obstacle {i} lies outside the bounds")));
            }
        }
        Ok(())
    }

    pub fn max_height(&self) -> f64 {
        self.obstacles.iter().map(|o| o.max[2]).fold(0.0, f64::max)
    }
}

pub fn parse_scene(text: &str) -> Result<SceneSpec> {
    let scene: SceneSpec = serde_json::from_str(text)?;
    scene.validate()?;
    Ok(scene)
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<SceneSpec> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scene(&text)
}

pub fn write_scene(scene: &SceneSpec, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(scene)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parameters for [`generate_scene`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneGenConfig {
    pub bounds: Bounds,
    pub obstacle_count: usize,
    /// Footprint side length range, meters.
    pub size_range: [f64; 2],
    /// Height range for floor-standing boxes, meters.
    pub height_range: [f64; 2],
    /// Minimum x–y gap between any two placed obstacles, meters.
    pub min_gap: f64,
    /// Enclose the bounds with four thin walls.
    pub perimeter_walls: bool,
    pub wall_thickness: f64,
    pub wall_height: f64,
    /// Fraction of obstacles that are raised slabs (table tops) instead of
    /// floor-standing boxes.
    pub overhang_fraction: f64,
    pub max_attempts: usize,
}

impl Default for SceneGenConfig {
    fn default() -> Self {
        Self {
            bounds: Bounds::new(0.0, 16.0, 0.0, 16.0),
            obstacle_count: 12,
            size_range: [0.5, 2.0],
            height_range: [0.4, 2.0],
            min_gap: 1.2,
            perimeter_walls: true,
            wall_thickness: 0.1,
            wall_height: 2.5,
            overhang_fraction: 0.2,
            max_attempts: 2000,
        }
    }
}

fn perimeter_walls(b: &Bounds, t: f64, h: f64) -> Vec<Box3> {
    vec![
        Box3::new(b.x_min, b.x_max, b.y_min, b.y_min + t, 0.0, h),
        Box3::new(b.x_min, b.x_max, b.y_max - t, b.y_max, 0.0, h),
        Box3::new(b.x_min, b.x_min + t, b.y_min + t, b.y_max - t, 0.0, h),
        Box3::new(b.x_max - t, b.x_max, b.y_min + t, b.y_max - t, 0.0, h),
    ]
}

/// Places `obstacle_count` boxes by rejection sampling. Placed boxes keep at
/// least `min_gap` from each other and from the perimeter walls. Walls are
/// emitted first, then the placed boxes in placement order.
pub fn generate_scene(config: &SceneGenConfig, seed: u64) -> Result<SceneSpec> {
    let c = config;
    if c.min_gap < 0.0 || !(c.size_range[0] > 0.0 && c.size_range[0] <= c.size_range[1]) {
        return Err(Error::InvalidArgument(
            "min_gap must be >= 0 and size_range must be positive and ordered".into(),
        ));
    }
    let mut rng = rng_from(seed);
    let walls = if c.perimeter_walls {
        perimeter_walls(&c.bounds, c.wall_thickness, c.wall_height)
    } else {
        Vec::new()
    };
    let inset = if c.perimeter_walls { c.wall_thickness } else { 0.0 };
    let (x_lo, x_hi) = (c.bounds.x_min + inset, c.bounds.x_max - inset);
    let (y_lo, y_hi) = (c.bounds.y_min + inset, c.bounds.y_max - inset);

    let mut placed: Vec<Box3> = Vec::with_capacity(c.obstacle_count);
    for index in 0..c.obstacle_count {
        let mut ok = false;
        for _ in 0..c.max_attempts {
            let w = rng.random_range(c.size_range[0]..=c.size_range[1]);
            let d = rng.random_range(c.size_range[0]..=c.size_range[1]);
            if w >= x_hi - x_lo || d >= y_hi - y_lo {
                continue;
            }
            let x0 = rng.random_range(x_lo..x_hi - w);
            let y0 = rng.random_range(y_lo..y_hi - d);
            let (z0, z1) = if rng.random::<f64>() < c.overhang_fraction {
                let z0 = rng.random_range(0.5..0.9);
                (z0, z0 + rng.random_range(0.05..0.12))
            } else {
                (0.0, rng.random_range(c.height_range[0]..=c.height_range[1]))
            };
            let cand = Box3::new(x0, x0 + w, y0, y0 + d, z0, z1);
            if walls.iter().chain(placed.iter()).all(|o| o.footprint_gap(&cand) >= c.min_gap) {
                placed.push(cand);
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(Error::Placement {
                index,
                attempts: c.max_attempts,
            });
        }
    }

    let mut obstacles = walls;
    obstacles.extend(placed);
    let scene = SceneSpec {
        id: format!("proc-{seed:016x}"),
        seed,
        bounds: c.bounds,
        obstacles,
    };
    scene.validate()?;
    Ok(scene)
}

/// Dense boolean occupancy over a regular voxel lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub resolution: f64,
    pub origin: [f64; 3],
    pub dims: [usize; 3],
    occupancy: Vec<bool>,
}

impl VoxelGrid {
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            axis_center(self.origin[0], self.resolution, i),
            axis_center(self.origin[1], self.resolution, j),
            axis_center(self.origin[2], self.resolution, k),
        ]
    }

    pub fn is_occupied(&self, i: usize, j: usize, k: usize) -> bool {
        self.occupancy[self.index(i, j, k)]
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }
}

/// Cell-center coordinate along one axis. Every module uses this formula so
/// that tie cases land identically.
#[inline]
pub(crate) fn axis_center(origin: f64, res: f64, i: usize) -> f64 {
    origin + (i as f64 + 0.5) * res
}

/// Number of cells of size `res` needed to cover `length`.
pub(crate) fn cells_to_cover(length: f64, res: f64) -> usize {
    ((length / res) - 1e-9).ceil().max(1.0) as usize
}

/// Index range of cell centers inside the closed interval `[lo, hi]`.
fn center_range(origin: f64, res: f64, n: usize, lo: f64, hi: f64) -> std::ops::Range<usize> {
    let first = (((lo - origin) / res - 0.5).floor() - 1.0).max(0.0) as usize;
    let last = ((((hi - origin) / res - 0.5).ceil() + 2.0).max(0.0) as usize).min(n);
    let mut a = first.min(n);
    while a < last && axis_center(origin, res, a) < lo {
        a += 1;
    }
    let mut b = a;
    while b < last && axis_center(origin, res, b) <= hi {
        b += 1;
    }
    a..b
}

pub fn voxelize(scene: &SceneSpec, resolution: f64) -> Result<VoxelGrid> {
    voxelize_with_budget(scene, resolution, DEFAULT_VOXEL_BUDGET)
}

/// A voxel is occupied iff its center lies inside (or on the boundary of)
/// some obstacle box.
pub fn voxelize_with_budget(scene: &SceneSpec, resolution: f64, budget: usize) -> Result<VoxelGrid> {
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(Error::InvalidArgument(format!("resolution must be > 0, got {resolution}")));
    }
    let b = &scene.bounds;
    let nx = cells_to_cover(b.width(), resolution);
    let ny = cells_to_cover(b.height(), resolution);
    let nz = cells_to_cover(scene.max_height(), resolution);
    let cells = nx
        .checked_mul(ny)
        .and_then(|v| v.checked_mul(nz))
        .unwrap_or(usize::MAX);
    if cells > budget {
        return Err(Error::CellBudget { cells, budget });
    }
    let mut grid = VoxelGrid {
        resolution,
        origin: [b.x_min, b.y_min, 0.0],
        dims: [nx, ny, nz],
        occupancy: vec![false; cells],
    };
    for o in &scene.obstacles {
        let ri = center_range(grid.origin[0], resolution, nx, o.min[0], o.max[0]);
        let rj = center_range(grid.origin[1], resolution, ny, o.min[1], o.max[1]);
        let rk = center_range(grid.origin[2], resolution, nz, o.min[2], o.max[2]);
        for k in rk.clone() {
            for j in rj.clone() {
                let base = grid.index(0, j, k);
                for i in ri.clone() {
                    grid.occupancy[base + i] = true;
                }
            }
        }
    }
    Ok(grid)
}
