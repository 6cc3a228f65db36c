//! Height classification and the truncated 2D Euclidean distance field.
//!
//! The distance field is built on the floor plane after projecting every voxel
//! column through a height filter, so it depends on the robot height. Distances
//! are measured between cell centers and are exact (lower-envelope transform
//! on squared integer offsets), not chamfer approximations.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{axis_center, SceneSpec, VoxelGrid};

pub const DEFAULT_H_NAV: f64 = 0.15;
pub const DEFAULT_H_OBS: f64 = 0.15;
pub const DEFAULT_CAP: f64 = 10.0;
pub const DEFAULT_COARSE_RESOLUTION: f64 = 0.2;

/// Per-column obstacle flags for one robot height.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleMask {
    pub resolution: f64,
    pub origin: [f64; 2],
    pub dims: [usize; 2],
    pub blocked: Vec<bool>,
    pub h_nav: f64,
    pub h_obs: f64,
    pub h_b: f64,
}

impl ObstacleMask {
    /// An all-free mask; mostly useful for tests and synthetic maps.
    pub fn empty(resolution: f64, origin: [f64; 2], dims: [usize; 2]) -> Self {
        Self {
            resolution,
            origin,
            dims,
            blocked: vec![false; dims[0] * dims[1]],
            h_nav: DEFAULT_H_NAV,
            h_obs: DEFAULT_H_OBS,
            h_b: 1.0,
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.dims[0] + i
    }

    pub fn is_blocked(&self, i: usize, j: usize) -> bool {
        self.blocked[self.index(i, j)]
    }

    pub fn set_blocked(&mut self, i: usize, j: usize, value: bool) {
        let idx = self.index(i, j);
        self.blocked[idx] = value;
    }

    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            axis_center(self.origin[0], self.resolution, i),
            axis_center(self.origin[1], self.resolution, j),
        ]
    }

    /// Cell containing a point, if it lies inside the mask.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        cell_of(self.origin, self.resolution, self.dims, x, y)
    }
}

fn cell_of(origin: [f64; 2], res: f64, dims: [usize; 2], x: f64, y: f64) -> Option<(usize, usize)> {
    let fx = (x - origin[0]) / res;
    let fy = (y - origin[1]) / res;
    if !(fx >= 0.0 && fy >= 0.0) {
        return None;
    }
    let (i, j) = (fx.floor() as usize, fy.floor() as usize);
    // points exactly on the far edge belong to the last cell
    let i = if i == dims[0] && fx <= dims[0] as f64 { i - 1 } else { i };
    let j = if j == dims[1] && fy <= dims[1] as f64 { j - 1 } else { j };
    (i < dims[0] && j < dims[1]).then_some((i, j))
}

/// Marks a column blocked iff some occupied voxel in it has its center height
/// in `[h_obs, h_b]`. Geometry above `h_b` is invisible to the robot, so a short
/// robot can pass under a table that blocks a tall one.
pub fn classify(grid: &VoxelGrid, h_b: f64, h_nav: f64, h_obs: f64) -> Result<ObstacleMask> {
    if !(h_obs > 0.0 && h_obs <= h_b) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < h_obs <= h_b, got h_obs={h_obs}, h_b={h_b}"
        )));
    }
    let [nx, ny, nz] = grid.dims;
    let layers: Vec<usize> = (0..nz)
        .filter(|&k| {
            let z = grid.center(0, 0, k)[2];
            z >= h_obs && z <= h_b
        })
        .collect();
    let mut blocked = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            blocked[j * nx + i] = layers.iter().any(|&k| grid.is_occupied(i, j, k));
        }
    }
    Ok(ObstacleMask {
        resolution: grid.resolution,
        origin: [grid.origin[0], grid.origin[1]],
        dims: [nx, ny],
        blocked,
        h_nav,
        h_obs,
        h_b,
    })
}

/// Truncated distance field over the floor plane.
#[derive(Debug, Clone, PartialEq)]
pub struct EsdfMap {
    pub resolution: f64,
    pub origin: [f64; 2],
    pub dims: [usize; 2],
    pub distance: Vec<f64>,
    pub navigable: Vec<bool>,
    pub r_b: f64,
    pub cap: f64,
}

impl EsdfMap {
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.dims[0] + i
    }

    #[inline]
    pub fn distance_at(&self, i: usize, j: usize) -> f64 {
        self.distance[self.index(i, j)]
    }

    #[inline]
    pub fn is_navigable(&self, i: usize, j: usize) -> bool {
        self.navigable[self.index(i, j)]
    }

    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            axis_center(self.origin[0], self.resolution, i),
            axis_center(self.origin[1], self.resolution, j),
        ]
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        cell_of(self.origin, self.resolution, self.dims, x, y)
    }

    /// `[x_min, x_max, y_min, y_max]` of the covered area.
    pub fn extent(&self) -> [f64; 4] {
        [
            self.origin[0],
            self.origin[0] + self.dims[0] as f64 * self.resolution,
            self.origin[1],
            self.origin[1] + self.dims[1] as f64 * self.resolution,
        ]
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let e = self.extent();
        x >= e[0] && x <= e[1] && y >= e[2] && y <= e[3]
    }

    /// Bilinear interpolation between the four surrounding cell centers.
    /// Points in the half-cell border are clamped to the outermost centers.
    pub fn query(&self, x: f64, y: f64) -> Result<f64> {
        if !self.contains(x, y) {
            return Err(Error::OutOfBounds { x, y });
        }
        let (i0, i1, tx) = interp_axis((x - self.origin[0]) / self.resolution - 0.5, self.dims[0]);
        let (j0, j1, ty) = interp_axis((y - self.origin[1]) / self.resolution - 0.5, self.dims[1]);
        let d00 = self.distance_at(i0, j0);
        let d10 = self.distance_at(i1, j0);
        let d01 = self.distance_at(i0, j1);
        let d11 = self.distance_at(i1, j1);
        let a = d00 + (d10 - d00) * tx;
        let b = d01 + (d11 - d01) * tx;
        Ok(a + (b - a) * ty)
    }

    /// Like [`query`](Self::query) but reads 0 outside the map.
    pub fn query_or_zero(&self, x: f64, y: f64) -> f64 {
        self.query(x, y).unwrap_or(0.0)
    }

    /// Same distances, navigability recomputed for a different truncation radius.
    pub fn retruncate(&self, r_b: f64) -> EsdfMap {
        let navigable = self.distance.iter().map(|&d| d > 0.0 && d >= r_b).collect();
        EsdfMap {
            navigable,
            r_b,
            ..self.clone()
        }
    }

    pub fn navigable_count(&self) -> usize {
        self.navigable.iter().filter(|&&n| n).count()
    }
}

fn interp_axis(f: f64, n: usize) -> (usize, usize, f64) {
    // snap coordinates that sit on a center up to rounding
    let r = f.round();
    let f = if (f - r).abs() < 1e-9 { r } else { f };
    let f = f.clamp(0.0, (n - 1) as f64);
    let i0 = (f.floor() as usize).min(n - 1);
    let i1 = (i0 + 1).min(n - 1);
    (i0, i1, f - i0 as f64)
}

/// Squared distance, in cells², from each cell to the nearest blocked cell
/// center; `None` when the mask has no blocked cell.
pub fn squared_cell_distances(mask: &ObstacleMask) -> Vec<Option<u64>> {
    let [nx, ny] = mask.dims;
    // column pass: 1D distance along j
    let mut col = vec![u64::MAX; nx * ny];
    for i in 0..nx {
        let mut last: Option<usize> = None;
        for j in 0..ny {
            if mask.blocked[j * nx + i] {
                last = Some(j);
            }
            if let Some(b) = last {
                col[j * nx + i] = (j - b) as u64;
            }
        }
        let mut next: Option<usize> = None;
        for j in (0..ny).rev() {
            if mask.blocked[j * nx + i] {
                next = Some(j);
            }
            if let Some(b) = next {
                let d = (b - j) as u64;
                if d < col[j * nx + i] {
                    col[j * nx + i] = d;
                }
            }
        }
    }
    // row pass: lower envelope of parabolas over the finite column distances
    let mut out = vec![None; nx * ny];
    out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        let f: Vec<Option<u64>> = (0..nx)
            .map(|i| {
                let g = col[j * nx + i];
                (g != u64::MAX).then(|| g * g)
            })
            .collect();
        lower_envelope(&f, row);
    });
    out
}

/// 1D squared distance transform `out[x] = min_q f[q] + (x - q)²` over the finite sites.
fn lower_envelope(f: &[Option<u64>], out: &mut [Option<u64>]) {
    let sites: Vec<(i64, i64)> = f
        .iter()
        .enumerate()
        .filter_map(|(q, v)| v.map(|fq| (q as i64, fq as i64)))
        .collect();
    if sites.is_empty() {
        out.iter_mut().for_each(|o| *o = None);
        return;
    }
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(sites.len());
    let mut bounds: Vec<f64> = Vec::with_capacity(sites.len() + 1);
    let intersect = |a: (i64, i64), b: (i64, i64)| -> f64 {
        let num = (b.1 + b.0 * b.0) - (a.1 + a.0 * a.0);
        num as f64 / (2 * (b.0 - a.0)) as f64
    };
    for &s in &sites {
        while let Some(&top) = hull.last() {
            let x = intersect(top, s);
            if hull.len() > 1 && x <= bounds[hull.len() - 1] {
                hull.pop();
                bounds.pop();
            } else {
                bounds.push(x);
                break;
            }
        }
        if hull.is_empty() {
            bounds.push(f64::NEG_INFINITY);
        }
        hull.push(s);
    }
    let mut k = 0;
    for (x, o) in out.iter_mut().enumerate() {
        let xf = x as f64;
        while k + 1 < hull.len() && bounds[k + 1] < xf {
            k += 1;
        }
        let (q, fq) = hull[k];
        let dx = x as i64 - q;
        *o = Some((dx * dx + fq) as u64);
    }
}

/// Exact Euclidean distance transform followed by truncation at `r_b` and
/// clamping at `cap`.
pub fn compute_esdf(mask: &ObstacleMask, r_b: f64, cap: f64) -> Result<EsdfMap> {
    if !(r_b >= 0.0) || !(cap > r_b) {
        return Err(Error::InvalidArgument(format!("need r_b >= 0 and cap > r_b, got r_b={r_b}, cap={cap}")));
    }
    let res = mask.resolution;
    let distance: Vec<f64> = squared_cell_distances(mask)
        .into_iter()
        .map(|d| match d {
            Some(d2) => ((d2 as f64).sqrt() * res).min(cap),
            None => cap,
        })
        .collect();
    let navigable = distance
        .iter()
        .zip(&mask.blocked)
        .map(|(&d, &b)| !b && d >= r_b)
        .collect();
    Ok(EsdfMap {
        resolution: res,
        origin: mask.origin,
        dims: mask.dims,
        distance,
        navigable,
        r_b,
        cap,
    })
}

/// Downsampled navigability for grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseGrid {
    pub resolution: f64,
    pub origin: [f64; 2],
    pub dims: [usize; 2],
    pub navigable: Vec<bool>,
    /// Minimum fine distance over each covered block.
    pub clearance: Vec<f64>,
    /// Fine cells per coarse cell along each axis.
    pub ratio: usize,
    fine_dims: [usize; 2],
    fine_resolution: f64,
}

impl CoarseGrid {
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.dims[0] + i
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.dims[0], idx / self.dims[0])
    }

    pub fn len(&self) -> usize {
        self.navigable.len()
    }

    pub fn is_empty(&self) -> bool {
        self.navigable.is_empty()
    }

    #[inline]
    pub fn is_navigable(&self, i: usize, j: usize) -> bool {
        self.navigable[self.index(i, j)]
    }

    /// Fine-cell index range covered by coarse cell `(i, j)`.
    pub fn fine_block(&self, i: usize, j: usize) -> ([usize; 2], [usize; 2]) {
        let r = self.ratio;
        let x = [i * r, ((i + 1) * r).min(self.fine_dims[0])];
        let y = [j * r, ((j + 1) * r).min(self.fine_dims[1])];
        (x, y)
    }

    /// Center of the covered fine block; the geometric coarse center for full blocks.
    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        let ([x0, x1], [y0, y1]) = self.fine_block(i, j);
        let fr = self.fine_resolution;
        [
            (axis_center(self.origin[0], fr, x0) + axis_center(self.origin[0], fr, x1 - 1)) * 0.5,
            (axis_center(self.origin[1], fr, y0) + axis_center(self.origin[1], fr, y1 - 1)) * 0.5,
        ]
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        cell_of(self.origin, self.resolution, self.dims, x, y)
    }

    pub fn navigable_count(&self) -> usize {
        self.navigable.iter().filter(|&&n| n).count()
    }

    /// Builds a grid directly from a navigability mask (ratio 1, clearance
    /// unknown). Handy for synthetic search problems.
    pub fn from_mask(resolution: f64, origin: [f64; 2], dims: [usize; 2], navigable: Vec<bool>) -> Self {
        assert_eq!(navigable.len(), dims[0] * dims[1]);
        let n = navigable.len();
        Self {
            resolution,
            origin,
            dims,
            navigable,
            clearance: vec![f64::INFINITY; n],
            ratio: 1,
            fine_dims: dims,
            fine_resolution: resolution,
        }
    }
}

pub fn downsample(esdf: &EsdfMap, coarse_resolution: f64) -> Result<CoarseGrid> {
    let ratio_f = coarse_resolution / esdf.resolution;
    let ratio = ratio_f.round();
    if !(ratio >= 1.0) || (ratio_f - ratio).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "coarse resolution {coarse_resolution} is not an integer multiple of {}",
            esdf.resolution
        )));
    }
    let r = ratio as usize;
    let [fx, fy] = esdf.dims;
    let dims = [fx.div_ceil(r), fy.div_ceil(r)];
    let mut navigable = vec![true; dims[0] * dims[1]];
    let mut clearance = vec![f64::INFINITY; dims[0] * dims[1]];
    for j in 0..fy {
        for i in 0..fx {
            let c = (j / r) * dims[0] + i / r;
            navigable[c] &= esdf.is_navigable(i, j);
            clearance[c] = clearance[c].min(esdf.distance_at(i, j));
        }
    }
    Ok(CoarseGrid {
        resolution: esdf.resolution * r as f64,
        origin: esdf.origin,
        dims,
        navigable,
        clearance,
        ratio: r,
        fine_dims: esdf.dims,
        fine_resolution: esdf.resolution,
    })
}

/// Parameters turning a scene into planning maps for one robot height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EsdfParams {
    pub voxel_resolution: f64,
    pub h_nav: f64,
    pub h_obs: f64,
    pub r_b: f64,
    pub cap: f64,
    pub coarse_resolution: f64,
}

impl Default for EsdfParams {
    fn default() -> Self {
        Self {
            voxel_resolution: 0.05,
            h_nav: DEFAULT_H_NAV,
            h_obs: DEFAULT_H_OBS,
            r_b: 0.25,
            cap: DEFAULT_CAP,
            coarse_resolution: DEFAULT_COARSE_RESOLUTION,
        }
    }
}

/// Obstacle mask and distance field of `scene` for a robot of height `h_b`.
pub fn esdf_for_scene(scene: &SceneSpec, h_b: f64, params: &EsdfParams) -> Result<(ObstacleMask, EsdfMap)> {
    let grid = crate::scene::voxelize(scene, params.voxel_resolution)?;
    let mask = classify(&grid, h_b, params.h_nav, params.h_obs)?;
    let esdf = compute_esdf(&mask, params.r_b, params.cap)?;
    Ok((mask, esdf))
}

/// Debug dump: 16-byte header (nx, ny as u32; resolution, cap as f32), then
/// row-major f32 distances, all little-endian.
pub fn write_esdf_dump(esdf: &EsdfMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_esdf_dump(esdf);
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_esdf_dump(esdf: &EsdfMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * esdf.distance.len());
    out.extend_from_slice(&(esdf.dims[0] as u32).to_le_bytes());
    out.extend_from_slice(&(esdf.dims[1] as u32).to_le_bytes());
    out.extend_from_slice(&(esdf.resolution as f32).to_le_bytes());
    out.extend_from_slice(&(esdf.cap as f32).to_le_bytes());
    for &d in &esdf.distance {
        out.extend_from_slice(&(d as f32).to_le_bytes());
    }
    out
}

/// Decoded debug dump.
#[derive(Debug, Clone, PartialEq)]
pub struct EsdfDump {
    pub dims: [usize; 2],
    pub resolution: f32,
    pub cap: f32,
    pub distance: Vec<f32>,
}

pub fn decode_esdf_dump(bytes: &[u8]) -> Result<EsdfDump> {
    if bytes.len() < 16 {
        return Err(Error::Parse("esdf dump shorter than its header".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f32_at = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let nx = u32_at(0) as usize;
    let ny = u32_at(4) as usize;
    if bytes.len() != 16 + 4 * nx * ny {
        return Err(Error::Parse(format!(
            "esdf dump length {} does not match {nx}x{ny}",
            bytes.len()
        )));
    }
    Ok(EsdfDump {
        dims: [nx, ny],
        resolution: f32_at(8),
        cap: f32_at(12),
        distance: (0..nx * ny).map(|k| f32_at(16 + 4 * k)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{voxelize, Box3, Bounds};

    fn mask_with(dims: [usize; 2], blocked: &[(usize, usize)]) -> ObstacleMask {
        let mut m = ObstacleMask::empty(0.05, [0.0, 0.0], dims);
        for &(i, j) in blocked {
            m.set_blocked(i, j, true);
        }
        m
    }

    #[test]
    fn table_blocks_only_tall_robots() {
        let scene = SceneSpec {
            id: "table".into(),
            seed: 0,
            bounds: Bounds::new(0.0, 2.0, 0.0, 2.0),
            obstacles: vec![Box3::new(0.5, 1.5, 0.5, 1.5, 0.6, 0.7)],
        };
        let g = voxelize(&scene, 0.05).unwrap();
        let short = classify(&g, 0.5, 0.15, 0.15).unwrap();
        let tall = classify(&g, 1.2, 0.15, 0.15).unwrap();
        assert!(!short.is_blocked(20, 20));
        assert!(tall.is_blocked(20, 20));
    }

    #[test]
    fn pillar_blocks_every_height() {
        let scene = SceneSpec {
            id: "pillar".into(),
            seed: 0,
            bounds: Bounds::new(0.0, 1.0, 0.0, 1.0),
            obstacles: vec![Box3::new(0.4, 0.6, 0.4, 0.6, 0.0, 3.0)],
        };
        let g = voxelize(&scene, 0.05).unwrap();
        for h in [0.26, 0.5, 0.8, 1.0, 1.24] {
            assert!(classify(&g, h, 0.15, 0.15).unwrap().is_blocked(10, 10), "h_b={h}");
        }
    }

    #[test]
    fn empty_grid_has_no_blocked_cells() {
        let scene = SceneSpec {
            id: "e".into(),
            seed: 0,
            bounds: Bounds::new(0.0, 1.0, 0.0, 1.0),
            obstacles: vec![],
        };
        let g = voxelize(&scene, 0.05).unwrap();
        assert!(!classify(&g, 0.8, 0.15, 0.15).unwrap().blocked.iter().any(|&b| b));
    }

    #[test]
    fn classify_rejects_bad_thresholds() {
        let scene = SceneSpec {
            id: "e".into(),
            seed: 0,
            bounds: Bounds::new(0.0, 1.0, 0.0, 1.0),
            obstacles: vec![],
        };
        let g = voxelize(&scene, 0.05).unwrap();
        assert!(classify(&g, 0.5, 0.15, 0.0).is_err());
        assert!(classify(&g, 0.1, 0.15, 0.15).is_err());
    }

    #[test]
    fn no_obstacles_reads_cap() {
        let e = compute_esdf(&mask_with([8, 8], &[]), 0.25, 10.0).unwrap();
        assert!(e.distance.iter().all(|&d| d == 10.0));
        assert!(e.navigable.iter().all(|&n| n));
    }

    #[test]
    fn single_obstacle_distance() {
        let e = compute_esdf(&mask_with([8, 8], &[(3, 3)]), 0.0, 10.0).unwrap();
        assert!((e.distance_at(3, 5) - 0.10).abs() < 1e-12);
        assert_eq!(e.distance_at(3, 3), 0.0);
        assert!(!e.is_navigable(3, 3));
    }

    #[test]
    fn query_on_center_and_midpoint() {
        let mut e = compute_esdf(&mask_with([4, 4], &[]), 0.0, 10.0).unwrap();
        let (a, b) = (e.index(1, 1), e.index(2, 1));
        e.distance[a] = 0.4;
        e.distance[b] = 0.8;
        let c = e.center(1, 1);
        assert_eq!(e.query(c[0], c[1]).unwrap(), 0.4);
        let m = e.center(2, 1);
        let q = e.query((c[0] + m[0]) / 2.0, c[1]).unwrap();
        assert!((q - 0.6).abs() < 1e-12);
        assert!(matches!(e.query(-0.01, 0.1), Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn downsample_rules() {
        let e = compute_esdf(&mask_with([8, 8], &[]), 0.0, 10.0).unwrap();
        let c = downsample(&e, 0.2).unwrap();
        assert_eq!(c.dims, [2, 2]);
        assert!(c.navigable.iter().all(|&n| n));
        let e = compute_esdf(&mask_with([8, 8], &[(5, 1)]), 0.0, 10.0).unwrap();
        let c = downsample(&e, 0.2).unwrap();
        assert!(!c.is_navigable(1, 0));
        assert!(c.is_navigable(0, 0) && c.is_navigable(0, 1) && c.is_navigable(1, 1));
        assert!(matches!(downsample(&e, 0.17), Err(Error::InvalidArgument(_))));
        assert_eq!(c.cell_center(0, 0), [0.1, 0.1]);
    }

    #[test]
    fn dump_roundtrip() {
        let e = compute_esdf(&mask_with([5, 3], &[(1, 1)]), 0.0, 10.0).unwrap();
        let bytes = encode_esdf_dump(&e);
        assert_eq!(bytes.len(), 16 + 4 * 15);
        let d = decode_esdf_dump(&bytes).unwrap();
        assert_eq!(d.dims, [5, 3]);
        assert_eq!(d.resolution, 0.05f32);
        assert_eq!(d.cap, 10.0f32);
        assert_eq!(d.distance[e.index(1, 1)], 0.0);
        assert!(decode_esdf_dump(&bytes[..20]).is_err());
    }
}
