//! Reference trajectory generation: endpoint sampling, A* on the coarse grid,
//! greedy clearance refinement on the fine field, cubic-spline smoothing and
//! a clearance gate.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::f64::consts::SQRT_2;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::esdf::{CoarseGrid, EsdfMap};
use crate::geom::{wrap_angle, Point2, Pose2};
use crate::seed::Rng;
use crate::spline::Spline2D;

pub const DEFAULT_REFINE_WINDOW: f64 = 0.3;
pub const DEFAULT_SPACING: f64 = 0.25;
pub const DEFAULT_D_MIN: f64 = 3.0;
pub const DEFAULT_D_MAX: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    World,
    RobotStart,
}

/// Ordered poses; consecutive positions are `spacing` apart except possibly
/// the final segment, which may be shorter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub poses: Vec<Pose2>,
    pub frame: Frame,
    pub spacing: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn positions(&self) -> Vec<Point2> {
        self.poses.iter().map(|p| [p.x, p.y]).collect()
    }

    /// Polyline length through the poses.
    pub fn arc_length(&self) -> f64 {
        self.poses
            .windows(2)
            .map(|w| (w[1].x - w[0].x).hypot(w[1].y - w[0].y))
            .sum()
    }

    /// Applies a rigid transform to every pose.
    pub fn transformed(&self, by: &Pose2) -> Trajectory {
        Trajectory {
            poses: self.poses.iter().map(|p| by.compose(p)).collect(),
            ..self.clone()
        }
    }
}

/// 8-connected path over coarse cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub cells: Vec<usize>,
    /// Path length in meters.
    pub cost: f64,
    pub straight_moves: usize,
    pub diagonal_moves: usize,
}

const NEIGHBORS: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Navigable 8-neighbors of `idx`. Diagonal moves require both adjacent
/// orthogonal cells to be navigable, so paths never cut corners.
pub fn grid_neighbors(grid: &CoarseGrid, idx: usize) -> impl Iterator<Item = (usize, bool)> + '_ {
    let (i, j) = grid.coords(idx);
    let [nx, ny] = grid.dims;
    let nav = move |x: i64, y: i64| {
        x >= 0 && y >= 0 && (x as usize) < nx && (y as usize) < ny && grid.is_navigable(x as usize, y as usize)
    };
    NEIGHBORS.iter().filter_map(move |&(dx, dy)| {
        let (x, y) = (i as i64 + dx, j as i64 + dy);
        if !nav(x, y) {
            return None;
        }
        let diagonal = dx != 0 && dy != 0;
        if diagonal && !(nav(i as i64 + dx, j as i64) && nav(i as i64, j as i64 + dy)) {
            return None;
        }
        Some((y as usize * nx + x as usize, diagonal))
    })
}

#[derive(Debug, Clone, Copy)]
struct Open {
    f: f64,
    idx: usize,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Open {}
impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Open {
    // reversed: BinaryHeap pops the smallest f, then the lowest index
    fn cmp(&self, other: &Self) -> Ordering {
        other.f.total_cmp(&self.f).then_with(|| other.idx.cmp(&self.idx))
    }
}

fn octile(grid: &CoarseGrid, a: usize, b: usize) -> f64 {
    let (ai, aj) = grid.coords(a);
    let (bi, bj) = grid.coords(b);
    let dx = ai.abs_diff(bi) as f64;
    let dy = aj.abs_diff(bj) as f64;
    dx.max(dy) + (SQRT_2 - 1.0) * dx.min(dy)
}

/// Cost-optimal 8-connected search with the octile heuristic.
pub fn astar(grid: &CoarseGrid, start: usize, goal: usize) -> Result<GridPath> {
    let n = grid.len();
    if start >= n || goal >= n {
        return Err(Error::InvalidArgument("endpoint index outside grid".into()));
    }
    if !grid.navigable[start] || !grid.navigable[goal] {
        return Err(Error::InvalidArgument("endpoints must be navigable".into()));
    }
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    g[start] = 0.0;
    open.push(Open {
        f: octile(grid, start, goal),
        idx: start,
    });
    while let Some(Open { idx, .. }) = open.pop() {
        if closed[idx] {
            continue;
        }
        closed[idx] = true;
        if idx == goal {
            break;
        }
        for (nb, diagonal) in grid_neighbors(grid, idx) {
            if closed[nb] {
                continue;
            }
            let cand = g[idx] + if diagonal { SQRT_2 } else { 1.0 };
            if cand < g[nb] {
                g[nb] = cand;
                parent[nb] = idx;
                open.push(Open {
                    f: cand + octile(grid, nb, goal),
                    idx: nb,
                });
            }
        }
    }
    if !closed[goal] {
        return Err(Error::Unreachable);
    }
    let mut cells = vec![goal];
    while *cells.last().unwrap() != start {
        cells.push(parent[*cells.last().unwrap()]);
    }
    cells.reverse();
    let (mut straight, mut diagonal) = (0, 0);
    for w in cells.windows(2) {
        let (a, b) = (grid.coords(w[0]), grid.coords(w[1]));
        if a.0 != b.0 && a.1 != b.1 {
            diagonal += 1;
        } else {
            straight += 1;
        }
    }
    Ok(GridPath {
        cells,
        cost: grid.resolution * (straight as f64 + diagonal as f64 * SQRT_2),
        straight_moves: straight,
        diagonal_moves: diagonal,
    })
}

/// Centers of the cells along a grid path.
pub fn path_points(grid: &CoarseGrid, path: &GridPath) -> Vec<Point2> {
    path.cells
        .iter()
        .map(|&c| {
            let (i, j) = grid.coords(c);
            grid.cell_center(i, j)
        })
        .collect()
}

/// Connected-component label per cell (`usize::MAX` for blocked cells), using
/// the same move rule as [`astar`].
pub fn components(grid: &CoarseGrid) -> Vec<usize> {
    let mut label = vec![usize::MAX; grid.len()];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for seed in 0..grid.len() {
        if !grid.navigable[seed] || label[seed] != usize::MAX {
            continue;
        }
        label[seed] = next;
        queue.push_back(seed);
        while let Some(c) = queue.pop_front() {
            for (nb, _) in grid_neighbors(grid, c) {
                if label[nb] == usize::MAX {
                    label[nb] = next;
                    queue.push_back(nb);
                }
            }
        }
        next += 1;
    }
    label
}

pub const ENDPOINT_ATTEMPTS: usize = 256;

/// Random navigable start and goal cells, `d_min..=d_max` meters apart and in
/// the same connected component. Returns coarse cell indices.
pub fn sample_endpoints(grid: &CoarseGrid, rng: &mut Rng, d_min: f64, d_max: f64) -> Result<(usize, usize)> {
    let nav: Vec<usize> = (0..grid.len()).filter(|&c| grid.navigable[c]).collect();
    if nav.len() < 2 {
        return Err(Error::NoEndpoints(0));
    }
    let labels = components(grid);
    let center = |c: usize| {
        let (i, j) = grid.coords(c);
        grid.cell_center(i, j)
    };
    for _ in 0..ENDPOINT_ATTEMPTS {
        let start = nav[rng.random_range(0..nav.len())];
        let sc = center(start);
        let goals: Vec<usize> = nav
            .iter()
            .copied()
            .filter(|&g| {
                if g == start || labels[g] != labels[start] {
                    return false;
                }
                let gc = center(g);
                let d = (gc[0] - sc[0]).hypot(gc[1] - sc[1]);
                d >= d_min && d <= d_max
            })
            .collect();
        if !goals.is_empty() {
            return Ok((start, goals[rng.random_range(0..goals.len())]));
        }
    }
    Err(Error::NoEndpoints(ENDPOINT_ATTEMPTS))
}

/// Moves every interior waypoint to the fine cell center with the largest
/// distance value inside an axis-aligned window of half-width `window`,
/// restricted to navigable cells. Ties go to the smallest displacement, then
/// the lowest cell index. The first and last waypoints are returned unchanged.
pub fn refine_waypoints(waypoints: &[Point2], esdf: &EsdfMap, window: f64) -> Vec<Point2> {
    let half = ((window.max(0.0) / esdf.resolution) + 1e-9).floor() as i64;
    let n = waypoints.len();
    waypoints
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            if k == 0 || k + 1 == n {
                return p;
            }
            let Some((ci, cj)) = esdf.cell_of(p[0], p[1]) else {
                return p;
            };
            let mut best: Option<(f64, i64, usize, usize, usize)> = None;
            if esdf.is_navigable(ci, cj) {
                best = Some((esdf.distance_at(ci, cj), 0, esdf.index(ci, cj), ci, cj));
            }
            for dj in -half..=half {
                for di in -half..=half {
                    let (x, y) = (ci as i64 + di, cj as i64 + dj);
                    if x < 0 || y < 0 || x as usize >= esdf.dims[0] || y as usize >= esdf.dims[1] {
                        continue;
                    }
                    let (x, y) = (x as usize, y as usize);
                    if !esdf.is_navigable(x, y) {
                        continue;
                    }
                    let cand = (esdf.distance_at(x, y), di * di + dj * dj, esdf.index(x, y), x, y);
                    let better = match best {
                        None => true,
                        Some(b) => {
                            cand.0 > b.0 || (cand.0 == b.0 && (cand.1 < b.1 || (cand.1 == b.1 && cand.2 < b.2)))
                        }
                    };
                    if better {
                        best = Some(cand);
                    }
                }
            }
            match best {
                Some((_, _, _, x, y)) => esdf.center(x, y),
                None => esdf.center(ci, cj),
            }
        })
        .collect()
}

/// Natural cubic spline through the waypoints (chord-length parameter),
/// resampled so consecutive poses are `spacing` apart; headings follow the
/// curve tangent.
pub fn spline_smooth(waypoints: &[Point2], spacing: f64) -> Result<Trajectory> {
    if !(spacing > 0.0) {
        return Err(Error::InvalidArgument(format!("spacing must be > 0, got {spacing}")));
    }
    let spline = Spline2D::through(waypoints)?;
    let poses = spline
        .resample_params(spacing)
        .into_iter()
        .map(|s| {
            let [x, y] = spline.position(s);
            Pose2::new(x, y, wrap_angle(spline.heading(s)))
        })
        .collect();
    Ok(Trajectory {
        poses,
        frame: Frame::World,
        spacing,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub min_clearance: f64,
    pub valid: bool,
    pub cause: Option<String>,
}

/// Clearance gate: valid iff every pose is inside the map and reads at
/// least `r_b`.
pub fn validate_trajectory(traj: &Trajectory, esdf: &EsdfMap, r_b: f64) -> Validation {
    let mut min_clearance = f64::INFINITY;
    for (k, p) in traj.poses.iter().enumerate() {
        match esdf.query(p.x, p.y) {
            Ok(d) => min_clearance = min_clearance.min(d),
            Err(_) => {
                return Validation {
                    min_clearance: 0.0,
                    valid: false,
                    cause: Some(format!("pose {k} at ({:.3}, {:.3}) is outside the map", p.x, p.y)),
                }
            }
        }
    }
    let valid = min_clearance >= r_b;
    Validation {
        min_clearance,
        valid,
        cause: (!valid).then(|| format!("min clearance {min_clearance:.4} m below {r_b} m")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::esdf::{compute_esdf, downsample, ObstacleMask};
    use crate::seed::rng_from;

    fn open_grid(n: usize) -> CoarseGrid {
        CoarseGrid::from_mask(0.2, [0.0, 0.0], [n, n], vec![true; n * n])
    }

    #[test]
    fn trivial_path() {
        let g = open_grid(10);
        let p = astar(&g, 12, 12).unwrap();
        assert_eq!(p.cells, vec![12]);
        assert_eq!(p.cost, 0.0);
    }

    #[test]
    fn straight_column_cost() {
        let g = open_grid(10);
        let p = astar(&g, g.index(0, 0), g.index(0, 9)).unwrap();
        assert!((p.cost - 1.8).abs() < 1e-12);
        assert_eq!(p.cells.len(), 10);
    }

    #[test]
    fn unreachable_goal() {
        let mut nav = vec![true; 100];
        for j in 0..10 {
            nav[j * 10 + 5] = false;
        }
        let g = CoarseGrid::from_mask(0.2, [0.0, 0.0], [10, 10], nav);
        assert!(matches!(astar(&g, 0, 9), Err(Error::Unreachable)));
    }

    #[test]
    fn no_corner_cutting() {
        // blocked at (1,0) and (0,1): the diagonal (0,0)->(1,1) is not allowed
        let mut nav = vec![true; 9];
        nav[1] = false;
        nav[3] = false;
        let g = CoarseGrid::from_mask(0.2, [0.0, 0.0], [3, 3], nav);
        assert!(matches!(astar(&g, 0, 4), Err(Error::Unreachable)));
    }

    #[test]
    fn single_cell_map_has_no_endpoints() {
        let g = open_grid(1);
        assert!(sample_endpoints(&g, &mut rng_from(0), 0.0, 10.0).is_err());
    }

    #[test]
    fn refine_zero_window_snaps_only() {
        let mut mask = ObstacleMask::empty(0.05, [0.0, 0.0], [40, 40]);
        mask.set_blocked(0, 20, true);
        let e = compute_esdf(&mask, 0.1, 10.0).unwrap();
        let pts = vec![[0.5, 0.5], [0.51, 0.52], [1.0, 1.0]];
        let out = refine_waypoints(&pts, &e, 0.0);
        assert_eq!(out[0], pts[0]);
        assert_eq!(out[2], pts[2]);
        assert_eq!(out[1], e.center(10, 10));
    }

    #[test]
    fn spline_two_points_is_straight() {
        let t = spline_smooth(&[[0.0, 0.0], [1.0, 1.0]], 0.25).unwrap();
        for p in &t.poses {
            assert!((p.theta - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
            assert!((p.x - p.y).abs() < 1e-12);
        }
        assert!(spline_smooth(&[[0.0, 0.0]], 0.25).is_err());
    }

    #[test]
    fn validation_flags_blocked_crossing() {
        let mut mask = ObstacleMask::empty(0.05, [0.0, 0.0], [40, 40]);
        for j in 0..40 {
            mask.set_blocked(20, j, true);
        }
        let e = compute_esdf(&mask, 0.25, 10.0).unwrap();
        let cross = spline_smooth(&[[0.2, 1.0], [1.8, 1.0]], 0.25).unwrap();
        let v = validate_trajectory(&cross, &e, 0.25);
        assert!(!v.valid && v.min_clearance < 0.25);
        let clear = spline_smooth(&[[0.2, 0.2], [0.2, 1.8]], 0.25).unwrap();
        let v = validate_trajectory(&clear, &e, 0.25);
        assert!(v.valid, "{v:?}");
        let outside = spline_smooth(&[[0.2, 0.2], [-1.0, 0.2]], 0.25).unwrap();
        assert!(!validate_trajectory(&outside, &e, 0.25).valid);
        let _ = downsample(&e, 0.2).unwrap();
    }
}
