//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::path::Path;
use std::process::{Command, Output};

use navgen::esdf::{CoarseGrid, EsdfMap, EsdfParams, ObstacleMask};
use navgen::geom::Point2;
use navgen::pipeline::SceneMaps;
use navgen::planner::astar;
use navgen::scene::load_scene;
use navgen::seed::digest_hex;
use rand::Rng;

pub fn random_mask(rng: &mut impl Rng, nx: usize, ny: usize, density: f64) -> ObstacleMask {
    let mut m = ObstacleMask::empty(0.05, [-1.0, 2.0], [nx, ny]);
    for j in 0..ny {
        for i in 0..nx {
            if rng.random::<f64>() < density {
                m.set_blocked(i, j, true);
            }
        }
    }
    m
}

/// O(n²) minimum over all blocked cell centers, capped.
pub fn brute_force_edt(mask: &ObstacleMask, cap: f64) -> Vec<f64> {
    let [nx, ny] = mask.dims;
    let blocked: Vec<(f64, f64)> = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .filter(|&(i, j)| mask.is_blocked(i, j))
        .map(|(i, j)| (i as f64, j as f64))
        .collect();
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let best = blocked
                .iter()
                .map(|&(bi, bj)| (bi - i as f64).hypot(bj - j as f64) * mask.resolution)
                .fold(f64::INFINITY, f64::min);
            out.push(best.min(cap));
        }
    }
    out
}

pub fn random_grid(rng: &mut impl Rng, n: usize, blocked: f64) -> CoarseGrid {
    let nav = (0..n * n).map(|_| rng.random::<f64>() >= blocked).collect();
    CoarseGrid::from_mask(0.2, [0.0, 0.0], [n, n], nav)
}

/// Moves allowed by the planner: 8-connected, diagonals only when both
/// orthogonal neighbours are free.
pub fn moves(g: &CoarseGrid, c: usize) -> Vec<(usize, f64)> {
    let (i, j) = (c % g.dims[0], c / g.dims[0]);
    let free = |x: i64, y: i64| {
        x >= 0 && y >= 0 && (x as usize) < g.dims[0] && (y as usize) < g.dims[1] && g.navigable[y as usize * g.dims[0] + x as usize]
    };
    let mut out = Vec::new();
    for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)] {
        let (x, y) = (i as i64 + dx, j as i64 + dy);
        if !free(x, y) {
            continue;
        }
        if dx != 0 && dy != 0 && !(free(i as i64 + dx, j as i64) && free(i as i64, j as i64 + dy)) {
            continue;
        }
        let step = if dx != 0 && dy != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
        out.push((y as usize * g.dims[0] + x as usize, step * g.resolution));
    }
    out
}

#[derive(PartialEq)]
struct Entry(f64, usize);
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

pub fn dijkstra(g: &CoarseGrid, s: usize, t: usize) -> Option<f64> {
    let mut dist = vec![f64::INFINITY; g.len()];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(Entry(0.0, s));
    while let Some(Entry(d, c)) = heap.pop() {
        if c == t {
            return Some(d);
        }
        if d > dist[c] {
            continue;
        }
        for (n, w) in moves(g, c) {
            if d + w < dist[n] {
                dist[n] = d + w;
                heap.push(Entry(d + w, n));
            }
        }
    }
    None
}

/// Dijkstra returning the optimal (orthogonal, diagonal) step counts. A cost
/// `a·res + b·√2·res` determines `(a, b)` uniquely, so comparing counts is exact.
pub fn dijkstra_steps(g: &CoarseGrid, s: usize, t: usize) -> Option<(u64, u64)> {
    let mut best: Vec<Option<(u64, u64)>> = vec![None; g.len()];
    let value = |(a, b): (u64, u64)| a as f64 + b as f64 * std::f64::consts::SQRT_2;
    let mut heap = BinaryHeap::new();
    best[s] = Some((0, 0));
    heap.push(Entry(0.0, s));
    while let Some(Entry(d, c)) = heap.pop() {
        let steps = best[c].unwrap();
        if d > value(steps) {
            continue;
        }
        if c == t {
            return Some(steps);
        }
        for (n, w) in moves(g, c) {
            let next = if w > g.resolution * 1.2 { (steps.0, steps.1 + 1) } else { (steps.0 + 1, steps.1) };
            if best[n].is_none_or(|b| value(next) < value(b)) {
                best[n] = Some(next);
                heap.push(Entry(value(next), n));
            }
        }
    }
    None
}

/// Orthogonal and diagonal step counts of a cell path.
pub fn path_steps(g: &CoarseGrid, cells: &[usize]) -> (u64, u64) {
    let mut out = (0, 0);
    for w in cells.windows(2) {
        let (a, b) = (g.coords(w[0]), g.coords(w[1]));
        if a.0 != b.0 && a.1 != b.1 {
            out.1 += 1;
        } else {
            out.0 += 1;
        }
    }
    out
}

pub fn reachable(g: &CoarseGrid, s: usize) -> Vec<bool> {
    let mut seen = vec![false; g.len()];
    seen[s] = true;
    let mut q = VecDeque::from([s]);
    while let Some(c) = q.pop_front() {
        for (n, _) in moves(g, c) {
            if !seen[n] {
                seen[n] = true;
                q.push_back(n);
            }
        }
    }
    seen
}

/// Unsafe-point count and summed consecutive differences, evaluated from
/// scratch; points off the map read 0.
pub fn direct_critic_value(points: &[Point2], esdf: &EsdfMap, d_safe: f64, alpha: f64) -> f64 {
    let d: Vec<f64> = points
        .iter()
        .map(|p| if esdf.contains(p[0], p[1]) { esdf.query(p[0], p[1]).unwrap() } else { 0.0 })
        .collect();
    let mut unsafe_count = 0.0;
    for &x in &d {
        if x < d_safe {
            unsafe_count += 1.0;
        }
    }
    let mut progress = 0.0;
    for k in 1..d.len() {
        progress += d[k] - d[k - 1];
    }
    -unsafe_count + alpha * progress
}

pub fn navgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_navgen"))
        .args(args)
        .env_remove("NAVGEN_WORKERS")
        .output()
        .expect("binary runs")
}

pub fn navgen_ok(args: &[&str]) -> Output {
    let out = navgen(args);
    assert!(
        out.status.success(),
        "navgen {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Digest over every file below `dir`, keyed by relative path.
pub fn dir_digest(dir: &Path) -> String {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut files = Vec::new();
    walk(dir, dir, &mut files);
    files.sort();
    let mut bytes = Vec::new();
    for (name, data) in files {
        bytes.extend(name.as_bytes());
        bytes.push(0);
        bytes.extend((data.len() as u64).to_le_bytes());
        bytes.extend(data);
    }
    digest_hex(&bytes)
}

/// Two mutually reachable coarse cell centres at least `min_dist` apart.
pub fn navigable_pair(scene: &Path, h_b: f64, min_dist: f64) -> (Point2, Point2) {
    let maps = SceneMaps::new(load_scene(scene).unwrap(), EsdfParams::default()).unwrap();
    let pm = maps.maps_for(h_b).unwrap();
    let g = &pm.coarse;
    let nav: Vec<usize> = (0..g.len()).filter(|&c| g.navigable[c]).collect();
    let center = |c: usize| {
        let (i, j) = g.coords(c);
        g.cell_center(i, j)
    };
    let s = nav[nav.len() / 3];
    let ps = center(s);
    let t = nav
        .iter()
        .rev()
        .copied()
        .find(|&t| {
            let pt = center(t);
            (pt[0] - ps[0]).hypot(pt[1] - ps[1]) >= min_dist && astar(g, s, t).is_ok()
        })
        .expect("scene has a distant reachable cell");
    (ps, center(t))
}
