//! Floor occupancy grid for base navigation.

use std::collections::VecDeque;

use crate::geometry::OrientedBox;
use crate::scene::{BasePose, KinematicScene, SceneState};

pub const DEFAULT_GRID_RESOLUTION: f64 = 0.05;
pub const DEFAULT_ROBOT_RADIUS: f64 = 0.30;

/// Touching the inflated footprint does not occupy a cell; overlapping it by
/// more than this does.
const OVERLAP_EPS: f64 = 1e-9;

type P2 = [f64; 2];

/// Occupancy over the floor bounds. Cell `(i, j)` covers
/// `[min.x + i·res, min.x + (i+1)·res] × [min.y + j·res, …]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub origin: P2,
    pub resolution: f64,
    pub nx: usize,
    pub ny: usize,
    occupied: Vec<bool>,
}

impl OccupancyGrid {
    /// All-free grid covering `[min, max]`.
    pub fn empty(min: P2, max: P2, resolution: f64) -> Self {
        assert!(resolution > 0.0, "grid resolution must be positive");
        let nx = (((max[0] - min[0]) / resolution) - 1e-9).ceil().max(1.0) as usize;
        let ny = (((max[1] - min[1]) / resolution) - 1e-9).ceil().max(1.0) as usize;
        Self {
            origin: min,
            resolution,
            nx,
            ny,
            occupied: vec![false; nx * ny],
        }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn is_occupied(&self, i: usize, j: usize) -> bool {
        self.occupied[self.idx(i, j)]
    }

    pub fn set_occupied(&mut self, i: usize, j: usize) {
        let k = self.idx(i, j);
        self.occupied[k] = true;
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|o| **o).count()
    }

    pub fn cell_center(&self, i: usize, j: usize) -> P2 {
        [
            self.origin[0] + (i as f64 + 0.5) * self.resolution,
            self.origin[1] + (j as f64 + 0.5) * self.resolution,
        ]
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fx = (x - self.origin[0]) / self.resolution;
        let fy = (y - self.origin[1]) / self.resolution;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (i, j) = (fx.floor() as usize, fy.floor() as usize);
        // Points on the far boundary belong to the last cell.
        let i = if i == self.nx && fx <= self.nx as f64 + 1e-9 {
            i - 1
        } else {
            i
        };
        let j = if j == self.ny && fy <= self.ny as f64 + 1e-9 {
            j - 1
        } else {
            j
        };
        (i < self.nx && j < self.ny).then_some((i, j))
    }

    /// Free iff inside the grid and the containing cell is unoccupied.
    pub fn is_free_at(&self, x: f64, y: f64) -> bool {
        self.cell_of(x, y)
            .is_some_and(|(i, j)| !self.is_occupied(i, j))
    }

    /// Free cells whose centers lie within `radius` of `(x, y)`, nearest
    /// first (ties by row-major index).
    fn free_cells_within(&self, x: f64, y: f64, radius: f64) -> Vec<(f64, usize, usize)> {
        let r = self.resolution;
        let lo_i = (((x - radius - self.origin[0]) / r).floor().max(0.0)) as usize;
        let lo_j = (((y - radius - self.origin[1]) / r).floor().max(0.0)) as usize;
        let hi_i = (((x + radius - self.origin[0]) / r).ceil().max(0.0) as usize).min(self.nx);
        let hi_j = (((y + radius - self.origin[1]) / r).ceil().max(0.0) as usize).min(self.ny);
        let mut out = Vec::new();
        for j in lo_j..hi_j {
            for i in lo_i..hi_i {
                if self.is_occupied(i, j) {
                    continue;
                }
                let c = self.cell_center(i, j);
                let d = ((c[0] - x).powi(2) + (c[1] - y).powi(2)).sqrt();
                if d <= radius {
                    out.push((d, i, j));
                }
            }
        }
        out.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(self.idx(a.1, a.2).cmp(&self.idx(b.1, b.2)))
        });
        out
    }

    pub fn any_free_within(&self, x: f64, y: f64, radius: f64) -> bool {
        !self.free_cells_within(x, y, radius).is_empty()
    }

    /// Center of the nearest free cell within `radius`; the point itself if
    /// its own cell is free.
    pub fn nearest_free(&self, x: f64, y: f64, radius: f64) -> Option<P2> {
        if self.is_free_at(x, y) {
            return Some([x, y]);
        }
        self.free_cells_within(x, y, radius)
            .first()
            .map(|&(_, i, j)| self.cell_center(i, j))
    }

    /// 4-connected breadth-first reachability between the cells of two
    /// poses. Poses in occupied cells or off the grid are unreachable.
    pub fn check_path(&self, from: &BasePose, to: &BasePose) -> bool {
        let (Some(s), Some(g)) = (self.cell_of(from.x, from.y), self.cell_of(to.x, to.y)) else {
            return false;
        };
        if self.is_occupied(s.0, s.1) || self.is_occupied(g.0, g.1) {
            return false;
        }
        self.component_of(s)[self.idx(g.0, g.1)]
    }

    /// Flood fill from a free cell; `true` marks cells reachable from it.
    pub fn component_of(&self, start: (usize, usize)) -> Vec<bool> {
        let mut seen = vec![false; self.nx * self.ny];
        if self.is_occupied(start.0, start.1) {
            return seen;
        }
        let mut queue = VecDeque::from([start]);
        seen[self.idx(start.0, start.1)] = true;
        while let Some((i, j)) = queue.pop_front() {
            let mut visit = |ni: usize, nj: usize| {
                let k = self.idx(ni, nj);
                if !seen[k] && !self.occupied[k] {
                    seen[k] = true;
                    queue.push_back((ni, nj));
                }
            };
            if i > 0 {
                visit(i - 1, j);
            }
            if i + 1 < self.nx {
                visit(i + 1, j);
            }
            if j > 0 {
                visit(i, j - 1);
            }
            if j + 1 < self.ny {
                visit(i, j + 1);
            }
        }
        seen
    }

    /// Marks every cell whose square overlaps the box footprint inflated by
    /// `radius`.
    pub fn rasterize_box(&mut self, b: &OrientedBox, radius: f64) {
        let hull = footprint(b);
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &hull {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k] - radius);
                hi[k] = hi[k].max(p[k] + radius);
            }
        }
        let r = self.resolution;
        let i0 = (((lo[0] - self.origin[0]) / r).floor().max(0.0)) as usize;
        let j0 = (((lo[1] - self.origin[1]) / r).floor().max(0.0)) as usize;
        let i1 = (((hi[0] - self.origin[0]) / r).ceil().max(0.0) as usize).min(self.nx);
        let j1 = (((hi[1] - self.origin[1]) / r).ceil().max(0.0) as usize).min(self.ny);
        for j in j0..j1 {
            for i in i0..i1 {
                let x0 = self.origin[0] + i as f64 * r;
                let y0 = self.origin[1] + j as f64 * r;
                let cell = [[x0, y0], [x0 + r, y0], [x0 + r, y0 + r], [x0, y0 + r]];
                if convex_distance(&cell, &hull) < radius - OVERLAP_EPS
                    || (radius <= OVERLAP_EPS && convex_overlap(&cell, &hull) > OVERLAP_EPS)
                {
                    self.set_occupied(i, j);
                }
            }
        }
    }
}

/// Convex hull of the box corners projected onto the floor, counter-clockwise.
fn footprint(b: &OrientedBox) -> Vec<P2> {
    let mut pts: Vec<P2> = b.corners().iter().map(|c| [c.x, c.y]).collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    if pts.len() < 3 {
        return pts;
    }
    let cross =
        |o: &P2, a: &P2, b: &P2| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut lower: Vec<P2> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0
        {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<P2> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0
        {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn edges(poly: &[P2]) -> impl Iterator<Item = (P2, P2)> + '_ {
    (0..poly.len()).map(move |i| (poly[i], poly[(i + 1) % poly.len()]))
}

/// Largest separating gap over the edge normals of both polygons; negative
/// values are the penetration depth.
fn convex_overlap(a: &[P2], b: &[P2]) -> f64 {
    let mut sep = f64::NEG_INFINITY;
    for poly in [a, b] {
        for (p, q) in edges(poly) {
            let n = [q[1] - p[1], p[0] - q[0]];
            let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
            if len < 1e-15 {
                continue;
            }
            let proj = |v: &P2| (v[0] * n[0] + v[1] * n[1]) / len;
            let (amin, amax) = a
                .iter()
                .map(proj)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |m, v| {
                    (m.0.min(v), m.1.max(v))
                });
            let (bmin, bmax) = b
                .iter()
                .map(proj)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |m, v| {
                    (m.0.min(v), m.1.max(v))
                });
            sep = sep.max(bmin - amax).max(amin - bmax);
        }
    }
    -sep
}

fn point_segment_distance(p: &P2, a: &P2, b: &P2) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let l2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if l2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((ap[0] - t * ab[0]).powi(2) + (ap[1] - t * ab[1]).powi(2)).sqrt()
}

/// Euclidean distance between two convex polygons (0 when they overlap).
fn convex_distance(a: &[P2], b: &[P2]) -> f64 {
    if convex_overlap(a, b) >= 0.0 {
        return 0.0;
    }
    let mut d = f64::INFINITY;
    for p in a {
        for (s, e) in edges(b) {
            d = d.min(point_segment_distance(p, &s, &e));
        }
    }
    for p in b {
        for (s, e) in edges(a) {
            d = d.min(point_segment_distance(p, &s, &e));
        }
    }
    d
}

/// Rasterizes the base obstacles and every part at its state in `state`,
/// inflated by `robot_radius`.
pub fn nav_grid(
    scene: &KinematicScene,
    state: &SceneState,
    resolution: f64,
    robot_radius: f64,
) -> OccupancyGrid {
    nav_grid_with(scene, state, resolution, robot_radius, &[])
}

/// As [`nav_grid`], with additional boxes (e.g. a part's swept volume).
pub fn nav_grid_with(
    scene: &KinematicScene,
    state: &SceneState,
    resolution: f64,
    robot_radius: f64,
    extra: &[OrientedBox],
) -> OccupancyGrid {
    let fb = &scene.base.floor_bounds;
    let mut grid = OccupancyGrid::empty(fb.min, fb.max, resolution);
    for o in &scene.base.obstacles {
        grid.rasterize_box(o, robot_radius);
    }
    for p in &scene.parts {
        let theta = p.joint.clamp(state.get_or_zero(&p.id));
        let shape = p.shape.transformed(&p.joint.motion(theta));
        grid.rasterize_box(&shape, robot_radius);
    }
    for b in extra {
        grid.rasterize_box(b, robot_radius);
    }
    grid
}
