//! Slab decomposition of a box workspace with axis-aligned box obstacles.
//!
//! Every obstacle face coordinate induces a splitting plane. Grid cells whose
//! centers fall inside an obstacle are dropped and the rest are merged
//! greedily into larger boxes, one axis at a time until nothing changes.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::DecompError;
use crate::geom::{dedup_coords, Aabb3, Face3, Point3, GEOM_EPS};

/// A 3D map: box workspace with box obstacles (union semantics).
#[derive(Debug, Clone, PartialEq)]
pub struct BoxMap {
    pub bounds: Aabb3,
    pub obstacles: Vec<Aabb3>,
}

impl BoxMap {
    pub fn new(bounds: Aabb3, obstacles: Vec<Aabb3>) -> Self {
        Self { bounds, obstacles }
    }

    /// Obstacles are open sets: boundary points are free.
    pub fn is_free(&self, p: Point3) -> bool {
        self.bounds.contains(p) && !self.obstacles.iter().any(|o| o.contains_interior(p, 0.0))
    }
}

/// Box cell in plane-index space: `lo[a]..hi[a]` indexes `planes[a]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct GridBox {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

#[derive(Debug, Clone)]
pub struct SlabDecomposition {
    pub bounds: Aabb3,
    /// Obstacles after clipping to the bounds.
    pub obstacles: Vec<Aabb3>,
    pub planes: [Vec<f64>; 3],
    pub grid_cells: Vec<GridBox>,
    pub cells: Vec<Aabb3>,
}

/// Shared face between two cells, `cells.0 < cells.1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacePortal {
    pub cells: (usize, usize),
    pub face: Face3,
}

impl FacePortal {
    pub fn area(&self) -> f64 {
        self.face.area()
    }

    pub fn midpoint(&self) -> Point3 {
        self.face.midpoint()
    }
}

impl SlabDecomposition {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn free_volume(&self) -> f64 {
        self.cells.iter().map(Aabb3::volume).sum()
    }

    /// Lowest-index cell containing `p` (boundary-inclusive).
    pub fn locate_cell(&self, p: Point3) -> Result<usize, DecompError> {
        if !p.is_finite() || !self.bounds.contains(p) {
            return Err(DecompError::PointOutOfBounds);
        }
        self.cells
            .iter()
            .position(|c| c.contains(p))
            .ok_or(DecompError::PointInObstacle)
    }

    fn to_box(&self, g: &GridBox) -> Aabb3 {
        let p = &self.planes;
        Aabb3::new(
            Point3::new(p[0][g.lo[0]], p[1][g.lo[1]], p[2][g.lo[2]]),
            Point3::new(p[0][g.hi[0]], p[1][g.hi[1]], p[2][g.hi[2]]),
        )
    }
}

/// Validates and clips obstacles to the bounds.
pub fn clip_obstacles(map: &BoxMap) -> Result<Vec<Aabb3>, DecompError> {
    if !map.bounds.is_valid() {
        return Err(DecompError::InvalidBounds);
    }
    let mut out = Vec::with_capacity(map.obstacles.len());
    for (index, o) in map.obstacles.iter().enumerate() {
        if !o.min.is_finite() || !o.max.is_finite() {
            return Err(DecompError::DegenerateObstacle { index, reason: "non-finite corner" });
        }
        if !o.is_valid() {
            return Err(DecompError::DegenerateObstacle { index, reason: "empty box" });
        }
        match o.intersection(&map.bounds) {
            Some(c) if c.is_valid() => out.push(c),
            _ => return Err(DecompError::ObstacleOutOfBounds { index }),
        }
    }
    Ok(out)
}

/// Splitting planes and the free unmerged grid.
pub fn slab_grid(map: &BoxMap) -> Result<([Vec<f64>; 3], Vec<GridBox>, Vec<Aabb3>), DecompError> {
    let obstacles = clip_obstacles(map)?;
    let b = map.bounds;
    let planes: [Vec<f64>; 3] = core::array::from_fn(|a| {
        let mut v = vec![b.min.axis(a), b.max.axis(a)];
        for o in &obstacles {
            v.push(o.min.axis(a));
            v.push(o.max.axis(a));
        }
        let mut v = dedup_coords(v, GEOM_EPS);
        // Keep the exact bounds as the outermost planes.
        let n = v.len();
        v[0] = b.min.axis(a);
        v[n - 1] = b.max.axis(a);
        v
    });
    let n = [planes[0].len() - 1, planes[1].len() - 1, planes[2].len() - 1];
    let at = |i: usize, j: usize, k: usize| (k * n[1] + j) * n[0] + i;
    let mut blocked = vec![false; n[0] * n[1] * n[2]];
    for o in &obstacles {
        let r: [(usize, usize); 3] = core::array::from_fn(|a| {
            (nearest(&planes[a], o.min.axis(a)), nearest(&planes[a], o.max.axis(a)))
        });
        for k in r[2].0..r[2].1 {
            for j in r[1].0..r[1].1 {
                for i in r[0].0..r[0].1 {
                    blocked[at(i, j, k)] = true;
                }
            }
        }
    }
    // Runs along x are the first merge pass; emit them directly.
    let mut cells = Vec::new();
    for k in 0..n[2] {
        for j in 0..n[1] {
            let mut i = 0;
            while i < n[0] {
                if blocked[at(i, j, k)] {
                    i += 1;
                    continue;
                }
                let start = i;
                while i < n[0] && !blocked[at(i, j, k)] {
                    i += 1;
                }
                cells.push(GridBox { lo: [start, j, k], hi: [i, j + 1, k + 1] });
            }
        }
    }
    Ok((planes, cells, obstacles))
}

/// Unit grid cells (one per free grid voxel), without any merging.
pub fn unmerged_cells(map: &BoxMap) -> Result<Vec<GridBox>, DecompError> {
    let (_, runs, _) = slab_grid(map)?;
    let mut out = Vec::new();
    for r in runs {
        for i in r.lo[0]..r.hi[0] {
            out.push(GridBox { lo: [i, r.lo[1], r.lo[2]], hi: [i + 1, r.hi[1], r.hi[2]] });
        }
    }
    Ok(out)
}

fn nearest(planes: &[f64], x: f64) -> usize {
    let i = planes.partition_point(|&p| p < x);
    if i == planes.len() || (i > 0 && x - planes[i - 1] <= planes[i] - x) {
        i - 1
    } else {
        i
    }
}

/// One merge pass along `axis`; returns true if anything merged.
fn merge_axis(cells: &mut Vec<GridBox>, axis: usize) -> bool {
    let [u, v] = Face3::plane_axes(axis);
    cells.sort_by_key(|c| (c.lo[u], c.hi[u], c.lo[v], c.hi[v], c.lo[axis]));
    let mut out: Vec<GridBox> = Vec::with_capacity(cells.len());
    let mut merged = false;
    for &c in cells.iter() {
        if let Some(last) = out.last_mut() {
            let same = last.lo[u] == c.lo[u]
                && last.hi[u] == c.hi[u]
                && last.lo[v] == c.lo[v]
                && last.hi[v] == c.hi[v];
            if same && last.hi[axis] == c.lo[axis] {
                last.hi[axis] = c.hi[axis];
                merged = true;
                continue;
            }
        }
        out.push(c);
    }
    *cells = out;
    merged
}

/// Full decomposition with merged cells in deterministic order.
pub fn slab_decompose(map: &BoxMap) -> Result<SlabDecomposition, DecompError> {
    let (planes, mut grid, obstacles) = slab_grid(map)?;
    if grid.is_empty() {
        return Err(DecompError::EmptyFreeSpace);
    }
    // x runs are already maximal; continue with y, z, x, ... to a fixpoint.
    let mut quiet = 0;
    let mut axis = 1;
    while quiet < 3 {
        if merge_axis(&mut grid, axis) {
            quiet = 1;
        } else {
            quiet += 1;
        }
        axis = (axis + 1) % 3;
    }
    grid.sort_by_key(|g| (g.lo[2], g.lo[1], g.lo[0], g.hi[2], g.hi[1], g.hi[0]));
    let mut d = SlabDecomposition {
        bounds: map.bounds,
        obstacles,
        planes,
        grid_cells: grid,
        cells: Vec::new(),
    };
    d.cells = d.grid_cells.iter().map(|g| d.to_box(g)).collect();
    Ok(d)
}

/// Portals between cells of a decomposition, sorted by cell pair.
pub fn extract_portals(d: &SlabDecomposition) -> Vec<FacePortal> {
    portals_for(&d.planes, &d.grid_cells, &d.bounds)
}

/// Portals between arbitrary grid boxes over the given planes.
pub fn portals_for(planes: &[Vec<f64>; 3], cells: &[GridBox], bounds: &Aabb3) -> Vec<FacePortal> {
    let mut out = Vec::new();
    for axis in 0..3 {
        let [u, v] = Face3::plane_axes(axis);
        let min_area = 1e-12 * bounds.extent(u) * bounds.extent(v);
        let np = planes[axis].len();
        let mut below: Vec<Vec<usize>> = vec![Vec::new(); np];
        let mut above: Vec<Vec<usize>> = vec![Vec::new(); np];
        for (i, c) in cells.iter().enumerate() {
            below[c.hi[axis]].push(i);
            above[c.lo[axis]].push(i);
        }
        for p in 0..np {
            for &i in &below[p] {
                for &j in &above[p] {
                    let (a, b) = (&cells[i], &cells[j]);
                    let lu = a.lo[u].max(b.lo[u]);
                    let hu = a.hi[u].min(b.hi[u]);
                    let lv = a.lo[v].max(b.lo[v]);
                    let hv = a.hi[v].min(b.hi[v]);
                    if lu >= hu || lv >= hv {
                        continue;
                    }
                    let face = Face3 {
                        axis,
                        coord: planes[axis][p],
                        lo: [planes[u][lu], planes[v][lv]],
                        hi: [planes[u][hu], planes[v][hv]],
                    };
                    if face.area() < min_area {
                        continue;
                    }
                    out.push(FacePortal { cells: (i.min(j), i.max(j)), face });
                }
            }
        }
    }
    out.sort_by(|a, b| a.cells.cmp(&b.cells).then(a.face.axis.cmp(&b.face.axis)));
    out
}
