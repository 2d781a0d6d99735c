//! Cell adjacency graph with node and edge features and a bound query.

use alloc::vec;
use alloc::vec::Vec;

use crate::decomp2d::{PlanarMap, Triangulation};
use crate::decomp3d::{extract_portals, SlabDecomposition};
use crate::error::GraphError;
use crate::geom::{
    point_line_distance3, point_segment_distance, Aabb3, Face3, Point2, Point3, Rect, Segment2,
};
use crate::math;

/// Node/edge feature widths and packing tags.
pub const NODE_DIM_2D: usize = 11;
pub const EDGE_DIM_2D: usize = 9;
pub const NODE_DIM_3D: usize = 14;
pub const EDGE_DIM_3D: usize = 13;
pub const FEATURE_VERSION_2D: &str = "cellgraph-2d/1";
pub const FEATURE_VERSION_3D: &str = "cellgraph-3d/1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellShape {
    /// Counterclockwise corners; `walls[i]` is set when edge `i` (opposite
    /// corner `i`) is not a portal.
    Triangle { corners: [Point2; 3], walls: [bool; 3] },
    Box(Aabb3),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PortalShape {
    /// Endpoints in lexicographic order.
    Segment(Segment2),
    Face(Face3),
}

impl PortalShape {
    pub fn size(&self) -> f64 {
        match self {
            PortalShape::Segment(s) => s.length(),
            PortalShape::Face(f) => f.area(),
        }
    }

    pub fn midpoint(&self) -> Point3 {
        match self {
            PortalShape::Segment(s) => lift(s.midpoint()),
            PortalShape::Face(f) => f.midpoint(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub shape: CellShape,
    /// Index of this cell in the source decomposition.
    pub source: usize,
    pub centroid: Point3,
    pub measure: f64,
    pub aspect: f64,
    pub clearance: f64,
    pub degree: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Portal {
    /// Cell ids, `cells.0 < cells.1`.
    pub cells: (usize, usize),
    pub shape: PortalShape,
    pub midpoint: Point3,
    pub size: f64,
    pub clearance: f64,
}

impl Portal {
    pub fn other(&self, c: usize) -> usize {
        if self.cells.0 == c {
            self.cells.1
        } else {
            self.cells.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellGraph {
    pub dim: usize,
    pub bounds_min: Point3,
    pub bounds_max: Point3,
    pub diagonal: f64,
    pub cells: Vec<Cell>,
    pub portals: Vec<Portal>,
    /// Per cell, `(neighbor, portal)` sorted by neighbor.
    pub adjacency: Vec<Vec<(usize, usize)>>,
    /// Directed edges: `2p` runs `cells.0 -> cells.1` of portal `p`,
    /// `2p + 1` the reverse.
    pub edges: Vec<(usize, usize)>,
    /// Row-major `cells.len() x node_dim`.
    pub node_features: Vec<f64>,
    /// Row-major `edges.len() x edge_dim`; both directions share a row value.
    pub edge_features: Vec<f64>,
    pub node_dim: usize,
    pub edge_dim: usize,
    pub start: usize,
    pub goal: usize,
    pub qs: Point3,
    pub qg: Point3,
}

pub(crate) fn lift(p: Point2) -> Point3 {
    Point3::new(p.x, p.y, 0.0)
}

pub(crate) fn flat(p: Point3) -> Point2 {
    Point2::new(p.x, p.y)
}

impl CellGraph {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn feature_version(&self) -> &'static str {
        if self.dim == 2 {
            FEATURE_VERSION_2D
        } else {
            FEATURE_VERSION_3D
        }
    }

    pub fn portal_between(&self, a: usize, b: usize) -> Option<usize> {
        let adj = &self.adjacency[a];
        adj.binary_search_by_key(&b, |&(n, _)| n).ok().map(|i| adj[i].1)
    }

    pub fn node_row(&self, i: usize) -> &[f64] {
        &self.node_features[i * self.node_dim..(i + 1) * self.node_dim]
    }

    pub fn edge_row(&self, e: usize) -> &[f64] {
        &self.edge_features[e * self.edge_dim..(e + 1) * self.edge_dim]
    }

    pub fn centroid_distance(&self, p: usize) -> f64 {
        let (a, b) = self.portals[p].cells;
        self.cells[a].centroid.dist(self.cells[b].centroid)
    }

    /// Cells reachable from `from` over portals passing `keep`.
    pub fn reachable(&self, from: usize, keep: impl Fn(usize) -> bool) -> Vec<bool> {
        let mut seen = vec![false; self.cells.len()];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(c) = stack.pop() {
            for &(n, p) in &self.adjacency[c] {
                if !seen[n] && keep(p) {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
        seen
    }

    fn finish(&mut self) {
        let n = self.cells.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut edges = Vec::with_capacity(2 * self.portals.len());
        for (p, portal) in self.portals.iter().enumerate() {
            let (a, b) = portal.cells;
            adjacency[a].push((b, p));
            adjacency[b].push((a, p));
            edges.push((a, b));
            edges.push((b, a));
        }
        for (c, adj) in adjacency.iter_mut().enumerate() {
            adj.sort_unstable();
            self.cells[c].degree = adj.len();
        }
        self.adjacency = adjacency;
        self.edges = edges;
        self.compute_features();
    }

    /// Rebinds the query and recomputes features.
    pub fn with_query(&self, start: usize, goal: usize, qs: Point3, qg: Point3) -> Self {
        let mut g = self.clone();
        g.start = start;
        g.goal = goal;
        g.qs = qs;
        g.qg = qg;
        g.compute_features();
        g
    }

    fn compute_features(&mut self) {
        let d = self.diagonal;
        let lo = self.bounds_min;
        let (qs, qg) = (self.qs, self.qg);
        let dist_s = |p: Point3| p.dist(qs) / d;
        let dist_g = |p: Point3| p.dist(qg) / d;
        let dist_line = |p: Point3| point_line_distance3(p, qs, qg) / d;
        let flag = |b: bool| if b { 1.0 } else { 0.0 };

        let mut x = Vec::with_capacity(self.cells.len() * self.node_dim);
        for (i, c) in self.cells.iter().enumerate() {
            let z = c.centroid;
            let rel = z - lo;
            if self.dim == 2 {
                x.extend_from_slice(&[
                    c.measure / (d * d),
                    rel.x / d,
                    rel.y / d,
                    dist_s(z),
                    dist_g(z),
                    dist_line(z),
                    c.aspect,
                    flag(i == self.start),
                    flag(i == self.goal),
                    c.degree as f64,
                    c.clearance / d,
                ]);
            } else {
                let CellShape::Box(b) = c.shape else { unreachable!() };
                let ext = b.extents();
                let min_ext = ext[0].min(ext[1]).min(ext[2]);
                let max_ext = ext[0].max(ext[1]).max(ext[2]);
                x.extend_from_slice(&[
                    c.measure / (d * d * d),
                    rel.x / d,
                    rel.y / d,
                    rel.z / d,
                    dist_s(z),
                    dist_g(z),
                    dist_line(z),
                    c.aspect,
                    flag(i == self.start),
                    flag(i == self.goal),
                    c.degree as f64,
                    c.clearance / d,
                    min_ext / d,
                    max_ext / d,
                ]);
            }
        }

        let query_angle = if qs == qg { 0.0 } else { math::atan2(qg.y - qs.y, qg.x - qs.x) };
        let mut rows = Vec::with_capacity(self.portals.len());
        for p in &self.portals {
            let m = p.midpoint;
            let rel = m - lo;
            let (a, b) = p.cells;
            let cc = self.cells[a].centroid.dist(self.cells[b].centroid) / d;
            let row: Vec<f64> = match p.shape {
                PortalShape::Segment(s) => {
                    let dir = s.b - s.a;
                    let theta = math::wrap_angle(math::atan2(dir.y, dir.x) - query_angle);
                    vec![
                        p.size / d,
                        rel.x / d,
                        rel.y / d,
                        dist_s(m),
                        dist_g(m),
                        dist_line(m),
                        theta,
                        cc,
                        p.clearance / d,
                    ]
                }
                PortalShape::Face(f) => vec![
                    p.size / (d * d),
                    rel.x / d,
                    rel.y / d,
                    rel.z / d,
                    dist_s(m),
                    dist_g(m),
                    dist_line(m),
                    cc,
                    p.clearance / d,
                    flag(f.axis == 0),
                    flag(f.axis == 1),
                    flag(f.axis == 2),
                    f.min_dimension() / d,
                ],
            };
            rows.push(row);
        }
        let mut e = Vec::with_capacity(2 * rows.len() * self.edge_dim);
        for row in &rows {
            e.extend_from_slice(row);
            e.extend_from_slice(row);
        }
        self.node_features = x;
        self.edge_features = e;
    }
}

/// Distance from `p` to the nearest obstacle edge or workspace side.
pub fn clearance_2d(p: Point2, map: &PlanarMap) -> f64 {
    let mut best = map.bounds.distance_to_boundary(p);
    for o in &map.obstacles {
        for e in o.edges() {
            best = best.min(point_segment_distance(p, e));
        }
    }
    best
}

/// Distance from `p` to the nearest obstacle surface or workspace face.
pub fn clearance_3d(p: Point3, bounds: &Aabb3, obstacles: &[Aabb3]) -> f64 {
    let mut best = bounds.distance_to_boundary(p);
    for o in obstacles {
        best = best.min(o.distance_to_point(p));
    }
    best
}

fn triangle_aspect(c: &[Point2; 3]) -> f64 {
    let l = [c[1].dist(c[2]), c[2].dist(c[0]), c[0].dist(c[1])];
    let max = l[0].max(l[1]).max(l[2]);
    let min = l[0].min(l[1]).min(l[2]);
    max / min
}

fn rect_to_box(r: &Rect) -> (Point3, Point3) {
    (lift(r.min), lift(r.max))
}

/// Builds the graph over the free triangles of `tri` and binds the query.
pub fn build_planar(
    tri: &Triangulation,
    map: &PlanarMap,
    qs: Point2,
    qg: Point2,
) -> Result<CellGraph, GraphError> {
    let start_src = tri.locate_cell(qs).map_err(|_| GraphError::StartInObstacle)?;
    let goal_src = tri.locate_cell(qg).map_err(|_| GraphError::GoalInObstacle)?;
    let mut id = vec![usize::MAX; tri.len()];
    let mut cells = Vec::new();
    for t in tri.free_triangles() {
        id[t] = cells.len();
        let corners = tri.corners(t);
        let mut walls = [true; 3];
        for (i, w) in walls.iter_mut().enumerate() {
            if let Some(n) = tri.neighbors[t][i] {
                *w = tri.constrained[t][i] || !tri.free[n];
            }
        }
        let cen = Point2::new(
            (corners[0].x + corners[1].x + corners[2].x) / 3.0,
            (corners[0].y + corners[1].y + corners[2].y) / 3.0,
        );
        cells.push(Cell {
            shape: CellShape::Triangle { corners, walls },
            source: t,
            centroid: lift(cen),
            measure: tri.area(t),
            aspect: triangle_aspect(&corners),
            clearance: clearance_2d(cen, map),
            degree: 0,
        });
    }
    let mut portals = Vec::new();
    for t in tri.free_triangles() {
        for i in 0..3 {
            let Some(n) = tri.neighbors[t][i] else { continue };
            if n < t || !tri.free[n] || tri.constrained[t][i] {
                continue;
            }
            let seg = tri.edge_segment(t, i).canonical();
            let (a, b) = (id[t].min(id[n]), id[t].max(id[n]));
            portals.push(Portal {
                cells: (a, b),
                shape: PortalShape::Segment(seg),
                midpoint: lift(seg.midpoint()),
                size: seg.length(),
                clearance: clearance_2d(seg.midpoint(), map),
            });
        }
    }
    portals.sort_by_key(|p| p.cells);
    let (bmin, bmax) = rect_to_box(&map.bounds);
    let mut g = CellGraph {
        dim: 2,
        bounds_min: bmin,
        bounds_max: bmax,
        diagonal: map.bounds.diagonal(),
        cells,
        portals,
        adjacency: Vec::new(),
        edges: Vec::new(),
        node_features: Vec::new(),
        edge_features: Vec::new(),
        node_dim: NODE_DIM_2D,
        edge_dim: EDGE_DIM_2D,
        start: id[start_src],
        goal: id[goal_src],
        qs: lift(qs),
        qg: lift(qg),
    };
    g.finish();
    Ok(g)
}

/// Builds the graph over the cells of a slab decomposition.
pub fn build_spatial(d: &SlabDecomposition, qs: Point3, qg: Point3) -> Result<CellGraph, GraphError> {
    let start = d.locate_cell(qs).map_err(|_| GraphError::StartInObstacle)?;
    let goal = d.locate_cell(qg).map_err(|_| GraphError::GoalInObstacle)?;
    let cells = d
        .cells
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let ext = b.extents();
            let c = b.center();
            Cell {
                shape: CellShape::Box(*b),
                source: i,
                centroid: c,
                measure: b.volume(),
                aspect: ext[0].max(ext[1]).max(ext[2]) / ext[0].min(ext[1]).min(ext[2]),
                clearance: clearance_3d(c, &d.bounds, &d.obstacles),
                degree: 0,
            }
        })
        .collect();
    let portals = extract_portals(d)
        .into_iter()
        .map(|p| {
            let m = p.midpoint();
            Portal {
                cells: p.cells,
                shape: PortalShape::Face(p.face),
                midpoint: m,
                size: p.area(),
                clearance: clearance_3d(m, &d.bounds, &d.obstacles),
            }
        })
        .collect();
    let mut g = CellGraph {
        dim: 3,
        bounds_min: d.bounds.min,
        bounds_max: d.bounds.max,
        diagonal: d.bounds.diagonal(),
        cells,
        portals,
        adjacency: Vec::new(),
        edges: Vec::new(),
        node_features: Vec::new(),
        edge_features: Vec::new(),
        node_dim: NODE_DIM_3D,
        edge_dim: EDGE_DIM_3D,
        start,
        goal,
        qs,
        qg,
    };
    g.finish();
    Ok(g)
}
