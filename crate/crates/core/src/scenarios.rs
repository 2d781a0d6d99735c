//! Parametric map generators and dynamic obstacle sequences.
//!
//! All maps live in the unit square or unit cube. Every generator keeps its
//! random obstacles pairwise separated and away from the fixed structure, so
//! connectivity is decided by the structure alone (walls with doors, floors
//! with holes), which is connected by construction.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::decomp2d::PlanarMap;
use crate::decomp3d::BoxMap;
use crate::error::{Error, ScenarioError};
use crate::geom::{Aabb3, Point2, Point3, Rect, SimplePolygon};
use crate::math;
use crate::pipeline::{build_graph, Workspace};

/// Door widths of the narrow-door families.
pub const DOOR_WIDTH_RANGE: (f64, f64) = (0.035, 0.05);
/// Floor-hole radii of the layered family, before squaring.
pub const HOLE_RADIUS_RANGE: (f64, f64) = (0.04, 0.05);
/// Inset of auto-placed queries, as a fraction of the extent.
pub const QUERY_INSET: f64 = 0.05;

const WALL_2D: f64 = 0.01;
const WALL_3D: f64 = 0.01;
const CLEAR_2D: f64 = 0.02;
const CLEAR_3D: f64 = 0.03;
const MAX_TRIES: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Forest,
    Labyrinth,
    Bottleneck2d,
    MultiRoom,
    BnOffice3d,
    BnMaze3d,
    BnLayers3d,
    DenseBnOffice3d,
    DenseBnMaze3d,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::Forest,
        Family::Labyrinth,
        Family::Bottleneck2d,
        Family::MultiRoom,
        Family::BnOffice3d,
        Family::BnMaze3d,
        Family::BnLayers3d,
        Family::DenseBnOffice3d,
        Family::DenseBnMaze3d,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Forest => "forest",
            Family::Labyrinth => "labyrinth",
            Family::Bottleneck2d => "bottleneck2d",
            Family::MultiRoom => "multi_room",
            Family::BnOffice3d => "bn_office3d",
            Family::BnMaze3d => "bn_maze3d",
            Family::BnLayers3d => "bn_layers3d",
            Family::DenseBnOffice3d => "dense_bn_office3d",
            Family::DenseBnMaze3d => "dense_bn_maze3d",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.as_str() == s)
    }

    pub fn dim(self) -> usize {
        match self {
            Family::Forest | Family::Labyrinth | Family::Bottleneck2d | Family::MultiRoom => 2,
            _ => 3,
        }
    }

    fn tag(self) -> u64 {
        Self::ALL.iter().position(|&f| f == self).unwrap_or(0) as u64 + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Query {
    /// Opposite corners, inset by [`QUERY_INSET`].
    Auto,
    /// Explicit start and goal; 2D maps ignore `z`.
    Fixed(Point3, Point3),
}

/// Generator input. `None` fields take the family default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSpec {
    pub family: Family,
    pub seed: u64,
    /// Random polygons of the forest family.
    pub obstacles: Option<usize>,
    /// Clutter obstacles added to the structured families.
    pub clutter: Option<usize>,
    /// Fixed door or gap width instead of a sampled one.
    pub door_width: Option<f64>,
    /// Maze cells or rooms per side (2D families).
    pub grid: Option<usize>,
    pub query: Query,
}

impl ScenarioSpec {
    pub fn new(family: Family, seed: u64) -> Self {
        Self { family, seed, obstacles: None, clutter: None, door_width: None, grid: None, query: Query::Auto }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub workspace: Workspace,
    pub start: Point3,
    pub goal: Point3,
    /// Every generated family is solvable by construction.
    pub solvable: bool,
    /// Narrowest door or gap placed by the generator.
    pub min_door: Option<f64>,
}

fn invalid(msg: alloc::string::String) -> ScenarioError {
    ScenarioError::InvalidSpec(msg)
}

fn rng_for(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn auto_query(dim: usize) -> (Point3, Point3) {
    let lo = QUERY_INSET;
    let hi = 1.0 - QUERY_INSET;
    let z = |v: f64| if dim == 3 { v } else { 0.0 };
    (Point3::new(lo, lo, z(lo)), Point3::new(hi, hi, z(hi)))
}

fn sample(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn door_width(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> f64 {
    spec.door_width.unwrap_or_else(|| sample(rng, DOOR_WIDTH_RANGE.0, DOOR_WIDTH_RANGE.1))
}

/// Builds the map for `spec`. Deterministic in `(family, seed, parameters)`.
pub fn generate(spec: &ScenarioSpec) -> Result<Scenario, ScenarioError> {
    if let Some(w) = spec.door_width {
        if !(w > 0.0) || w >= 0.2 {
            return Err(invalid(format!("door width {w} must lie in (0, 0.2)")));
        }
    }
    let dim = spec.family.dim();
    let (start, goal) = match spec.query {
        Query::Auto => auto_query(dim),
        Query::Fixed(a, b) => (a, b),
    };
    let unit = |v: f64| (0.0..=1.0).contains(&v);
    for q in [start, goal] {
        if !(unit(q.x) && unit(q.y) && (dim == 2 || unit(q.z))) {
            return Err(invalid(format!("query point {q:?} is outside the unit workspace")));
        }
    }
    let mut rng = rng_for(spec.seed, spec.family.tag());
    let keep = [start, goal];
    let (workspace, min_door) = match spec.family {
        Family::Forest => (forest(spec, &mut rng, &keep)?, None),
        Family::Labyrinth => (labyrinth(spec, &mut rng)?, None),
        Family::Bottleneck2d => bottleneck2d(spec, &mut rng, &keep)?,
        Family::MultiRoom => multi_room(spec, &mut rng, &keep)?,
        Family::BnOffice3d => office3d(spec, &mut rng, &keep, 30)?,
        Family::DenseBnOffice3d => office3d(spec, &mut rng, &keep, 150)?,
        Family::BnMaze3d => maze3d(spec, &mut rng, &keep, 25)?,
        Family::DenseBnMaze3d => maze3d(spec, &mut rng, &keep, 125)?,
        Family::BnLayers3d => layers3d(spec, &mut rng, &keep)?,
    };
    if !workspace.is_free(start) || !workspace.is_free(goal) {
        return Err(invalid(format!("query lies inside a {} obstacle", spec.family.as_str())));
    }
    Ok(Scenario { spec: *spec, workspace, start, goal, solvable: true, min_door })
}

/// Decomposes the map and checks that the query cells are connected.
pub fn is_solvable(ws: &Workspace, start: Point3, goal: Point3) -> Result<bool, Error> {
    let g = build_graph(ws, start, goal)?;
    Ok(g.reachable(g.start, |_| true)[g.goal])
}

// ---------------------------------------------------------------- 2D

fn unit_rect() -> Rect {
    Rect::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0))
}

fn rect_gap(c: Point2, r: &Rect) -> f64 {
    let dx = (r.min.x - c.x).max(c.x - r.max.x).max(0.0);
    let dy = (r.min.y - c.y).max(c.y - r.max.y).max(0.0);
    math::sqrt(dx * dx + dy * dy)
}

/// Disc-based placement: every obstacle is contained in its disc.
struct Layout2 {
    rects: Vec<Rect>,
    discs: Vec<(Point2, f64)>,
}

impl Layout2 {
    fn new(rects: Vec<Rect>, keep: &[Point3]) -> Self {
        let discs = keep.iter().map(|q| (Point2::new(q.x, q.y), CLEAR_2D)).collect();
        Self { rects, discs }
    }

    fn fits(&self, c: Point2, r: f64, margin: f64) -> bool {
        let edge = r + margin;
        c.x >= edge
            && c.y >= edge
            && c.x <= 1.0 - edge
            && c.y <= 1.0 - edge
            && self.rects.iter().all(|rc| rect_gap(c, rc) > edge)
            && self.discs.iter().all(|&(d, rd)| c.dist(d) > edge + rd)
    }

    /// Places `n` star-shaped polygons with radii in `radius`.
    fn scatter(
        &mut self,
        rng: &mut ChaCha8Rng,
        n: usize,
        radius: (f64, f64),
        out: &mut Vec<SimplePolygon>,
    ) -> Result<(), ScenarioError> {
        for placed in 0..n {
            let mut ok = false;
            for _ in 0..MAX_TRIES {
                let r = sample(rng, radius.0, radius.1);
                let c = Point2::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
                if self.fits(c, r, CLEAR_2D) {
                    out.push(star_polygon(rng, c, r));
                    self.discs.push((c, r));
                    ok = true;
                    break;
                }
            }
            if !ok {
                return Err(invalid(format!("placed only {placed} of {n} obstacles")));
            }
        }
        Ok(())
    }
}

/// Polygon with 3 to 7 vertices at jittered angles inside the disc `(c, r)`.
fn star_polygon(rng: &mut ChaCha8Rng, c: Point2, r: f64) -> SimplePolygon {
    let k = rng.random_range(3..=7usize);
    let step = core::f64::consts::TAU / k as f64;
    let phase = rng.random_range(0.0..step);
    let verts = (0..k)
        .map(|i| {
            let a = phase + step * (i as f64 + rng.random_range(-0.3..0.3));
            let rr = r * rng.random_range(0.6..1.0);
            Point2::new(c.x + rr * math::cos(a), c.y + rr * math::sin(a))
        })
        .collect();
    SimplePolygon::new(verts)
}

fn forest(spec: &ScenarioSpec, rng: &mut ChaCha8Rng, keep: &[Point3]) -> Result<Workspace, ScenarioError> {
    let n = spec.obstacles.unwrap_or(40);
    let mut obstacles = Vec::new();
    Layout2::new(Vec::new(), keep).scatter(rng, n, (0.02, 0.06), &mut obstacles)?;
    Ok(Workspace::Planar(PlanarMap::new(unit_rect(), obstacles)))
}

/// Interior wall of an `m`-grid: from node `(i, j)` one step along x
/// (`horizontal`) or y, with an optional door `(offset, width)` measured from
/// the first node.
#[derive(Debug, Clone, Copy)]
struct GridWall {
    i: usize,
    j: usize,
    horizontal: bool,
    door: Option<(f64, f64)>,
}

/// Posts at wall nodes plus wall bodies between them. Posts and bodies share
/// whole edges and never overlap.
fn grid_walls(m: usize, t: f64, walls: &[GridWall]) -> Vec<Rect> {
    let coord = |i: usize| i as f64 / m as f64;
    let h = t / 2.0;
    let mut nodes = Vec::new();
    let mut out = Vec::new();
    for w in walls {
        let (a, b) = if w.horizontal { ((w.i, w.j), (w.i + 1, w.j)) } else { ((w.i, w.j), (w.i, w.j + 1)) };
        nodes.push(a);
        nodes.push(b);
        let lo = if w.horizontal { coord(a.0) } else { coord(a.1) };
        let hi = if w.horizontal { coord(b.0) } else { coord(b.1) };
        let across = if w.horizontal { coord(a.1) } else { coord(a.0) };
        let mut spans = Vec::new();
        match w.door {
            Some((u, width)) => {
                spans.push((lo + h, lo + u));
                spans.push((lo + u + width, hi - h));
            }
            None => spans.push((lo + h, hi - h)),
        }
        for (s0, s1) in spans {
            if s1 > s0 {
                out.push(if w.horizontal {
                    Rect::new(Point2::new(s0, across - h), Point2::new(s1, across + h))
                } else {
                    Rect::new(Point2::new(across - h, s0), Point2::new(across + h, s1))
                });
            }
        }
    }
    nodes.sort_unstable();
    nodes.dedup();
    for (i, j) in nodes {
        let (x, y) = (coord(i), coord(j));
        out.push(Rect::new(
            Point2::new((x - h).max(0.0), (y - h).max(0.0)),
            Point2::new((x + h).min(1.0), (y + h).min(1.0)),
        ));
    }
    out
}

fn rect_polygons(rects: &[Rect]) -> Vec<SimplePolygon> {
    rects.iter().map(|r| SimplePolygon::rectangle(r.min, r.max)).collect()
}

fn labyrinth(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Result<Workspace, ScenarioError> {
    let m = spec.grid.unwrap_or(8);
    if !(2..=16).contains(&m) {
        return Err(invalid(format!("labyrinth grid {m} must lie in 2..=16")));
    }
    // Depth-first maze: `open_x[i][j]` joins cells (i, j) and (i+1, j).
    let mut open_x = vec![vec![false; m]; m];
    let mut open_y = vec![vec![false; m]; m];
    let mut seen = vec![vec![false; m]; m];
    let mut stack = vec![(0usize, 0usize)];
    seen[0][0] = true;
    while let Some(&(i, j)) = stack.last() {
        let mut nbrs: Vec<(usize, usize)> = Vec::with_capacity(4);
        if i > 0 && !seen[i - 1][j] {
            nbrs.push((i - 1, j));
        }
        if i + 1 < m && !seen[i + 1][j] {
            nbrs.push((i + 1, j));
        }
        if j > 0 && !seen[i][j - 1] {
            nbrs.push((i, j - 1));
        }
        if j + 1 < m && !seen[i][j + 1] {
            nbrs.push((i, j + 1));
        }
        if nbrs.is_empty() {
            stack.pop();
            continue;
        }
        let (a, b) = nbrs[rng.random_range(0..nbrs.len())];
        if a != i {
            open_x[i.min(a)][j] = true;
        } else {
            open_y[i][j.min(b)] = true;
        }
        seen[a][b] = true;
        stack.push((a, b));
    }
    let mut walls = Vec::new();
    for i in 0..m {
        for j in 0..m {
            // A tenth of the remaining walls are knocked out to create loops.
            if i + 1 < m && !open_x[i][j] && rng.random_range(0.0..1.0) >= 0.1 {
                walls.push(GridWall { i: i + 1, j, horizontal: false, door: None });
            }
            if j + 1 < m && !open_y[i][j] && rng.random_range(0.0..1.0) >= 0.1 {
                walls.push(GridWall { i, j: j + 1, horizontal: true, door: None });
            }
        }
    }
    let t = WALL_2D.min(0.2 / m as f64);
    Ok(Workspace::Planar(PlanarMap::new(unit_rect(), rect_polygons(&grid_walls(m, t, &walls)))))
}

fn bottleneck2d(
    spec: &ScenarioSpec,
    rng: &mut ChaCha8Rng,
    keep: &[Point3],
) -> Result<(Workspace, Option<f64>), ScenarioError> {
    let gap = spec.door_width.unwrap_or(0.002);
    let t = 2.0 * WALL_2D;
    let x0 = 0.5 - t / 2.0;
    let x1 = 0.5 + t / 2.0;
    let y0 = sample(rng, 0.2, 0.8 - gap);
    let walls = vec![
        Rect::new(Point2::new(x0, 0.0), Point2::new(x1, y0)),
        Rect::new(Point2::new(x0, y0 + gap), Point2::new(x1, 1.0)),
    ];
    let mut obstacles = rect_polygons(&walls);
    let n = spec.clutter.unwrap_or(100);
    Layout2::new(walls, keep).scatter(rng, n, (0.015, 0.035), &mut obstacles)?;
    Ok((Workspace::Planar(PlanarMap::new(unit_rect(), obstacles)), Some(gap)))
}

/// Door offset along a wall of length `len`, clear of the end posts.
fn door_offset(rng: &mut ChaCha8Rng, len: f64, t: f64, w: f64) -> Result<f64, ScenarioError> {
    let lo = t / 2.0 + CLEAR_2D;
    let hi = len - t / 2.0 - CLEAR_2D - w;
    if hi < lo {
        return Err(invalid(format!("door width {w} does not fit a wall of length {len}")));
    }
    Ok(sample(rng, lo, hi))
}

fn multi_room(
    spec: &ScenarioSpec,
    rng: &mut ChaCha8Rng,
    keep: &[Point3],
) -> Result<(Workspace, Option<f64>), ScenarioError> {
    let m = spec.grid.unwrap_or(3);
    if !(2..=8).contains(&m) {
        return Err(invalid(format!("room grid {m} must lie in 2..=8")));
    }
    let len = 1.0 / m as f64;
    let mut walls = Vec::new();
    let mut narrowest = f64::INFINITY;
    for a in 1..m {
        for b in 0..m {
            for horizontal in [false, true] {
                let w = door_width(spec, rng);
                narrowest = narrowest.min(w);
                let u = door_offset(rng, len, WALL_2D, w)?;
                let (i, j) = if horizontal { (b, a) } else { (a, b) };
                walls.push(GridWall { i, j, horizontal, door: Some((u, w)) });
            }
        }
    }
    let rects = grid_walls(m, WALL_2D, &walls);
    let mut obstacles = rect_polygons(&rects);
    let n = spec.clutter.unwrap_or(12);
    Layout2::new(rects, keep).scatter(rng, n, (0.02, 0.05), &mut obstacles)?;
    Ok((Workspace::Planar(PlanarMap::new(unit_rect(), obstacles)), Some(narrowest)))
}

// ---------------------------------------------------------------- 3D

fn unit_cube() -> Aabb3 {
    Aabb3::new(Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 1.0))
}

fn cuboid(min: [f64; 3], max: [f64; 3]) -> Aabb3 {
    let c = |v: f64| v.clamp(0.0, 1.0);
    Aabb3::new(Point3::new(c(min[0]), c(min[1]), c(min[2])), Point3::new(c(max[0]), c(max[1]), c(max[2])))
}

/// Wall door: offset along the wall, width, height above the floor.
#[derive(Debug, Clone, Copy)]
struct Door {
    at: f64,
    width: f64,
    height: f64,
}

/// Wall in the plane `axis = pos`, spanning `along` on the other horizontal
/// axis and `z` vertically, with one door: two side pieces and a lintel.
fn door_wall(axis: usize, pos: f64, along: (f64, f64), z: (f64, f64), door: Door, out: &mut Vec<Aabb3>) {
    let other = 1 - axis;
    let h = WALL_3D / 2.0;
    let mut push = |a0: f64, a1: f64, z0: f64, z1: f64| {
        if a1 - a0 > 0.0 && z1 - z0 > 0.0 {
            let mut lo = [0.0; 3];
            let mut hi = [0.0; 3];
            lo[axis] = pos - h;
            hi[axis] = pos + h;
            lo[other] = a0;
            hi[other] = a1;
            lo[2] = z0;
            hi[2] = z1;
            out.push(cuboid(lo, hi));
        }
    };
    let d0 = along.0 + door.at;
    let d1 = d0 + door.width;
    push(along.0, d0, z.0, z.1);
    push(d1, along.1, z.0, z.1);
    push(d0, d1, z.0 + door.height, z.1);
}

/// Sampled door for a wall spanning `along`, clear of both ends.
fn sample_door(
    spec: &ScenarioSpec,
    rng: &mut ChaCha8Rng,
    along: (f64, f64),
    height: f64,
    narrowest: &mut f64,
) -> Result<Door, ScenarioError> {
    let width = door_width(spec, rng);
    *narrowest = narrowest.min(width);
    let lo = WALL_3D + CLEAR_2D;
    let hi = along.1 - along.0 - WALL_3D - CLEAR_2D - width;
    if hi < lo {
        return Err(invalid(format!("door width {width} does not fit its wall")));
    }
    Ok(Door { at: sample(rng, lo, hi), width, height })
}

/// Floor slab at height `z` with square holes `(x, y, side)`. Holes must not
/// overlap; the slab is cut into x-columns and each column into y-runs.
fn floor_with_holes(z: f64, holes: &[(f64, f64, f64)], out: &mut Vec<Aabb3>) {
    let h = WALL_3D / 2.0;
    let mut xs = vec![0.0, 1.0];
    for &(x, _, s) in holes {
        xs.push(x);
        xs.push(x + s);
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    // Adjacent columns with the same y-runs are merged.
    let mut columns: Vec<(f64, f64, Vec<(f64, f64)>)> = Vec::new();
    for w in xs.windows(2) {
        let mid = (w[0] + w[1]) / 2.0;
        let mut cuts: Vec<(f64, f64)> =
            holes.iter().filter(|&&(x, _, s)| x < mid && mid < x + s).map(|&(_, y, s)| (y, y + s)).collect();
        cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut runs = Vec::new();
        let mut y = 0.0;
        for (c0, c1) in cuts {
            if c0 > y {
                runs.push((y, c0));
            }
            y = y.max(c1);
        }
        if y < 1.0 {
            runs.push((y, 1.0));
        }
        match columns.last_mut() {
            Some(last) if last.2 == runs && last.1 == w[0] => last.1 = w[1],
            _ => columns.push((w[0], w[1], runs)),
        }
    }
    for (x0, x1, runs) in columns {
        for (y0, y1) in runs {
            out.push(cuboid([x0, y0, z - h], [x1, y1, z + h]));
        }
    }
}

/// One square hole per x-band, clear of the wall lines `walls`.
fn sample_holes(
    rng: &mut ChaCha8Rng,
    n: usize,
    side: impl Fn(&mut ChaCha8Rng) -> f64,
    walls: &[f64],
) -> Result<Vec<(f64, f64, f64)>, ScenarioError> {
    let clear = |v: f64, s: f64| walls.iter().all(|&w| v > w + WALL_3D + CLEAR_2D || v + s < w - WALL_3D - CLEAR_2D);
    let mut holes = Vec::with_capacity(n);
    for k in 0..n {
        let s = side(rng);
        let band = (k as f64 / n as f64, (k + 1) as f64 / n as f64);
        let mut found = None;
        for _ in 0..MAX_TRIES {
            let x = sample(rng, band.0 + CLEAR_2D, band.1 - CLEAR_2D - s);
            let y = sample(rng, CLEAR_2D, 1.0 - CLEAR_2D - s);
            if clear(x, s) && clear(y, s) {
                found = Some((x, y, s));
                break;
            }
        }
        holes.push(found.ok_or_else(|| invalid(format!("no room for floor hole {k}")))?);
    }
    Ok(holes)
}

/// Random boxes kept clear of the structure, of each other and of the query.
fn scatter_boxes(
    rng: &mut ChaCha8Rng,
    n: usize,
    structure: &[Aabb3],
    keep: &[Point3],
    out: &mut Vec<Aabb3>,
) -> Result<(), ScenarioError> {
    let grow = |b: &Aabb3, m: f64| {
        Aabb3::new(
            Point3::new(b.min.x - m, b.min.y - m, b.min.z - m),
            Point3::new(b.max.x + m, b.max.y + m, b.max.z + m),
        )
    };
    let overlaps = |a: &Aabb3, b: &Aabb3| (0..3).all(|i| a.min.axis(i) < b.max.axis(i) && b.min.axis(i) < a.max.axis(i));
    let first = out.len();
    for placed in 0..n {
        let mut ok = false;
        for _ in 0..MAX_TRIES {
            let mut lo = [0.0; 3];
            let mut hi = [0.0; 3];
            for a in 0..3 {
                let e = rng.random_range(0.03..0.08);
                lo[a] = rng.random_range(CLEAR_2D..1.0 - CLEAR_2D - e);
                hi[a] = lo[a] + e;
            }
            let b = cuboid(lo, hi);
            let wide = grow(&b, CLEAR_3D);
            if structure.iter().any(|s| overlaps(&wide, s))
                || out[first..].iter().any(|c| overlaps(&grow(&b, CLEAR_2D), c))
                || keep.iter().any(|&q| b.distance_to_point(q) < 2.0 * CLEAR_3D)
            {
                continue;
            }
            out.push(b);
            ok = true;
            break;
        }
        if !ok {
            return Err(invalid(format!("placed only {placed} of {n} clutter boxes")));
        }
    }
    Ok(())
}

fn finish_3d(
    rng: &mut ChaCha8Rng,
    mut boxes: Vec<Aabb3>,
    clutter: usize,
    keep: &[Point3],
) -> Result<Workspace, ScenarioError> {
    let structure = boxes.clone();
    scatter_boxes(rng, clutter, &structure, keep, &mut boxes)?;
    Ok(Workspace::Spatial(BoxMap::new(unit_cube(), boxes)))
}

/// Rooms on a regular `m x m` grid for every level, one door per wall.
fn room_grid(
    spec: &ScenarioSpec,
    rng: &mut ChaCha8Rng,
    m: usize,
    levels: &[(f64, f64)],
    door_height: f64,
    narrowest: &mut f64,
    out: &mut Vec<Aabb3>,
) -> Result<(), ScenarioError> {
    let h = WALL_3D / 2.0;
    let at = |i: usize| i as f64 / m as f64;
    for &z in levels {
        for axis in 0..2 {
            for line in 1..m {
                for seg in 0..m {
                    let along = ((at(seg) - h).max(0.0), (at(seg + 1) + h).min(1.0));
                    let door = sample_door(spec, rng, along, door_height, narrowest)?;
                    door_wall(axis, at(line), along, z, door, out);
                }
            }
        }
    }
    Ok(())
}

fn office3d(
    spec: &ScenarioSpec,
    rng: &mut ChaCha8Rng,
    keep: &[Point3],
    default_clutter: usize,
) -> Result<(Workspace, Option<f64>), ScenarioError> {
    let h = WALL_3D / 2.0;
    let levels = [(0.0, 0.5 - h), (0.5 + h, 1.0)];
    let mut narrowest = f64::INFINITY;
    let mut boxes = Vec::new();
    room_grid(spec, rng, 4, &levels, 0.2, &mut narrowest, &mut boxes)?;
    let n = rng.random_range(2..=5usize);
    let holes = sample_holes(rng, n, |r| door_width(spec, r), &[0.25, 0.5, 0.75])?;
    for &(_, _, s) in &holes {
        narrowest = narrowest.min(s);
    }
    floor_with_holes(0.5, &holes, &mut boxes);
    let ws = finish_3d(rng, boxes, spec.clutter.unwrap_or(default_clutter), keep)?;
    Ok((ws, Some(narrowest)))
}

/// Recursive division of `[x0,x1] x [y0,y1]`; each wall gets one door.
#[allow(clippy::too_many_arguments)]
fn divide(
    spec: &ScenarioSpec,
    rng: &mut ChaCha8Rng,
    region: (f64, f64, f64, f64),
    z: (f64, f64),
    min_room: f64,
    narrowest: &mut f64,
    out: &mut Vec<Aabb3>,
) -> Result<(), ScenarioError> {
    let (x0, x1, y0, y1) = region;
    let can_x = x1 - x0 >= 2.0 * min_room;
    let can_y = y1 - y0 >= 2.0 * min_room;
    if !can_x && !can_y {
        return Ok(());
    }
    let split_x = if can_x && can_y { x1 - x0 > y1 - y0 || (x1 - x0 == y1 - y0 && rng.random_bool(0.5)) } else { can_x };
    let h = WALL_3D / 2.0;
    if split_x {
        let c = rng.random_range(x0 + min_room..x1 - min_room);
        let along = ((y0 - h).max(0.0), (y1 + h).min(1.0));
        let door = sample_door(spec, rng, along, 0.2, narrowest)?;
        door_wall(0, c, along, z, door, out);
        divide(spec, rng, (x0, c, y0, y1), z, min_room, narrowest, out)?;
        divide(spec, rng, (c, x1, y0, y1), z, min_room, narrowest, out)
    } else {
        let c = rng.random_range(y0 + min_room..y1 - min_room);
        let along = ((x0 - h).max(0.0), (x1 + h).min(1.0));
        let door = sample_door(spec, rng, along, 0.2, narrowest)?;
        door_wall(1, c, along, z, door, out);
        divide(spec, rng, (x0, x1, y0, c), z, min_room, narrowest, out)?;
        divide(spec, rng, (x0, x1, c, y1), z, min_room, narrowest, out)
    }
}

fn maze3d(
    spec: &ScenarioSpec,
    rng: &mut ChaCha8Rng,
    keep: &[Point3],
    default_clutter: usize,
) -> Result<(Workspace, Option<f64>), ScenarioError> {
    let h = WALL_3D / 2.0;
    let mut narrowest = f64::INFINITY;
    let mut boxes = Vec::new();
    for z in [(0.0, 0.5 - h), (0.5 + h, 1.0)] {
        divide(spec, rng, (0.0, 1.0, 0.0, 1.0), z, 0.165, &mut narrowest, &mut boxes)?;
    }
    // Hole positions avoid every wall of both levels.
    let n = rng.random_range(1..=3usize);
    let mut holes = Vec::new();
    for _ in 0..MAX_TRIES {
        let cand = sample_holes(rng, n, |r| door_width(spec, r), &[])?;
        let clear = cand.iter().all(|&(x, y, s)| {
            let hole = cuboid([x - CLEAR_2D, y - CLEAR_2D, 0.0], [x + s + CLEAR_2D, y + s + CLEAR_2D, 1.0]);
            boxes.iter().all(|b| hole.intersection(b).is_none())
        });
        if clear {
            holes = cand;
            break;
        }
    }
    if holes.is_empty() {
        return Err(invalid(format!("no room for {n} floor holes")));
    }
    for &(_, _, s) in &holes {
        narrowest = narrowest.min(s);
    }
    floor_with_holes(0.5, &holes, &mut boxes);
    let ws = finish_3d(rng, boxes, spec.clutter.unwrap_or(default_clutter), keep)?;
    Ok((ws, Some(narrowest)))
}

fn layers3d(
    spec: &ScenarioSpec,
    rng: &mut ChaCha8Rng,
    keep: &[Point3],
) -> Result<(Workspace, Option<f64>), ScenarioError> {
    let h = WALL_3D / 2.0;
    let third = 1.0 / 3.0;
    let levels = [(0.0, third - h), (third + h, 2.0 * third - h), (2.0 * third + h, 1.0)];
    let mut narrowest = f64::INFINITY;
    let mut boxes = Vec::new();
    room_grid(spec, rng, 3, &levels, 0.15, &mut narrowest, &mut boxes)?;
    // Round holes of radius r are replaced by squares of equal area.
    let side = |r: &mut ChaCha8Rng| {
        sample(r, HOLE_RADIUS_RANGE.0, HOLE_RADIUS_RANGE.1) * math::sqrt(core::f64::consts::PI)
    };
    for z in [third, 2.0 * third] {
        let holes = sample_holes(rng, 3, side, &[third, 2.0 * third])?;
        for &(_, _, s) in &holes {
            narrowest = narrowest.min(s);
        }
        floor_with_holes(z, &holes, &mut boxes);
    }
    let ws = finish_3d(rng, boxes, spec.clutter.unwrap_or(30), keep)?;
    Ok((ws, Some(narrowest)))
}

// ---------------------------------------------------------------- dynamic

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ObstacleKind {
    Static,
    Moving,
    Toggling,
}

impl ObstacleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ObstacleKind::Static => "static",
            ObstacleKind::Moving => "moving",
            ObstacleKind::Toggling => "toggling",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicSpec {
    pub seed: u64,
    pub steps: usize,
    /// Obstacle population; fractions 50/30/20 static/moving/toggling.
    pub obstacles: usize,
    /// Place the population inside a multi-room layout.
    pub rooms: bool,
}

impl DynamicSpec {
    pub fn new(seed: u64) -> Self {
        Self { seed, steps: 10, obstacles: 30, rooms: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicScenario {
    pub spec: DynamicSpec,
    /// Kind of each population member (walls excluded).
    pub kinds: Vec<ObstacleKind>,
    /// Fixed walls present at every step.
    pub walls: Vec<SimplePolygon>,
    /// Full map at each step: walls followed by present obstacles.
    pub steps: Vec<PlanarMap>,
    /// Population members present at each step.
    pub present: Vec<Vec<usize>>,
    pub start: Point3,
    pub goal: Point3,
}

impl DynamicScenario {
    /// Declared per-step obstacle counts, walls included.
    pub fn count_bounds(&self) -> (usize, usize) {
        let toggling = self.kinds.iter().filter(|&&k| k == ObstacleKind::Toggling).count();
        let n = self.walls.len() + self.kinds.len();
        (n - toggling, n)
    }
}

/// Kind counts for a population of `n`.
pub fn kind_counts(n: usize) -> (usize, usize, usize) {
    let fixed = math::round(0.5 * n as f64) as usize;
    let moving = (math::round(0.3 * n as f64) as usize).min(n - fixed);
    (fixed, moving, n - fixed - moving)
}

struct Mover {
    center: Point2,
    radius: f64,
    offsets: Vec<Point2>,
    velocity: Point2,
    kind: ObstacleKind,
    phase: usize,
}

impl Mover {
    fn polygon(&self) -> SimplePolygon {
        SimplePolygon::new(self.offsets.iter().map(|&o| self.center + o).collect())
    }
}

/// Static, moving and toggling obstacles replayed over `spec.steps` steps.
/// Moving obstacles bounce off the bounds and reverse on contact, so
/// obstacles never overlap.
pub fn generate_dynamic(spec: &DynamicSpec) -> Result<DynamicScenario, ScenarioError> {
    if spec.steps == 0 {
        return Err(invalid(format!("dynamic scenario needs at least one step")));
    }
    if spec.obstacles > 200 {
        return Err(invalid(format!("{} obstacles exceed the limit of 200", spec.obstacles)));
    }
    let mut rng = rng_for(spec.seed, 0xd1);
    let (start, goal) = auto_query(2);
    let keep = [start, goal];
    let (rects, walls) = if spec.rooms {
        let mut walls = Vec::new();
        let mut narrowest = f64::INFINITY;
        for a in 1..3 {
            for b in 0..3 {
                for horizontal in [false, true] {
                    let w = sample(&mut rng, 0.06, 0.1);
                    narrowest = narrowest.min(w);
                    let u = door_offset(&mut rng, 1.0 / 3.0, WALL_2D, w)?;
                    let (i, j) = if horizontal { (b, a) } else { (a, b) };
                    walls.push(GridWall { i, j, horizontal, door: Some((u, w)) });
                }
            }
        }
        let rects = grid_walls(3, WALL_2D, &walls);
        let polys = rect_polygons(&rects);
        (rects, polys)
    } else {
        (Vec::new(), Vec::new())
    };
    let mut layout = Layout2::new(rects, &keep);
    let (fixed, moving, _) = kind_counts(spec.obstacles);
    let mut movers = Vec::with_capacity(spec.obstacles);
    for idx in 0..spec.obstacles {
        let kind = if idx < fixed {
            ObstacleKind::Static
        } else if idx < fixed + moving {
            ObstacleKind::Moving
        } else {
            ObstacleKind::Toggling
        };
        let mut shape = Vec::new();
        layout.scatter(&mut rng, 1, (0.015, 0.035), &mut shape)?;
        let &(center, radius) = layout.discs.last().expect("scatter pushed a disc");
        let offsets = shape[0].vertices.iter().map(|&v| v - center).collect();
        let velocity = if kind == ObstacleKind::Moving {
            let a = rng.random_range(0.0..core::f64::consts::TAU);
            let s = rng.random_range(0.02..0.05);
            Point2::new(s * math::cos(a), s * math::sin(a))
        } else {
            Point2::new(0.0, 0.0)
        };
        let phase = rng.random_range(0..2usize);
        movers.push(Mover { center, radius, offsets, velocity, kind, phase });
    }
    // Discs of the query keep-outs stay; the population discs are tracked in `movers`.
    layout.discs.truncate(keep.len());

    let mut steps = Vec::with_capacity(spec.steps);
    let mut present = Vec::with_capacity(spec.steps);
    for t in 0..spec.steps {
        if t > 0 {
            for i in 0..movers.len() {
                if movers[i].kind != ObstacleKind::Moving {
                    continue;
                }
                let (r, v) = (movers[i].radius, movers[i].velocity);
                let edge = r + CLEAR_2D;
                let mut next = movers[i].center + v;
                let mut vel = v;
                if next.x < edge || next.x > 1.0 - edge {
                    vel.x = -vel.x;
                    next.x = movers[i].center.x + vel.x;
                }
                if next.y < edge || next.y > 1.0 - edge {
                    vel.y = -vel.y;
                    next.y = movers[i].center.y + vel.y;
                }
                let blocked = !layout.fits(next, r, CLEAR_2D)
                    || movers
                        .iter()
                        .enumerate()
                        .any(|(j, o)| j != i && next.dist(o.center) <= r + o.radius + CLEAR_2D);
                if blocked {
                    movers[i].velocity = Point2::new(-vel.x, -vel.y);
                } else {
                    movers[i].center = next;
                    movers[i].velocity = vel;
                }
            }
        }
        let ids: Vec<usize> = (0..movers.len())
            .filter(|&i| movers[i].kind != ObstacleKind::Toggling || (t + movers[i].phase) % 2 == 0)
            .collect();
        let mut obstacles = walls.clone();
        obstacles.extend(ids.iter().map(|&i| movers[i].polygon()));
        steps.push(PlanarMap::new(unit_rect(), obstacles));
        present.push(ids);
    }
    Ok(DynamicScenario {
        spec: *spec,
        kinds: movers.iter().map(|m| m.kind).collect(),
        walls,
        steps,
        present,
        start,
        goal,
    })
}
