//! Constrained Delaunay triangulation of a rectangular workspace with
//! polygon obstacles, plus parity classification of the faces.
//!
//! Points are inserted incrementally (Lawson flips), constraints are
//! recovered by flipping crossing edges, and labels come from a flood fill
//! that toggles inside/outside at each obstacle edge it crosses.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::DecompError;
use crate::geom::{
    incircle, orient2d, segments_cross_properly, segments_intersect, snap_points, Point2, Rect,
    Segment2, Sign, SimplePolygon, GEOM_EPS,
};

const NONE: usize = usize::MAX;

/// A 2D map: rectangular bounds with simple polygon obstacles.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarMap {
    pub bounds: Rect,
    pub obstacles: Vec<SimplePolygon>,
}

impl PlanarMap {
    pub fn new(bounds: Rect, obstacles: Vec<SimplePolygon>) -> Self {
        Self { bounds, obstacles }
    }

    /// Free space test with open obstacles: boundary points are free.
    pub fn is_free(&self, p: Point2) -> bool {
        self.bounds.contains(p) && !self.obstacles.iter().any(|o| o.contains_interior(p, 0.0))
    }
}

/// Triangulation of the workspace rectangle.
///
/// Triangles are counterclockwise. Edge `i` of a triangle joins vertices
/// `i+1` and `i+2` (mod 3), i.e. it is the edge opposite vertex `i`.
#[derive(Debug, Clone)]
pub struct Triangulation {
    pub bounds: Rect,
    pub vertices: Vec<Point2>,
    pub triangles: Vec<[usize; 3]>,
    pub neighbors: Vec<[Option<usize>; 3]>,
    /// Edge lies on an obstacle boundary or on the workspace boundary.
    pub constrained: Vec<[bool; 3]>,
    /// Edge is an obstacle boundary (odd constraint multiplicity).
    pub obstacle_edge: Vec<[bool; 3]>,
    pub free: Vec<bool>,
}

impl Triangulation {
    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn corners(&self, t: usize) -> [Point2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * (b - a).cross(c - a)
    }

    pub fn edge(&self, t: usize, i: usize) -> (usize, usize) {
        let tri = self.triangles[t];
        (tri[(i + 1) % 3], tri[(i + 2) % 3])
    }

    pub fn edge_segment(&self, t: usize, i: usize) -> Segment2 {
        let (a, b) = self.edge(t, i);
        Segment2::new(self.vertices[a], self.vertices[b])
    }

    /// Free triangle indices in increasing order.
    pub fn free_triangles(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.triangles.len()).filter(|&t| self.free[t])
    }

    /// Closed-triangle containment (exact).
    pub fn triangle_contains(&self, t: usize, p: Point2) -> bool {
        let [a, b, c] = self.corners(t);
        orient2d(a, b, p) != Sign::Negative
            && orient2d(b, c, p) != Sign::Negative
            && orient2d(c, a, p) != Sign::Negative
    }

    /// Index of the lowest-numbered free triangle containing `p`
    /// (boundary-inclusive).
    pub fn locate_cell(&self, p: Point2) -> Result<usize, DecompError> {
        if !p.is_finite() || !self.bounds.contains(p) {
            return Err(DecompError::PointOutOfBounds);
        }
        self.free_triangles()
            .find(|&t| self.triangle_contains(t, p))
            .ok_or(DecompError::PointInObstacle)
    }
}

/// Triangulates the free space of `map`.
pub fn triangulate(map: &PlanarMap) -> Result<Triangulation, DecompError> {
    let rings = validate(map)?;
    let bounds = map.bounds;

    // Corners first, then every obstacle vertex, snapped together.
    let mut raw: Vec<Point2> = bounds.corners().to_vec();
    for ring in &rings {
        raw.extend(ring.iter().copied());
    }
    let (mut points, index) = snap_points(&raw, GEOM_EPS);
    points[..4].copy_from_slice(&bounds.corners());

    let mut cdt = Cdt::new(&points);
    let mut order: Vec<usize> = (4..points.len()).collect();
    order.sort_by(|&i, &j| points[i].lex_cmp(&points[j]));
    for v in order {
        if v < 4 {
            continue;
        }
        cdt.insert(v)?;
    }

    // Constraint segments by obstacle, as snapped vertex indices.
    let mut multiplicity: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    let mut offset = 4;
    for (oi, ring) in rings.iter().enumerate() {
        let n = ring.len();
        for k in 0..n {
            let a = index[offset + k];
            let b = index[offset + (k + 1) % n];
            cdt.insert_constraint(a, b, &mut multiplicity)
                .map_err(|_| DecompError::OverlappingObstacles {
                    first: oi,
                    second: oi,
                })?;
        }
        offset += n;
    }
    cdt.restore_delaunay();

    let ntri = cdt.tri.len();
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut obstacle_edge = vec![[false; 3]; ntri];
    for (t, flags) in obstacle_edge.iter_mut().enumerate() {
        for (i, f) in flags.iter_mut().enumerate() {
            let (a, b) = cdt.edge(t, i);
            *f = multiplicity.get(&key(a, b)).is_some_and(|m| m % 2 == 1);
        }
    }

    // Parity flood fill seeded from the outside of the rectangle.
    let mut inside: Vec<Option<bool>> = vec![None; ntri];
    let mut queue = VecDeque::new();
    for t in 0..ntri {
        for i in 0..3 {
            if cdt.nbr[t][i] == NONE && inside[t].is_none() {
                inside[t] = Some(obstacle_edge[t][i]);
                queue.push_back(t);
            }
        }
    }
    while let Some(t) = queue.pop_front() {
        let here = inside[t].unwrap_or(false);
        for i in 0..3 {
            let n = cdt.nbr[t][i];
            if n != NONE && inside[n].is_none() {
                inside[n] = Some(here ^ obstacle_edge[t][i]);
                queue.push_back(n);
            }
        }
    }

    let free = inside.iter().map(|s| !s.unwrap_or(false)).collect();
    let neighbors = cdt
        .nbr
        .iter()
        .map(|n| n.map(|x| (x != NONE).then_some(x)))
        .collect();
    Ok(Triangulation {
        bounds,
        vertices: cdt.pts,
        triangles: cdt.tri,
        neighbors,
        constrained: cdt.con,
        obstacle_edge,
        free,
    })
}

/// Checks obstacles and returns their rings clamped onto the bounds.
pub fn validate(map: &PlanarMap) -> Result<Vec<Vec<Point2>>, DecompError> {
    let bounds = map.bounds;
    if !bounds.is_valid() {
        return Err(DecompError::InvalidBounds);
    }
    let min_area = 1e-12 * bounds.area();
    let mut rings = Vec::with_capacity(map.obstacles.len());
    for (index, poly) in map.obstacles.iter().enumerate() {
        let degenerate = |reason| DecompError::DegenerateObstacle { index, reason };
        if poly.len() < 3 {
            return Err(degenerate("fewer than three vertices"));
        }
        let mut ring = Vec::with_capacity(poly.len());
        for &v in &poly.vertices {
            if !v.is_finite() {
                return Err(degenerate("non-finite vertex"));
            }
            let tol = GEOM_EPS * (1.0 + bounds.diagonal());
            if v.x < bounds.min.x - tol
                || v.x > bounds.max.x + tol
                || v.y < bounds.min.y - tol
                || v.y > bounds.max.y + tol
            {
                return Err(DecompError::ObstacleOutOfBounds { index });
            }
            ring.push(Point2::new(
                v.x.clamp(bounds.min.x, bounds.max.x),
                v.y.clamp(bounds.min.y, bounds.max.y),
            ));
        }
        let n = ring.len();
        for k in 0..n {
            let d = ring[(k + 1) % n] - ring[k];
            if d.x.abs() <= GEOM_EPS && d.y.abs() <= GEOM_EPS {
                return Err(degenerate("repeated consecutive vertex"));
            }
        }
        let p = SimplePolygon::new(ring);
        if p.area() < min_area {
            return Err(degenerate("near-zero area"));
        }
        if !is_simple(&p.vertices) {
            return Err(degenerate("self-intersecting boundary"));
        }
        rings.push(p.vertices);
    }

    // Proper crossings between different obstacles, swept along x.
    let mut edges: Vec<(f64, f64, usize, Segment2)> = Vec::new();
    for (oi, ring) in rings.iter().enumerate() {
        let n = ring.len();
        for k in 0..n {
            let s = Segment2::new(ring[k], ring[(k + 1) % n]);
            edges.push((s.a.x.min(s.b.x), s.a.x.max(s.b.x), oi, s));
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    for i in 0..edges.len() {
        let (_, hi, oi, s) = edges[i];
        for &(lo2, _, oj, t) in &edges[i + 1..] {
            if lo2 > hi {
                break;
            }
            if oi != oj && segments_cross_properly(s, t) {
                return Err(DecompError::OverlappingObstacles {
                    first: oi.min(oj),
                    second: oi.max(oj),
                });
            }
        }
    }
    Ok(rings)
}

/// No two non-adjacent edges touch and no adjacent pair folds back.
fn is_simple(ring: &[Point2]) -> bool {
    let n = ring.len();
    let seg = |k: usize| Segment2::new(ring[k], ring[(k + 1) % n]);
    for i in 0..n {
        let s = seg(i);
        // Adjacent edge folding back onto this one.
        let t = seg((i + 1) % n);
        if orient2d(s.a, s.b, t.b) == Sign::Zero && (s.b - s.a).dot(t.b - t.a) < 0.0 {
            return false;
        }
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_intersect(s, seg(j)) {
                return false;
            }
        }
    }
    true
}

enum Location {
    Inside(usize),
    OnEdge(usize, usize),
    OnVertex,
}

enum FirstCrossing {
    Edge(usize, usize),
    Through(usize),
}

/// Mutable triangulation under construction. Edge `i` is opposite vertex `i`.
struct Cdt {
    pts: Vec<Point2>,
    tri: Vec<[usize; 3]>,
    nbr: Vec<[usize; 3]>,
    con: Vec<[bool; 3]>,
    vtri: Vec<usize>,
    hint: usize,
}

#[derive(Debug)]
struct Crossing;

impl Cdt {
    /// Starts from the rectangle `pts[0..4]` split along its diagonal.
    fn new(pts: &[Point2]) -> Self {
        let mut vtri = vec![NONE; pts.len()];
        vtri[0] = 0;
        vtri[1] = 0;
        vtri[2] = 0;
        vtri[3] = 1;
        Self {
            pts: pts.to_vec(),
            tri: vec![[0, 1, 2], [0, 2, 3]],
            nbr: vec![[NONE, 1, NONE], [NONE, NONE, 0]],
            con: vec![[true, false, true], [true, true, false]],
            vtri,
            hint: 0,
        }
    }

    fn edge(&self, t: usize, i: usize) -> (usize, usize) {
        (self.tri[t][(i + 1) % 3], self.tri[t][(i + 2) % 3])
    }

    fn edge_index(&self, t: usize, a: usize, b: usize) -> Option<usize> {
        (0..3).find(|&i| {
            let (u, v) = self.edge(t, i);
            (u == a && v == b) || (u == b && v == a)
        })
    }

    fn vertex_index(&self, t: usize, v: usize) -> usize {
        self.tri[t].iter().position(|&x| x == v).expect("vertex in triangle")
    }

    /// Local view of a triangle rotated so that global index `k` is first.
    fn rot(&self, t: usize, k: usize) -> ([usize; 3], [usize; 3], [bool; 3]) {
        let r = |a: [usize; 3]| [a[k], a[(k + 1) % 3], a[(k + 2) % 3]];
        let c = self.con[t];
        (r(self.tri[t]), r(self.nbr[t]), [c[k], c[(k + 1) % 3], c[(k + 2) % 3]])
    }

    fn set(&mut self, t: usize, v: [usize; 3], n: [usize; 3], c: [bool; 3]) {
        if t == self.tri.len() {
            self.tri.push(v);
            self.nbr.push(n);
            self.con.push(c);
        } else {
            self.tri[t] = v;
            self.nbr[t] = n;
            self.con[t] = c;
        }
        for x in v {
            self.vtri[x] = t;
        }
    }

    /// In triangle `n`, point the neighbor across edge `(a, b)` at `to`.
    fn fix_back(&mut self, n: usize, a: usize, b: usize, to: usize) {
        if n == NONE {
            return;
        }
        let i = self.edge_index(n, a, b).expect("shared edge");
        self.nbr[n][i] = to;
    }

    fn locate(&mut self, p: Point2) -> Location {
        let mut t = if self.hint < self.tri.len() { self.hint } else { 0 };
        let mut step = 0usize;
        loop {
            let mut moved = false;
            for k in 0..3 {
                let i = (k + step) % 3;
                let (u, v) = self.edge(t, i);
                if orient2d(self.pts[u], self.pts[v], p) == Sign::Negative {
                    let n = self.nbr[t][i];
                    if n != NONE {
                        t = n;
                        moved = true;
                        break;
                    }
                }
            }
            step += 1;
            if moved {
                continue;
            }
            let zeros: Vec<usize> = (0..3)
                .filter(|&i| {
                    let (u, v) = self.edge(t, i);
                    orient2d(self.pts[u], self.pts[v], p) == Sign::Zero
                })
                .collect();
            self.hint = t;
            return match zeros.len() {
                0 => Location::Inside(t),
                1 => Location::OnEdge(t, zeros[0]),
                _ => {
                    // Two zero edges meet at a vertex.
                    Location::OnVertex
                }
            };
        }
    }

    fn insert(&mut self, v: usize) -> Result<(), DecompError> {
        let p = self.pts[v];
        let mut stack = Vec::new();
        match self.locate(p) {
            Location::OnVertex => return Ok(()),
            Location::Inside(t) => {
                let ([a, b, c], [na, nb, nc], [ca, cb, cc]) = self.rot(t, 0);
                let t1 = self.tri.len();
                let t2 = t1 + 1;
                self.set(t, [a, b, v], [t1, t2, nc], [false, false, cc]);
                self.set(t1, [b, c, v], [t2, t, na], [false, false, ca]);
                self.set(t2, [c, a, v], [t, t1, nb], [false, false, cb]);
                self.fix_back(na, b, c, t1);
                self.fix_back(nb, c, a, t2);
                self.vtri[a] = t;
                stack.extend([(t, 2), (t1, 2), (t2, 2)]);
            }
            Location::OnEdge(t, i) => {
                let ([w, u, x], tn, tc) = self.rot(t, i);
                let n = tn[0];
                let t1 = self.tri.len();
                // t = [w,u,v], t1 = [w,v,x]
                if n == NONE {
                    self.set(t, [w, u, v], [NONE, t1, tn[2]], [tc[0], false, tc[2]]);
                    self.set(t1, [w, v, x], [NONE, tn[1], t], [tc[0], tc[1], false]);
                    self.fix_back(tn[1], x, w, t1);
                    stack.extend([(t, 2), (t1, 1)]);
                } else {
                    let j = self.edge_index(n, u, x).expect("shared edge");
                    let ([y, _, _], nn, nc) = self.rot(n, j);
                    // n = [y, x, u] -> n = [y,x,v], n1 = [y,v,u]
                    let n1 = t1 + 1;
                    self.set(t, [w, u, v], [n1, t1, tn[2]], [tc[0], false, tc[2]]);
                    self.set(t1, [w, v, x], [n, tn[1], t], [tc[0], tc[1], false]);
                    self.set(n, [y, x, v], [t1, n1, nn[2]], [nc[0], false, nc[2]]);
                    self.set(n1, [y, v, u], [t, nn[1], n], [nc[0], nc[1], false]);
                    self.fix_back(tn[1], x, w, t1);
                    self.fix_back(nn[1], u, y, n1);
                    stack.extend([(t, 2), (t1, 1), (n, 2), (n1, 1)]);
                }
                self.vtri[w] = t;
                self.vtri[u] = t;
            }
        }
        // Lawson legalization: `v` sits opposite edge `i` of `t`.
        while let Some((t, i)) = stack.pop() {
            let n = self.nbr[t][i];
            if n == NONE || self.con[t][i] {
                continue;
            }
            let (a, b) = self.edge(t, i);
            let j = self.edge_index(n, a, b).expect("shared edge");
            let d = self.tri[n][j];
            let [x, y, z] = self.tri[t];
            if incircle(self.pts[x], self.pts[y], self.pts[z], self.pts[d]) == Sign::Positive {
                let (t0, t1) = self.flip(t, i);
                stack.push((t0, 0));
                stack.push((t1, 0));
            }
        }
        Ok(())
    }

    /// Flips edge `i` of `t`. Afterwards both triangles have the former
    /// opposite vertex of `t` at index 0.
    fn flip(&mut self, t: usize, i: usize) -> (usize, usize) {
        let ([p, q, r], tn, tc) = self.rot(t, i);
        let u = tn[0];
        let j = self.edge_index(u, q, r).expect("shared edge");
        let ([d, _, _], un, uc) = self.rot(u, j);
        self.set(t, [p, q, d], [un[1], u, tn[2]], [uc[1], false, tc[2]]);
        self.set(u, [p, d, r], [un[2], tn[1], t], [uc[2], tc[1], false]);
        self.fix_back(un[1], q, d, t);
        self.fix_back(tn[1], r, p, u);
        self.vtri[p] = t;
        self.vtri[q] = t;
        self.vtri[d] = t;
        self.vtri[r] = u;
        (t, u)
    }

    fn around(&self, v: usize) -> Vec<usize> {
        let start = self.vtri[v];
        let mut out = vec![start];
        let mut t = start;
        loop {
            let k = self.vertex_index(t, v);
            let n = self.nbr[t][(k + 1) % 3];
            if n == NONE {
                break;
            }
            if n == start {
                return out;
            }
            out.push(n);
            t = n;
        }
        t = start;
        loop {
            let k = self.vertex_index(t, v);
            let n = self.nbr[t][(k + 2) % 3];
            if n == NONE {
                break;
            }
            out.push(n);
            t = n;
        }
        out
    }

    fn find_edge(&self, a: usize, b: usize) -> Option<(usize, usize)> {
        self.around(a)
            .into_iter()
            .find_map(|t| self.edge_index(t, a, b).map(|i| (t, i)))
    }

    fn mark_constrained(&mut self, t: usize, i: usize) {
        self.con[t][i] = true;
        let n = self.nbr[t][i];
        if n != NONE {
            let (a, b) = self.edge(t, i);
            let j = self.edge_index(n, a, b).expect("shared edge");
            self.con[n][j] = true;
        }
    }

    fn first_crossing(&self, a: usize, b: usize) -> Option<FirstCrossing> {
        let (pa, pb) = (self.pts[a], self.pts[b]);
        let toward = |x: usize| (self.pts[x] - pa).dot(pb - pa) > 0.0;
        for t in self.around(a) {
            let k = self.vertex_index(t, a);
            let x = self.tri[t][(k + 1) % 3];
            let y = self.tri[t][(k + 2) % 3];
            let ox = orient2d(pa, self.pts[x], pb);
            let oy = orient2d(pa, self.pts[y], pb);
            if ox == Sign::Zero && toward(x) {
                return Some(FirstCrossing::Through(x));
            }
            if oy == Sign::Zero && toward(y) {
                return Some(FirstCrossing::Through(y));
            }
            if ox == Sign::Positive && oy == Sign::Negative {
                return Some(FirstCrossing::Edge(t, k));
            }
        }
        None
    }

    fn insert_constraint(
        &mut self,
        a0: usize,
        b0: usize,
        multiplicity: &mut BTreeMap<(usize, usize), u32>,
    ) -> Result<(), Crossing> {
        let mut work = vec![(a0, b0)];
        'outer: while let Some((a, b)) = work.pop() {
            if a == b {
                continue;
            }
            if let Some((t, i)) = self.find_edge(a, b) {
                self.mark_constrained(t, i);
                *multiplicity.entry((a.min(b), a.max(b))).or_insert(0) += 1;
                continue;
            }
            let (pa, pb) = (self.pts[a], self.pts[b]);
            let (mut t, mut i) = match self.first_crossing(a, b) {
                Some(FirstCrossing::Through(c)) => {
                    work.push((c, b));
                    work.push((a, c));
                    continue;
                }
                Some(FirstCrossing::Edge(t, i)) => (t, i),
                None => return Err(Crossing),
            };
            let mut crossing: VecDeque<(usize, usize)> = VecDeque::new();
            loop {
                if self.con[t][i] {
                    return Err(Crossing);
                }
                let (u, v) = self.edge(t, i);
                crossing.push_back((u, v));
                let n = self.nbr[t][i];
                if n == NONE {
                    return Err(Crossing);
                }
                let j = self.edge_index(n, u, v).expect("shared edge");
                let s = self.tri[n][j];
                if s == b {
                    break;
                }
                let (l, r) = if orient2d(pa, pb, self.pts[u]) == Sign::Positive {
                    (u, v)
                } else {
                    (v, u)
                };
                match orient2d(pa, pb, self.pts[s]) {
                    Sign::Zero => {
                        work.push((s, b));
                        work.push((a, s));
                        continue 'outer;
                    }
                    Sign::Positive => i = self.edge_index(n, s, r).expect("edge"),
                    Sign::Negative => i = self.edge_index(n, l, s).expect("edge"),
                }
                t = n;
            }

            let seg = Segment2::new(pa, pb);
            let mut created = Vec::new();
            let mut stalls = 0usize;
            while let Some((u, v)) = crossing.pop_front() {
                let (t, i) = self.find_edge(u, v).ok_or(Crossing)?;
                let n = self.nbr[t][i];
                let p = self.tri[t][i];
                let j = self.edge_index(n, u, v).ok_or(Crossing)?;
                let d = self.tri[n][j];
                let ou = orient2d(self.pts[p], self.pts[d], self.pts[u]);
                let ov = orient2d(self.pts[p], self.pts[d], self.pts[v]);
                if ou != Sign::Zero && ov != Sign::Zero && ou != ov {
                    self.flip(t, i);
                    stalls = 0;
                    let e = Segment2::new(self.pts[p], self.pts[d]);
                    let touches = p == a || p == b || d == a || d == b;
                    if !touches && segments_cross_properly(seg, e) {
                        crossing.push_back((p, d));
                    } else {
                        created.push((p, d));
                    }
                } else {
                    crossing.push_back((u, v));
                    stalls += 1;
                    if stalls > crossing.len() + 1 {
                        return Err(Crossing);
                    }
                }
            }
            let (t, i) = self.find_edge(a, b).ok_or(Crossing)?;
            self.mark_constrained(t, i);
            *multiplicity.entry((a.min(b), a.max(b))).or_insert(0) += 1;

            // Re-establish the Delaunay property on the new edges.
            let mut swapped = true;
            while swapped {
                swapped = false;
                for e in created.iter_mut() {
                    let (u, v) = *e;
                    if (u == a && v == b) || (u == b && v == a) {
                        continue;
                    }
                    let Some((t, i)) = self.find_edge(u, v) else { continue };
                    if self.con[t][i] || self.nbr[t][i] == NONE {
                        continue;
                    }
                    if self.locally_non_delaunay(t, i) {
                        let p = self.tri[t][i];
                        let n = self.nbr[t][i];
                        let j = self.edge_index(n, u, v).expect("edge");
                        let d = self.tri[n][j];
                        self.flip(t, i);
                        *e = (p, d);
                        swapped = true;
                    }
                }
            }
        }
        Ok(())
    }

    fn locally_non_delaunay(&self, t: usize, i: usize) -> bool {
        let n = self.nbr[t][i];
        let (u, v) = self.edge(t, i);
        let j = self.edge_index(n, u, v).expect("edge");
        let d = self.tri[n][j];
        let [x, y, z] = self.tri[t];
        incircle(self.pts[x], self.pts[y], self.pts[z], self.pts[d]) == Sign::Positive
    }

    /// Flips every unconstrained non-Delaunay edge until none remain.
    fn restore_delaunay(&mut self) {
        loop {
            let mut flipped = false;
            for t in 0..self.tri.len() {
                for i in 0..3 {
                    let n = self.nbr[t][i];
                    if n == NONE || self.con[t][i] {
                        continue;
                    }
                    if self.locally_non_delaunay(t, i) {
                        self.flip(t, i);
                        flipped = true;
                    }
                }
            }
            if !flipped {
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn unit() -> Rect {
        Rect::new(p(0.0, 0.0), p(1.0, 1.0))
    }

    fn square(cx: f64, cy: f64, h: f64) -> SimplePolygon {
        SimplePolygon::rectangle(p(cx - h, cy - h), p(cx + h, cy + h))
    }

    fn free_area(t: &Triangulation) -> f64 {
        t.free_triangles().map(|i| t.area(i)).sum()
    }

    fn check_structure(t: &Triangulation) {
        for (ti, n) in t.neighbors.iter().enumerate() {
            assert!(t.area(ti) > 0.0, "triangle {ti} not counterclockwise");
            for (i, nb) in n.iter().enumerate() {
                if let Some(u) = *nb {
                    let (a, b) = t.edge(ti, i);
                    let back = (0..3).find(|&j| {
                        let (x, y) = t.edge(u, j);
                        (x == b && y == a) || (x == a && y == b)
                    });
                    let j = back.expect("neighbor shares the edge");
                    assert_eq!(t.neighbors[u][j], Some(ti));
                    assert_eq!(t.constrained[u][j], t.constrained[ti][i]);
                } else {
                    assert!(t.constrained[ti][i], "boundary edges are constrained");
                }
            }
        }
        let total: f64 = (0..t.len()).map(|i| t.area(i)).sum();
        assert!((total - t.bounds.area()).abs() <= 1e-9 * t.bounds.area());
    }

    #[test]
    fn empty_rectangle_has_two_free_triangles() {
        let t = triangulate(&PlanarMap::new(unit(), vec![])).unwrap();
        assert_eq!(t.len(), 2);
        assert!(t.free.iter().all(|&f| f));
        check_structure(&t);
    }

    #[test]
    fn centered_hole_area_bookkeeping() {
        let t = triangulate(&PlanarMap::new(unit(), vec![square(0.5, 0.5, 0.2)])).unwrap();
        check_structure(&t);
        assert!((free_area(&t) - (1.0 - 0.16)).abs() <= 1e-9);
        let obstacle = t.len() - t.free_triangles().count();
        assert_eq!(obstacle, 2);
    }

    #[test]
    fn obstacle_touching_boundary_is_classified() {
        // Notch attached to the bottom side of the workspace.
        let notch = SimplePolygon::rectangle(p(0.4, 0.0), p(0.6, 0.3));
        let t = triangulate(&PlanarMap::new(unit(), vec![notch])).unwrap();
        check_structure(&t);
        assert!((free_area(&t) - (1.0 - 0.06)).abs() <= 1e-9);
        assert!(matches!(t.locate_cell(p(0.5, 0.1)), Err(DecompError::PointInObstacle)));
    }

    #[test]
    fn touching_obstacles_share_vertices() {
        let a = SimplePolygon::rectangle(p(0.2, 0.2), p(0.4, 0.4));
        let b = SimplePolygon::rectangle(p(0.4, 0.4), p(0.6, 0.6));
        let c = SimplePolygon::rectangle(p(0.4, 0.2), p(0.6, 0.3));
        let t = triangulate(&PlanarMap::new(unit(), vec![a, b, c])).unwrap();
        check_structure(&t);
        assert!((free_area(&t) - (1.0 - 0.04 - 0.04 - 0.02)).abs() <= 1e-9);
    }

    #[test]
    fn nested_obstacle_is_a_free_island() {
        let outer = square(0.5, 0.5, 0.3);
        let inner = square(0.5, 0.5, 0.1);
        let t = triangulate(&PlanarMap::new(unit(), vec![outer, inner])).unwrap();
        check_structure(&t);
        let expect = 1.0 - 0.36 + 0.04;
        assert!((free_area(&t) - expect).abs() <= 1e-9);
        assert!(t.locate_cell(p(0.5, 0.5)).is_ok());
    }

    #[test]
    fn overlapping_obstacles_rejected() {
        let r = triangulate(&PlanarMap::new(unit(), vec![square(0.4, 0.4, 0.1), square(0.45, 0.45, 0.1)]));
        assert!(matches!(r, Err(DecompError::OverlappingObstacles { first: 0, second: 1 })));
    }

    #[test]
    fn degenerate_obstacles_rejected() {
        let bowtie = SimplePolygon::new(vec![p(0.2, 0.2), p(0.4, 0.4), p(0.4, 0.2), p(0.2, 0.4)]);
        assert!(matches!(
            triangulate(&PlanarMap::new(unit(), vec![bowtie])),
            Err(DecompError::DegenerateObstacle { .. })
        ));
        let sliver = SimplePolygon::new(vec![p(0.2, 0.2), p(0.8, 0.2), p(0.5, 0.2 + 1e-14)]);
        assert!(matches!(
            triangulate(&PlanarMap::new(unit(), vec![sliver])),
            Err(DecompError::DegenerateObstacle { .. })
        ));
        let outside = square(0.95, 0.5, 0.1);
        assert!(matches!(
            triangulate(&PlanarMap::new(unit(), vec![outside])),
            Err(DecompError::ObstacleOutOfBounds { index: 0 })
        ));
    }

    #[test]
    fn locate_cell_examples() {
        let t = triangulate(&PlanarMap::new(unit(), vec![square(0.5, 0.5, 0.2)])).unwrap();
        for i in t.free_triangles() {
            let [a, b, c] = t.corners(i);
            let centroid = p((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0);
            assert_eq!(t.locate_cell(centroid).unwrap(), i);
        }
        // A vertex is shared by several free triangles; lowest index wins.
        let v = p(0.0, 0.0);
        let owners: Vec<usize> = t.free_triangles().filter(|&i| t.triangle_contains(i, v)).collect();
        assert_eq!(t.locate_cell(v).unwrap(), owners[0]);
        assert!(matches!(t.locate_cell(p(0.5, 0.5)), Err(DecompError::PointInObstacle)));
        assert!(matches!(t.locate_cell(p(1.5, 0.5)), Err(DecompError::PointOutOfBounds)));
    }

    #[test]
    fn constrained_edges_cover_obstacle_edges() {
        let tri = SimplePolygon::new(vec![p(0.1, 0.1), p(0.9, 0.15), p(0.5, 0.8)]);
        let t = triangulate(&PlanarMap::new(unit(), vec![tri.clone()])).unwrap();
        check_structure(&t);
        for e in tri.edges() {
            let total: f64 = (0..t.len())
                .flat_map(|ti| (0..3).map(move |i| (ti, i)))
                .filter(|&(ti, i)| t.obstacle_edge[ti][i] && t.free[ti])
                .map(|(ti, i)| t.edge_segment(ti, i))
                .filter(|s| crate::geom::on_segment(s.a, e) && crate::geom::on_segment(s.b, e))
                .map(|s| s.length())
                .sum();
            assert!((total - e.length()).abs() < 1e-12);
        }
    }
}
