//! Geometric primitives and predicates shared by the decompositions and
//! the corridor evaluators.
//!
//! Orientation and incircle tests are exact (adaptive precision); nothing in
//! here compares against an epsilon except the explicit snapping helpers.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use crate::math;

/// Snapping / deduplication tolerance. Predicates never use it.
pub const GEOM_EPS: f64 = 1e-12;
/// Absolute tolerance of the convex 1D/2D minimizers.
pub const MIN_TOL: f64 = 1e-9;

/// Sign of a predicate determinant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    #[inline]
    fn of(v: f64) -> Self {
        if v > 0.0 {
            Sign::Positive
        } else if v < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    /// `-1`, `0` or `+1`.
    #[inline]
    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Negative => -1,
            Sign::Zero => 0,
            Sign::Positive => 1,
        }
    }

    #[inline]
    pub fn flip(self) -> Self {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Self) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        math::hypot(self.x, self.y)
    }

    #[inline]
    pub fn dist(self, o: Self) -> f64 {
        (self - o).norm()
    }

    #[inline]
    pub fn lerp(self, o: Self, t: f64) -> Self {
        Self::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Lexicographic (x, then y) comparison.
    pub fn lex_cmp(&self, o: &Self) -> core::cmp::Ordering {
        self.x.total_cmp(&o.x).then(self.y.total_cmp(&o.y))
    }

    fn coord(self) -> robust::Coord<f64> {
        robust::Coord {
            x: self.x,
            y: self.y,
        }
    }
}

impl Add for Point2 {
    type Output = Point2;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    #[inline]
    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn axis(self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    #[inline]
    pub fn with_axis(mut self, i: usize, v: f64) -> Self {
        match i {
            0 => self.x = v,
            1 => self.y = v,
            _ => self.z = v,
        }
        self
    }

    #[inline]
    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn norm(self) -> f64 {
        math::sqrt(self.dot(self))
    }

    #[inline]
    pub fn dist(self, o: Self) -> f64 {
        (self - o).norm()
    }

    #[inline]
    pub fn lerp(self, o: Self, t: f64) -> Self {
        self + (o - self) * t
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Point3 {
    type Output = Point3;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    #[inline]
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment2 {
    pub a: Point2,
    pub b: Point2,
}

impl Segment2 {
    #[inline]
    pub const fn new(a: Point2, b: Point2) -> Self {
        Self { a, b }
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    #[inline]
    pub fn midpoint(&self) -> Point2 {
        self.a.lerp(self.b, 0.5)
    }

    /// Same segment with the lexicographically smaller endpoint first.
    pub fn canonical(self) -> Self {
        if self.b.lex_cmp(&self.a).is_lt() {
            Self::new(self.b, self.a)
        } else {
            self
        }
    }
}

/// Axis-aligned rectangle; the 2D workspace bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub const fn new(min: Point2, max: Point2) -> Self {
        Self { min, max }
    }

    pub fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.min.x < self.max.x && self.min.y < self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diagonal(&self) -> f64 {
        math::hypot(self.width(), self.height())
    }

    /// Boundary-inclusive containment.
    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Corners in counterclockwise order starting at `min`.
    pub fn corners(&self) -> [Point2; 4] {
        [
            self.min,
            Point2::new(self.max.x, self.min.y),
            self.max,
            Point2::new(self.min.x, self.max.y),
        ]
    }

    /// Distance from an interior point to the nearest side.
    pub fn distance_to_boundary(&self, p: Point2) -> f64 {
        let dx = (p.x - self.min.x).min(self.max.x - p.x);
        let dy = (p.y - self.min.y).min(self.max.y - p.y);
        dx.min(dy).max(0.0)
    }
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb3 {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb3 {
    pub const fn new(min: Point3, max: Point3) -> Self {
        Self { min, max }
    }

    pub fn is_valid(&self) -> bool {
        self.min.is_finite()
            && self.max.is_finite()
            && self.min.x < self.max.x
            && self.min.y < self.max.y
            && self.min.z < self.max.z
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.max.axis(axis) - self.min.axis(axis)
    }

    pub fn extents(&self) -> [f64; 3] {
        [self.extent(0), self.extent(1), self.extent(2)]
    }

    pub fn volume(&self) -> f64 {
        self.extent(0) * self.extent(1) * self.extent(2)
    }

    pub fn center(&self) -> Point3 {
        self.min.lerp(self.max, 0.5)
    }

    pub fn diagonal(&self) -> f64 {
        self.min.dist(self.max)
    }

    /// Boundary-inclusive containment.
    pub fn contains(&self, p: Point3) -> bool {
        (0..3).all(|i| p.axis(i) >= self.min.axis(i) && p.axis(i) <= self.max.axis(i))
    }

    /// Strict interior containment with an inward margin.
    pub fn contains_interior(&self, p: Point3, margin: f64) -> bool {
        (0..3).all(|i| p.axis(i) > self.min.axis(i) + margin && p.axis(i) < self.max.axis(i) - margin)
    }

    /// Intersection with another box, if it has positive volume.
    pub fn intersection(&self, o: &Aabb3) -> Option<Aabb3> {
        let b = Aabb3::new(
            Point3::new(self.min.x.max(o.min.x), self.min.y.max(o.min.y), self.min.z.max(o.min.z)),
            Point3::new(self.max.x.min(o.max.x), self.max.y.min(o.max.y), self.max.z.min(o.max.z)),
        );
        b.is_valid().then_some(b)
    }

    /// Euclidean distance from `p` to the closed box (0 inside).
    pub fn distance_to_point(&self, p: Point3) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            let v = p.axis(i);
            let d = if v < self.min.axis(i) {
                self.min.axis(i) - v
            } else if v > self.max.axis(i) {
                v - self.max.axis(i)
            } else {
                0.0
            };
            s += d * d;
        }
        math::sqrt(s)
    }

    /// Distance from an interior point to the nearest face.
    pub fn distance_to_boundary(&self, p: Point3) -> f64 {
        let mut d = f64::INFINITY;
        for i in 0..3 {
            d = d.min(p.axis(i) - self.min.axis(i)).min(self.max.axis(i) - p.axis(i));
        }
        d.max(0.0)
    }
}

/// Axis-aligned rectangle lying in the plane `axis = coord`.
///
/// `lo`/`hi` are bounds along the two remaining axes in increasing axis order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face3 {
    pub axis: usize,
    pub coord: f64,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Face3 {
    /// The two in-plane axes.
    pub fn plane_axes(axis: usize) -> [usize; 2] {
        match axis {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        }
    }

    pub fn in_plane_axes(&self) -> [usize; 2] {
        Self::plane_axes(self.axis)
    }

    pub fn area(&self) -> f64 {
        (self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1])
    }

    pub fn min_dimension(&self) -> f64 {
        (self.hi[0] - self.lo[0]).min(self.hi[1] - self.lo[1])
    }

    /// Point with in-plane coordinates `(u, v)`.
    pub fn point(&self, u: f64, v: f64) -> Point3 {
        let [a, b] = self.in_plane_axes();
        Point3::default()
            .with_axis(self.axis, self.coord)
            .with_axis(a, u)
            .with_axis(b, v)
    }

    pub fn midpoint(&self) -> Point3 {
        self.point(0.5 * (self.lo[0] + self.hi[0]), 0.5 * (self.lo[1] + self.hi[1]))
    }

    /// Clamps in-plane coordinates onto the rectangle.
    pub fn clamp(&self, u: f64, v: f64) -> (f64, f64) {
        (u.clamp(self.lo[0], self.hi[0]), v.clamp(self.lo[1], self.hi[1]))
    }

    pub fn contains_uv(&self, u: f64, v: f64) -> bool {
        u >= self.lo[0] && u <= self.hi[0] && v >= self.lo[1] && v <= self.hi[1]
    }

    /// Corners in order around the rectangle.
    pub fn corners(&self) -> [Point3; 4] {
        [
            self.point(self.lo[0], self.lo[1]),
            self.point(self.hi[0], self.lo[1]),
            self.point(self.hi[0], self.hi[1]),
            self.point(self.lo[0], self.hi[1]),
        ]
    }
}

/// Simple polygon given by its vertex ring (either winding).
#[derive(Debug, Clone, PartialEq)]
pub struct SimplePolygon {
    pub vertices: Vec<Point2>,
}

impl SimplePolygon {
    pub fn new(vertices: Vec<Point2>) -> Self {
        Self { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Axis-aligned rectangle polygon.
    pub fn rectangle(min: Point2, max: Point2) -> Self {
        Self::new(Rect::new(min, max).corners().to_vec())
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment2> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment2::new(self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Shoelace signed area; positive for counterclockwise rings.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut s = 0.0;
        for i in 0..n {
            s += self.vertices[i].cross(self.vertices[(i + 1) % n]);
        }
        0.5 * s
    }

    pub fn area(&self) -> f64 {
        math::abs(self.signed_area())
    }

    /// Even-odd containment; points on the boundary count as inside.
    pub fn contains(&self, p: Point2) -> bool {
        let mut inside = false;
        for e in self.edges() {
            if on_segment(p, e) {
                return true;
            }
            let (a, b) = (e.a, e.b);
            if (a.y > p.y) != (b.y > p.y) {
                let s = orient2d(a, b, p);
                // upward edge: p strictly left crosses; downward: strictly right.
                if (b.y > a.y && s == Sign::Positive) || (b.y < a.y && s == Sign::Negative) {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Distance from `p` to the polygon boundary.
    pub fn boundary_distance(&self, p: Point2) -> f64 {
        self.edges()
            .map(|e| point_segment_distance(p, e))
            .fold(f64::INFINITY, f64::min)
    }

    /// True when `p` lies inside the open polygon, deeper than `margin`.
    pub fn contains_interior(&self, p: Point2, margin: f64) -> bool {
        self.contains(p) && self.boundary_distance(p) > margin
    }

    pub fn bounding_rect(&self) -> Rect {
        let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            min.x = min.x.min(v.x);
            min.y = min.y.min(v.y);
            max.x = max.x.max(v.x);
            max.y = max.y.max(v.y);
        }
        Rect::new(min, max)
    }
}

/// Orientation of `c` relative to the directed line `a -> b`.
/// Positive means counterclockwise.
#[inline]
pub fn orient2d(a: Point2, b: Point2, c: Point2) -> Sign {
    Sign::of(robust::orient2d(a.coord(), b.coord(), c.coord()))
}

/// Positive when `d` lies strictly inside the circumcircle of the
/// counterclockwise triangle `abc`.
#[inline]
pub fn incircle(a: Point2, b: Point2, c: Point2, d: Point2) -> Sign {
    Sign::of(robust::incircle(a.coord(), b.coord(), c.coord(), d.coord()))
}

/// `p` lies on the closed segment `s` (exact).
pub fn on_segment(p: Point2, s: Segment2) -> bool {
    orient2d(s.a, s.b, p) == Sign::Zero
        && p.x >= s.a.x.min(s.b.x)
        && p.x <= s.a.x.max(s.b.x)
        && p.y >= s.a.y.min(s.b.y)
        && p.y <= s.a.y.max(s.b.y)
}

/// Segments cross at a single point interior to both.
pub fn segments_cross_properly(s: Segment2, t: Segment2) -> bool {
    let o1 = orient2d(s.a, s.b, t.a);
    let o2 = orient2d(s.a, s.b, t.b);
    let o3 = orient2d(t.a, t.b, s.a);
    let o4 = orient2d(t.a, t.b, s.b);
    o1 != Sign::Zero && o2 != Sign::Zero && o1 != o2 && o3 != Sign::Zero && o4 != Sign::Zero && o3 != o4
}

/// Closed segments share at least one point.
pub fn segments_intersect(s: Segment2, t: Segment2) -> bool {
    if segments_cross_properly(s, t) {
        return true;
    }
    on_segment(t.a, s) || on_segment(t.b, s) || on_segment(s.a, t) || on_segment(s.b, t)
}

/// Euclidean distance from `p` to the closed segment `s`.
pub fn point_segment_distance(p: Point2, s: Segment2) -> f64 {
    let d = s.b - s.a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return p.dist(s.a);
    }
    let t = ((p - s.a).dot(d) / len2).clamp(0.0, 1.0);
    p.dist(s.a + d * t)
}

/// Closest point of the closed segment `s` to `p`.
pub fn closest_point_on_segment(p: Point2, s: Segment2) -> Point2 {
    let d = s.b - s.a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return s.a;
    }
    let t = ((p - s.a).dot(d) / len2).clamp(0.0, 1.0);
    s.a + d * t
}

/// Distance from `p` to the infinite line through `a`, `b`; falls back to
/// the point distance when `a == b`.
pub fn point_line_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let d = b - a;
    let n = d.norm();
    if n == 0.0 {
        return p.dist(a);
    }
    math::abs(d.cross(p - a)) / n
}

/// 3D version of [`point_line_distance`].
pub fn point_line_distance3(p: Point3, a: Point3, b: Point3) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (p - a).dot(d) / len2;
    p.dist(a + d * t)
}

/// Minimizes a convex function on `[lo, hi]` by golden-section search.
/// Returns `(argmin, min)`.
pub fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    if hi - lo <= tol {
        let m = 0.5 * (lo + hi);
        return (m, f(m));
    }
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iters = 0;
    while hi - lo > tol && iters < 200 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
        iters += 1;
    }
    // Endpoints matter when the minimum sits on the boundary.
    let (fl, fh) = (f(lo), f(hi));
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    if fl < best.1 {
        best = (lo, fl);
    }
    if fh < best.1 {
        best = (hi, fh);
    }
    best
}

fn focal_sum2(x: Point2, qs: Point2, qg: Point2) -> f64 {
    x.dist(qs) + x.dist(qg)
}

fn focal_sum3(x: Point3, qs: Point3, qg: Point3) -> f64 {
    x.dist(qs) + x.dist(qg)
}

/// `min_{x in seg} |x - qs| + |x - qg|`.
pub fn ellipse_min_sum_segment(seg: Segment2, qs: Point2, qg: Point2) -> f64 {
    let len = seg.length();
    if len <= GEOM_EPS {
        return focal_sum2(seg.a, qs, qg);
    }
    // The query segment touching the portal is the global minimum.
    if segments_intersect(seg, Segment2::new(qs, qg)) {
        return qs.dist(qg);
    }
    let tol = (MIN_TOL * 1e-3 / len).max(1e-15);
    golden_min(|t| focal_sum2(seg.a.lerp(seg.b, t), qs, qg), 0.0, 1.0, tol).1
}

/// 3D segment version used on the boundary of a face.
fn ellipse_min_sum_segment3(a: Point3, b: Point3, qs: Point3, qg: Point3) -> f64 {
    let len = a.dist(b);
    if len <= GEOM_EPS {
        return focal_sum3(a, qs, qg);
    }
    let tol = (MIN_TOL * 1e-3 / len).max(1e-15);
    golden_min(|t| focal_sum3(a.lerp(b, t), qs, qg), 0.0, 1.0, tol).1
}

/// `min_{x in face} |x - qs| + |x - qg|` over an axis-aligned rectangle.
///
/// The unconstrained minimizer over the face's plane is found in closed form
/// (reflecting one focus when both lie on the same side); when it falls
/// outside the rectangle, the constrained minimum lies on the boundary and
/// is found by golden-section search along the four edges.
pub fn ellipse_min_sum_face(face: &Face3, qs: Point3, qg: Point3) -> f64 {
    let n = face.axis;
    let [ua, va] = face.in_plane_axes();
    let ds = qs.axis(n) - face.coord;
    let dg = qg.axis(n) - face.coord;
    if ds == 0.0 && dg == 0.0 {
        // Both foci in the plane: the minimizer set is the segment qs-qg.
        if segment_hits_rect_uv(face, (qs.axis(ua), qs.axis(va)), (qg.axis(ua), qg.axis(va))) {
            return qs.dist(qg);
        }
    } else {
        let g = if ds * dg > 0.0 {
            qg.with_axis(n, 2.0 * face.coord - qg.axis(n))
        } else {
            qg
        };
        let dgr = g.axis(n) - face.coord;
        let t = ds / (ds - dgr);
        let p = qs.lerp(g, t);
        if face.contains_uv(p.axis(ua), p.axis(va)) {
            return qs.dist(g);
        }
    }
    let c = face.corners();
    (0..4)
        .map(|i| ellipse_min_sum_segment3(c[i], c[(i + 1) % 4], qs, qg))
        .fold(f64::INFINITY, f64::min)
}

/// Whether the in-plane segment `a-b` meets the face rectangle (Liang-Barsky).
fn segment_hits_rect_uv(face: &Face3, a: (f64, f64), b: (f64, f64)) -> bool {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    let d = (b.0 - a.0, b.1 - a.1);
    let checks = [
        (-d.0, a.0 - face.lo[0]),
        (d.0, face.hi[0] - a.0),
        (-d.1, a.1 - face.lo[1]),
        (d.1, face.hi[1] - a.1),
    ];
    for (p, q) in checks {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    t0 <= t1
}

/// Deduplicates points within `tol` (Chebyshev), returning the unique points
/// and, for each input, its index into the unique list. The first occurrence
/// in input order wins.
pub fn snap_points(points: &[Point2], tol: f64) -> (Vec<Point2>, Vec<usize>) {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[i].lex_cmp(&points[j]).then(i.cmp(&j)));
    let mut rep = alloc::vec![usize::MAX; points.len()];
    // Resolve each point to the earliest input index within tolerance.
    for (k, &i) in order.iter().enumerate() {
        if rep[i] != usize::MAX {
            continue;
        }
        rep[i] = i;
        let p = points[i];
        for &j in &order[k + 1..] {
            let q = points[j];
            if q.x - p.x > tol {
                break;
            }
            if rep[j] == usize::MAX && math::abs(q.y - p.y) <= tol {
                rep[j] = i;
            }
        }
    }
    let mut unique = Vec::new();
    let mut slot = alloc::vec![usize::MAX; points.len()];
    let mut map = alloc::vec![0; points.len()];
    for i in 0..points.len() {
        let r = rep[i];
        if slot[r] == usize::MAX {
            slot[r] = unique.len();
            unique.push(points[r]);
        }
        map[i] = slot[r];
    }
    (unique, map)
}

/// Sorts coordinates and merges values within `tol` of the previous kept one.
pub fn dedup_coords(mut v: Vec<f64>, tol: f64) -> Vec<f64> {
    v.sort_by(|a, b| a.total_cmp(b));
    let mut out: Vec<f64> = Vec::with_capacity(v.len());
    for x in v {
        match out.last() {
            Some(&l) if x - l <= tol => {}
            _ => out.push(x),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn orient2d_examples() {
        assert_eq!(orient2d(p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0)).as_i8(), 1);
        assert_eq!(orient2d(p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)).as_i8(), 0);
        assert_eq!(orient2d(p(0.0, 0.0), p(0.0, 1.0), p(1.0, 0.0)).as_i8(), -1);
    }

    #[test]
    fn orient2d_is_exact_near_degenerate() {
        // Classic failure case for naive evaluation.
        let a = p(0.5, 0.5);
        let b = p(12.0, 12.0);
        let c = p(24.0, 24.0);
        let eps = f64::EPSILON;
        assert_eq!(orient2d(a, b, c), Sign::Zero);
        assert_eq!(orient2d(p(0.5 + eps, 0.5), b, c), Sign::Negative);
    }

    #[test]
    fn point_segment_distance_examples() {
        let s = Segment2::new(p(-1.0, 0.0), p(1.0, 0.0));
        assert_eq!(point_segment_distance(p(0.0, 1.0), s), 1.0);
        assert_eq!(point_segment_distance(p(2.0, 0.0), s), 1.0);
    }

    #[test]
    fn point_segment_distance_short_segment_matches_dense_sampling() {
        let s = Segment2::new(p(0.0, 0.0), p(0.0, 0.001));
        let q = p(3.0, 4.0);
        let n = 1_000_000;
        let brute = (0..=n)
            .map(|i| q.dist(s.a.lerp(s.b, i as f64 / n as f64)))
            .fold(f64::INFINITY, f64::min);
        assert!((point_segment_distance(q, s) - brute).abs() <= 1e-6);
    }

    #[test]
    fn ellipse_min_sum_through_foci_line() {
        let qs = p(0.0, 0.0);
        let qg = p(4.0, 0.0);
        let seg = Segment2::new(p(2.0, -1.0), p(2.0, 1.0));
        assert_eq!(ellipse_min_sum_segment(seg, qs, qg), 4.0);
    }

    #[test]
    fn ellipse_min_sum_degenerate_segment() {
        let qs = p(0.0, 0.0);
        let qg = p(1.0, 0.0);
        let x = p(5.0, 5.0);
        let seg = Segment2::new(x, p(5.0 + 1e-14, 5.0));
        let expect = x.dist(qs) + x.dist(qg);
        assert!((ellipse_min_sum_segment(seg, qs, qg) - expect).abs() < 1e-12);
    }

    #[test]
    fn ellipse_min_sum_face_cases() {
        let face = Face3 {
            axis: 0,
            coord: 0.5,
            lo: [0.4, 0.4],
            hi: [0.6, 0.6],
        };
        let qs = Point3::new(0.0, 0.5, 0.5);
        let qg = Point3::new(1.0, 0.5, 0.5);
        assert!((ellipse_min_sum_face(&face, qs, qg) - 1.0).abs() < 1e-15);
        // Same side: reflection.
        let qg2 = Point3::new(0.0, 0.5, 0.6);
        let v = ellipse_min_sum_face(&face, qs, qg2);
        let refl = qs.dist(Point3::new(1.0, 0.5, 0.6));
        assert!((v - refl).abs() < 1e-12);
    }

    #[test]
    fn polygon_contains_boundary_inclusive() {
        let sq = SimplePolygon::rectangle(p(0.0, 0.0), p(1.0, 1.0));
        assert!(sq.contains(p(0.5, 0.5)));
        assert!(sq.contains(p(1.0, 0.5)));
        assert!(!sq.contains(p(1.0 + 1e-9, 0.5)));
        assert!(!sq.contains_interior(p(1.0, 0.5), 0.0));
        assert!((sq.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn snapping_merges_close_points() {
        let pts = [p(0.0, 0.0), p(1.0, 1.0), p(1e-13, 0.0), p(1.0, 1.0 + 5e-13)];
        let (u, m) = snap_points(&pts, GEOM_EPS);
        assert_eq!(u.len(), 2);
        assert_eq!(m, alloc::vec![0, 1, 0, 1]);
    }
}
