//! Dense collision checking of returned paths, independent of the planner.

use crate::decomp2d::PlanarMap;
use crate::decomp3d::BoxMap;
use crate::geom::{Point2, Point3, Rect};
use crate::math;
use crate::pipeline::Workspace;

/// Points closer than this to an obstacle boundary count as on it.
pub const DEPTH_TOL: f64 = 1e-9;

/// Samples per segment at `density` samples per unit length, endpoints included.
fn sample_count(len: f64, density: f64) -> usize {
    (math::ceil(len * density) as usize).max(1) + 1
}

fn count_along<P: Copy>(
    path: &[P],
    density: f64,
    dist: impl Fn(P, P) -> f64,
    lerp: impl Fn(P, P, f64) -> P,
    blocked: impl Fn(P) -> bool,
) -> usize {
    assert!(density > 0.0, "sampling density must be positive");
    match path {
        [] => 0,
        [p] => usize::from(blocked(*p)),
        _ => {
            let mut n = 0;
            for (i, w) in path.windows(2).enumerate() {
                let m = sample_count(dist(w[0], w[1]), density);
                // Shared endpoints are checked once.
                let from = usize::from(i > 0);
                for j in from..m {
                    let t = j as f64 / (m - 1) as f64;
                    n += usize::from(blocked(lerp(w[0], w[1], t)));
                }
            }
            n
        }
    }
}

fn outside_rect(r: &Rect, p: Point2) -> bool {
    p.x < r.min.x - DEPTH_TOL || p.y < r.min.y - DEPTH_TOL || p.x > r.max.x + DEPTH_TOL || p.y > r.max.y + DEPTH_TOL
}

/// Number of sampled points strictly inside an obstacle or outside the bounds.
pub fn violations_2d(path: &[Point2], map: &PlanarMap, density: f64) -> usize {
    count_along(
        path,
        density,
        Point2::dist,
        Point2::lerp,
        |p| {
            outside_rect(&map.bounds, p)
                || map.obstacles.iter().any(|o| o.contains_interior(p, DEPTH_TOL))
        },
    )
}

pub fn violations_3d(path: &[Point3], map: &BoxMap, density: f64) -> usize {
    count_along(
        path,
        density,
        Point3::dist,
        Point3::lerp,
        |p| {
            map.bounds.distance_to_point(p) > DEPTH_TOL
                || map.obstacles.iter().any(|o| o.contains_interior(p, DEPTH_TOL))
        },
    )
}

/// Dispatches on the workspace dimension; 2D ignores `z`.
pub fn post_validate(path: &[Point3], ws: &Workspace, density: f64) -> usize {
    match ws {
        Workspace::Planar(m) => {
            let flat: alloc::vec::Vec<Point2> = path.iter().map(|p| Point2::new(p.x, p.y)).collect();
            violations_2d(&flat, m, density)
        }
        Workspace::Spatial(m) => violations_3d(path, m, density),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Aabb3, SimplePolygon};
    use alloc::vec;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn wall_map() -> PlanarMap {
        PlanarMap::new(
            Rect::new(p(0.0, 0.0), p(1.0, 1.0)),
            vec![SimplePolygon::rectangle(p(0.45, 0.2), p(0.55, 0.8))],
        )
    }

    #[test]
    fn crossing_segment_is_flagged() {
        let n = violations_2d(&[p(0.1, 0.5), p(0.9, 0.5)], &wall_map(), 200.0);
        // 0.1 units of wall at 200 samples per unit.
        assert!((18..=22).contains(&n), "{n}");
    }

    #[test]
    fn grazing_segment_is_clean() {
        let m = wall_map();
        assert_eq!(violations_2d(&[p(0.1, 0.8 + 1e-6), p(0.9, 0.8 + 1e-6)], &m, 200.0), 0);
        // Running exactly along the boundary is allowed too.
        assert_eq!(violations_2d(&[p(0.45, 0.0), p(0.45, 1.0)], &m, 200.0), 0);
    }

    #[test]
    fn spatial_violations() {
        let m = BoxMap::new(
            Aabb3::new(Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 1.0)),
            vec![Aabb3::new(Point3::new(0.4, 0.4, 0.4), Point3::new(0.6, 0.6, 0.6))],
        );
        let a = Point3::new(0.0, 0.5, 0.5);
        let b = Point3::new(1.0, 0.5, 0.5);
        assert!(violations_3d(&[a, b], &m, 200.0) > 0);
        let c = Point3::new(1.0, 0.6, 0.5);
        let a2 = Point3::new(0.0, 0.6, 0.5);
        assert_eq!(violations_3d(&[a2, c], &m, 200.0), 0);
        assert_eq!(violations_3d(&[], &m, 200.0), 0);
    }
}
