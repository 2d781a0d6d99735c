//! Speed-clamping barrier guard for a disk robot following a planar path.
//!
//! The robot tracks the polyline by arc length. Each step it looks at the
//! walls of nearby corridor cells, keeps the four nearest, and limits its
//! speed so that no barrier `h = dist - r` can be driven below zero.

use alloc::vec::Vec;

use crate::cellgraph::{CellGraph, CellShape};
use crate::error::CbfError;
use crate::eval::PathSolution;
use crate::geom::{closest_point_on_segment, point_segment_distance, Point2, Segment2};

/// Most walls considered in a single step.
pub const MAX_ACTIVE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierConfig {
    pub radius: f64,
    pub gamma: f64,
    pub dt: f64,
    pub v_nom: f64,
    /// Zero picks a limit from the path length.
    pub max_steps: usize,
    /// Consecutive steps below `1e-6 * v_nom` before giving up.
    pub stall_steps: usize,
}

impl BarrierConfig {
    pub fn new(radius: f64) -> Self {
        Self { radius, gamma: 1.0, dt: 0.01, v_nom: 1.0, max_steps: 0, stall_steps: 200 }
    }

    /// Nominal speed scaled by a workspace diagonal.
    pub fn for_diagonal(radius: f64, diagonal: f64) -> Self {
        Self { v_nom: diagonal, ..Self::new(radius) }
    }

    fn validate(&self) -> Result<(), CbfError> {
        if !(self.radius >= 0.0) || !self.radius.is_finite() {
            return Err(CbfError::InvalidConfig("radius must be finite and non-negative"));
        }
        if !(self.gamma > 0.0) || !(self.dt > 0.0) || !(self.v_nom > 0.0) {
            return Err(CbfError::InvalidConfig("gain, timestep and speed must be positive"));
        }
        Ok(())
    }
}

/// `dist(q, wall) - r`.
pub fn barrier_value(q: Point2, wall: Segment2, r: f64) -> f64 {
    point_segment_distance(q, wall) - r
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryStep {
    pub t: f64,
    pub pose: Point2,
    pub v: f64,
    pub active: usize,
    pub clamped: bool,
    /// Smallest barrier value over the active walls at this pose.
    pub h_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    /// Step indices where the clamp was binding.
    pub interventions: Vec<usize>,
    /// Corridor cell index (position in the corridor) of each intervention.
    pub intervention_cells: Vec<usize>,
    pub reached_goal: bool,
    pub stalled: bool,
    pub min_h: f64,
}

struct Track<'a> {
    pts: &'a [Point2],
    seg: usize,
    along: f64,
}

impl Track<'_> {
    fn pose(&self) -> Point2 {
        if self.seg + 1 >= self.pts.len() {
            return self.pts[self.pts.len() - 1];
        }
        let (a, b) = (self.pts[self.seg], self.pts[self.seg + 1]);
        let len = a.dist(b);
        if len == 0.0 {
            a
        } else {
            a.lerp(b, self.along / len)
        }
    }

    fn done(&self) -> bool {
        self.seg + 1 >= self.pts.len()
    }

    fn direction(&self) -> Point2 {
        let d = self.pts[self.seg + 1] - self.pts[self.seg];
        let n = d.norm();
        if n == 0.0 {
            d
        } else {
            d * (1.0 / n)
        }
    }

    fn remaining(&self) -> f64 {
        self.pts[self.seg].dist(self.pts[self.seg + 1]) - self.along
    }

    /// Advances by `ds`, stopping exactly at the next vertex.
    fn advance(&mut self, ds: f64) {
        let rem = self.remaining();
        if ds >= rem {
            self.seg += 1;
            self.along = 0.0;
            while !self.done() && self.remaining() == 0.0 {
                self.seg += 1;
            }
        } else {
            self.along += ds;
        }
    }
}

fn triangle_contains_tol(c: &[Point2; 3], p: Point2, tol: f64) -> bool {
    (0..3).all(|i| {
        let (a, b) = (c[i], c[(i + 1) % 3]);
        let e = b - a;
        e.cross(p - a) >= -tol * e.norm()
    })
}

fn cell_walls(g: &CellGraph, cell: usize, out: &mut Vec<Segment2>) -> Result<(), CbfError> {
    match g.cells[cell].shape {
        CellShape::Triangle { corners, walls } => {
            for i in 0..3 {
                if walls[i] {
                    out.push(Segment2::new(corners[(i + 1) % 3], corners[(i + 2) % 3]));
                }
            }
            Ok(())
        }
        CellShape::Box(_) => Err(CbfError::NotPlanar),
    }
}

/// Tracks `path` with the guard enabled (for `radius > 0`).
pub fn execute_guarded(
    g: &CellGraph,
    path: &PathSolution<Point2>,
    cfg: &BarrierConfig,
) -> Result<Trajectory, CbfError> {
    run(g, path, cfg, cfg.radius > 0.0)
}

/// Tracks `path` at nominal speed without any clamping.
pub fn execute_unguarded(
    g: &CellGraph,
    path: &PathSolution<Point2>,
    cfg: &BarrierConfig,
) -> Result<Trajectory, CbfError> {
    run(g, path, cfg, false)
}

fn run(
    g: &CellGraph,
    path: &PathSolution<Point2>,
    cfg: &BarrierConfig,
    guard: bool,
) -> Result<Trajectory, CbfError> {
    cfg.validate()?;
    if g.dim != 2 {
        return Err(CbfError::NotPlanar);
    }
    let corridor = &path.corridor;
    if corridor.is_empty() || path.waypoints.is_empty() {
        return Err(CbfError::InvalidConfig("empty path"));
    }
    let max_steps = if cfg.max_steps > 0 {
        cfg.max_steps
    } else {
        let nominal = path.length / (cfg.v_nom * cfg.dt);
        (nominal * 20.0) as usize + 1000
    };
    let tol = 1e-9 * g.diagonal;
    let mut track = Track { pts: &path.waypoints, seg: 0, along: 0.0 };
    while !track.done() && track.remaining() == 0.0 {
        track.seg += 1;
    }
    let mut idx = 0usize;
    let mut traj = Trajectory {
        steps: Vec::new(),
        interventions: Vec::new(),
        intervention_cells: Vec::new(),
        reached_goal: false,
        stalled: false,
        min_h: f64::INFINITY,
    };
    let mut walls: Vec<Segment2> = Vec::new();
    for c in 0..g.len() {
        cell_walls(g, c, &mut walls)?;
    }
    let mut ranked: Vec<(f64, Segment2)> = Vec::new();
    let mut idle = 0usize;

    for step in 0..=max_steps {
        let q = track.pose();
        // Follow the corridor forward as the pose crosses portals.
        let hi = (idx + 2).min(corridor.len() - 1);
        for j in (idx..=hi).rev() {
            if let CellShape::Triangle { corners, .. } = g.cells[corridor[j]].shape {
                if triangle_contains_tol(&corners, q, tol) {
                    idx = j;
                    break;
                }
            }
        }
        ranked.clear();
        ranked.extend(walls.iter().map(|&w| (point_segment_distance(q, w), w)));
        if ranked.len() > MAX_ACTIVE {
            ranked.select_nth_unstable_by(MAX_ACTIVE - 1, |a, b| a.0.total_cmp(&b.0));
        }
        ranked.truncate(MAX_ACTIVE);
        let h_min = ranked.iter().map(|&(d, _)| d - cfg.radius).fold(f64::INFINITY, f64::min);
        if step == 0 && guard && h_min < 0.0 {
            return Err(CbfError::InfeasibleStart(h_min));
        }
        traj.min_h = traj.min_h.min(h_min);

        if track.done() {
            traj.steps.push(TrajectoryStep {
                t: step as f64 * cfg.dt,
                pose: q,
                v: 0.0,
                active: ranked.len(),
                clamped: false,
                h_min,
            });
            traj.reached_goal = true;
            break;
        }
        let u = track.direction();
        let mut v = cfg.v_nom;
        let mut clamped = false;
        if guard {
            for &(d, w) in &ranked {
                if d == 0.0 {
                    v = 0.0;
                    clamped = true;
                    continue;
                }
                let grad = (q - closest_point_on_segment(q, w)) * (1.0 / d);
                let a = -grad.dot(u);
                if a > 0.0 {
                    let h = d - cfg.radius;
                    let limit = (cfg.gamma * h / a).max(0.0);
                    if limit < v {
                        v = limit;
                        clamped = true;
                    }
                }
            }
        }
        traj.steps.push(TrajectoryStep {
            t: step as f64 * cfg.dt,
            pose: q,
            v,
            active: ranked.len(),
            clamped,
            h_min,
        });
        if clamped {
            traj.interventions.push(step);
            traj.intervention_cells.push(idx);
        }
        let ds = v * cfg.dt;
        if v <= 1e-6 * cfg.v_nom {
            idle += 1;
            if idle >= cfg.stall_steps {
                traj.stalled = true;
                break;
            }
        } else {
            idle = 0;
        }
        track.advance(ds);
    }
    Ok(traj)
}
