//! Corridor evaluators: exact string pulling in 2D and portal-face sampling
//! with a layered DP in 3D.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cellgraph::{flat, CellGraph, PortalShape};
use crate::error::EvalError;
use crate::geom::{orient2d, Face3, Point2, Point3, Segment2, Sign};
use crate::math;

/// Evaluated corridor: polyline from `qs` to `qg` through the corridor.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSolution<P> {
    pub waypoints: Vec<P>,
    pub length: f64,
    pub corridor: Vec<usize>,
    /// Candidate crossings considered per portal (3D only).
    pub samples: usize,
    pub refinement_rounds: usize,
}

pub trait CorridorEvaluator {
    type Point: Copy + core::fmt::Debug + PartialEq;
    fn evaluate(&self, g: &CellGraph, corridor: &[usize])
        -> Result<PathSolution<Self::Point>, EvalError>;
}

/// Portal ids along a corridor, validating adjacency and endpoints.
pub fn corridor_portals(g: &CellGraph, corridor: &[usize]) -> Result<Vec<usize>, EvalError> {
    if corridor.is_empty() {
        return Err(EvalError::MalformedCorridor("empty corridor"));
    }
    if corridor[0] != g.start || corridor[corridor.len() - 1] != g.goal {
        return Err(EvalError::MalformedCorridor("corridor does not join start and goal cells"));
    }
    if corridor.iter().any(|&c| c >= g.len()) {
        return Err(EvalError::MalformedCorridor("unknown cell"));
    }
    corridor
        .windows(2)
        .map(|w| {
            g.portal_between(w[0], w[1])
                .ok_or(EvalError::MalformedCorridor("consecutive cells share no portal"))
        })
        .collect()
}

fn polyline_length2(p: &[Point2]) -> f64 {
    p.windows(2).map(|w| w[0].dist(w[1])).sum()
}

fn polyline_length3(p: &[Point3]) -> f64 {
    p.windows(2).map(|w| w[0].dist(w[1])).sum()
}

/// Exact shortest path in 2D by the deque funnel algorithm.
#[derive(Debug, Clone, Copy, Default)]
pub struct Funnel;

/// Oriented portals `(left, right)` as seen when leaving each corridor cell.
pub fn oriented_portals(
    g: &CellGraph,
    corridor: &[usize],
) -> Result<Vec<(Point2, Point2)>, EvalError> {
    let portals = corridor_portals(g, corridor)?;
    portals
        .iter()
        .zip(corridor)
        .map(|(&p, &c)| {
            let PortalShape::Segment(s) = g.portals[p].shape else {
                return Err(EvalError::MalformedCorridor("planar evaluator on a spatial graph"));
            };
            let z = flat(g.cells[c].centroid);
            match orient2d(z, s.a, s.b) {
                Sign::Positive => Ok((s.b, s.a)),
                Sign::Negative => Ok((s.a, s.b)),
                Sign::Zero => Err(EvalError::MalformedCorridor("portal collinear with cell centroid")),
            }
        })
        .collect()
}

/// String pulling through ordered `(left, right)` portals.
pub fn funnel_path(qs: Point2, qg: Point2, portals: &[(Point2, Point2)]) -> Vec<Point2> {
    let mut path = vec![qs];
    let mut dq: VecDeque<Point2> = VecDeque::new();
    dq.push_back(qs);
    let mut apex = 0usize;

    let add_left = |dq: &mut VecDeque<Point2>, apex: &mut usize, path: &mut Vec<Point2>, p: Point2| {
        if dq[0] == p {
            return;
        }
        while *apex > 0 && orient2d(dq[1], dq[0], p) != Sign::Positive {
            dq.pop_front();
            *apex -= 1;
        }
        if *apex == 0 {
            while dq.len() > 1 && orient2d(dq[0], dq[1], p) == Sign::Negative {
                dq.pop_front();
                path.push(dq[0]);
            }
        }
        if dq[0] != p {
            dq.push_front(p);
            *apex += 1;
        }
    };
    let add_right = |dq: &mut VecDeque<Point2>, apex: &mut usize, path: &mut Vec<Point2>, p: Point2| {
        let last = dq.len() - 1;
        if dq[last] == p {
            return;
        }
        while dq.len() - 1 > *apex {
            let n = dq.len();
            if orient2d(dq[n - 2], dq[n - 1], p) != Sign::Negative {
                dq.pop_back();
            } else {
                break;
            }
        }
        if dq.len() - 1 == *apex {
            while *apex > 0 && orient2d(dq[*apex], dq[*apex - 1], p) == Sign::Positive {
                dq.pop_back();
                *apex -= 1;
                path.push(dq[*apex]);
            }
        }
        if dq[dq.len() - 1] != p {
            dq.push_back(p);
        }
    };

    for &(l, r) in portals {
        add_left(&mut dq, &mut apex, &mut path, l);
        add_right(&mut dq, &mut apex, &mut path, r);
    }
    add_left(&mut dq, &mut apex, &mut path, qg);
    // Remaining left chain from the apex out to the goal.
    for i in (0..apex).rev() {
        path.push(dq[i]);
    }
    path.dedup();
    if path.len() == 1 {
        path.push(qg);
    }
    path
}

impl CorridorEvaluator for Funnel {
    type Point = Point2;

    fn evaluate(&self, g: &CellGraph, corridor: &[usize]) -> Result<PathSolution<Point2>, EvalError> {
        if g.dim != 2 {
            return Err(EvalError::MalformedCorridor("planar evaluator on a spatial graph"));
        }
        let portals = oriented_portals(g, corridor)?;
        let waypoints = funnel_path(flat(g.qs), flat(g.qg), &portals);
        Ok(PathSolution {
            length: polyline_length2(&waypoints),
            waypoints,
            corridor: corridor.to_vec(),
            samples: 0,
            refinement_rounds: 0,
        })
    }
}

/// Layered DP over candidate points; returns the best cost and the chosen
/// index per layer.
fn layered_dp<P: Copy>(
    qs: P,
    qg: P,
    layers: &[Vec<P>],
    dist: impl Fn(P, P) -> f64,
) -> (f64, Vec<usize>) {
    if layers.is_empty() {
        return (dist(qs, qg), Vec::new());
    }
    let mut cost: Vec<f64> = layers[0].iter().map(|&p| dist(qs, p)).collect();
    let mut back: Vec<Vec<usize>> = vec![vec![0; layers[0].len()]];
    for w in layers.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        let mut nc = vec![f64::INFINITY; next.len()];
        let mut nb = vec![0; next.len()];
        for (j, &q) in next.iter().enumerate() {
            for (i, &p) in prev.iter().enumerate() {
                let c = cost[i] + dist(p, q);
                if c < nc[j] {
                    nc[j] = c;
                    nb[j] = i;
                }
            }
        }
        cost = nc;
        back.push(nb);
    }
    let (mut best, mut arg) = (f64::INFINITY, 0);
    for (i, &p) in layers[layers.len() - 1].iter().enumerate() {
        let c = cost[i] + dist(p, qg);
        if c < best {
            best = c;
            arg = i;
        }
    }
    let mut choice = vec![0; layers.len()];
    for l in (0..layers.len()).rev() {
        choice[l] = arg;
        arg = back[l][arg];
    }
    (best, choice)
}

fn grid_side(n_s: usize) -> Result<usize, EvalError> {
    let side = math::round(math::sqrt(n_s as f64)) as usize;
    if n_s < 4 || side * side != n_s {
        return Err(EvalError::InvalidSampling("sample count must be a perfect square of at least 4"));
    }
    Ok(side)
}

/// Vertex-inclusive `side x side` grid on a face.
pub fn face_grid(face: &Face3, side: usize) -> Vec<Point3> {
    let mut out = Vec::with_capacity(side * side);
    let step = |k: usize| k as f64 / (side - 1) as f64;
    for i in 0..side {
        for j in 0..side {
            let u = face.lo[0] + (face.hi[0] - face.lo[0]) * step(i);
            let v = face.lo[1] + (face.hi[1] - face.lo[1]) * step(j);
            out.push(face.point(u, v));
        }
    }
    out
}

/// Portal-face sampling with layered DP and Gaussian re-sampling.
#[derive(Debug, Clone, Copy)]
pub struct FaceSampler {
    pub samples: usize,
    pub rounds: usize,
    pub seed: u64,
}

impl Default for FaceSampler {
    fn default() -> Self {
        Self { samples: 16, rounds: 3, seed: 0x5eed }
    }
}

fn uv_of(face: &Face3, p: Point3) -> (f64, f64) {
    let [u, v] = face.in_plane_axes();
    (p.axis(u), p.axis(v))
}

impl CorridorEvaluator for FaceSampler {
    type Point = Point3;

    fn evaluate(&self, g: &CellGraph, corridor: &[usize]) -> Result<PathSolution<Point3>, EvalError> {
        if g.dim != 3 {
            return Err(EvalError::MalformedCorridor("spatial evaluator on a planar graph"));
        }
        let side = grid_side(self.samples)?;
        let faces: Vec<Face3> = corridor_portals(g, corridor)?
            .into_iter()
            .map(|p| match g.portals[p].shape {
                PortalShape::Face(f) => Ok(f),
                PortalShape::Segment(_) => Err(EvalError::MalformedCorridor("segment portal in 3D")),
            })
            .collect::<Result<_, _>>()?;
        let (qs, qg) = (g.qs, g.qg);
        let dist = |a: Point3, b: Point3| a.dist(b);
        let layers: Vec<Vec<Point3>> = faces.iter().map(|f| face_grid(f, side)).collect();
        let (mut best, choice) = layered_dp(qs, qg, &layers, dist);
        let mut incumbent: Vec<Point3> = choice.iter().zip(&layers).map(|(&i, l)| l[i]).collect();

        let mut seed = self.seed;
        for &c in corridor {
            seed = (seed ^ c as u64).wrapping_mul(0x0100_0000_01b3);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rounds = 0;
        if !faces.is_empty() {
            for round in 0..self.rounds {
                let scale = 0.25 / (1u64 << round) as f64;
                let layers: Vec<Vec<Point3>> = faces
                    .iter()
                    .zip(&incumbent)
                    .map(|(f, &x)| {
                        let sigma = f.min_dimension() * scale;
                        let (u0, v0) = uv_of(f, x);
                        let mut pts = Vec::with_capacity(self.samples + 1);
                        pts.push(x);
                        for _ in 0..self.samples {
                            let du: f64 = rng.sample(StandardNormal);
                            let dv: f64 = StandardNormal.sample(&mut rng);
                            let (u, v) = f.clamp(u0 + sigma * du, v0 + sigma * dv);
                            pts.push(f.point(u, v));
                        }
                        pts
                    })
                    .collect();
                let (cost, choice) = layered_dp(qs, qg, &layers, dist);
                if cost < best {
                    best = cost;
                    incumbent = choice.iter().zip(&layers).map(|(&i, l)| l[i]).collect();
                }
                rounds += 1;
            }
        }
        let mut waypoints = Vec::with_capacity(incumbent.len() + 2);
        waypoints.push(qs);
        waypoints.extend(incumbent);
        waypoints.push(qg);
        Ok(PathSolution {
            length: polyline_length3(&waypoints),
            waypoints,
            corridor: corridor.to_vec(),
            samples: self.samples,
            refinement_rounds: rounds,
        })
    }
}

/// Reference evaluator for 2D: dense sampling of each portal segment and a
/// layered DP. Used to cross-check the funnel.
pub fn sampled_dp_2d(g: &CellGraph, corridor: &[usize], per_portal: usize) -> Result<f64, EvalError> {
    let portals = corridor_portals(g, corridor)?;
    let layers: Vec<Vec<Point2>> = portals
        .iter()
        .map(|&p| match g.portals[p].shape {
            PortalShape::Segment(s) => Ok(segment_samples(s, per_portal)),
            PortalShape::Face(_) => Err(EvalError::MalformedCorridor("face portal in 2D")),
        })
        .collect::<Result<_, _>>()?;
    Ok(layered_dp(flat(g.qs), flat(g.qg), &layers, |a, b| a.dist(b)).0)
}

/// Endpoint-inclusive uniform samples along a segment.
pub fn segment_samples(s: Segment2, n: usize) -> Vec<Point2> {
    let n = n.max(2);
    (0..n).map(|i| s.a.lerp(s.b, i as f64 / (n - 1) as f64)).collect()
}

/// Reference DP over explicit per-portal grids; exposed for tests.
pub fn grid_dp_3d(g: &CellGraph, corridor: &[usize], n_s: usize) -> Result<f64, EvalError> {
    FaceSampler { samples: n_s, rounds: 0, seed: 0 }.evaluate(g, corridor).map(|s| s.length)
}
