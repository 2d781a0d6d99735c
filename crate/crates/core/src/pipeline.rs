//! End-to-end planning: decompose, build the cell graph, score, search.

use alloc::vec::Vec;

use crate::cellgraph::{build_planar, build_spatial, CellGraph};
use crate::decomp2d::{triangulate, PlanarMap};
use crate::decomp3d::{slab_decompose, BoxMap};
use crate::error::{DecompError, Error, GraphError};
use crate::eval::{FaceSampler, Funnel};
use crate::geom::{Point2, Point3};
use crate::gnn::GnnWeights;
use crate::search::{plan, Clock, Evaluation, PhaseCounters, PlanResult, PlannerConfig};

/// A 2D polygon map or a 3D box map.
#[derive(Debug, Clone, PartialEq)]
pub enum Workspace {
    Planar(PlanarMap),
    Spatial(BoxMap),
}

impl Workspace {
    pub fn dim(&self) -> usize {
        match self {
            Workspace::Planar(_) => 2,
            Workspace::Spatial(_) => 3,
        }
    }

    pub fn diagonal(&self) -> f64 {
        match self {
            Workspace::Planar(m) => m.bounds.diagonal(),
            Workspace::Spatial(m) => m.bounds.diagonal(),
        }
    }

    pub fn obstacle_count(&self) -> usize {
        match self {
            Workspace::Planar(m) => m.obstacles.len(),
            Workspace::Spatial(m) => m.obstacles.len(),
        }
    }

    /// Free-space test; 2D maps ignore `z`.
    pub fn is_free(&self, p: Point3) -> bool {
        match self {
            Workspace::Planar(m) => m.is_free(Point2::new(p.x, p.y)),
            Workspace::Spatial(m) => m.is_free(p),
        }
    }
}

/// Decomposes `ws` and binds the query. 2D maps ignore `z`.
pub fn build_graph(ws: &Workspace, qs: Point3, qg: Point3) -> Result<CellGraph, Error> {
    match ws {
        Workspace::Planar(m) => {
            let tri = triangulate(m)?;
            Ok(build_planar(&tri, m, Point2::new(qs.x, qs.y), Point2::new(qg.x, qg.y))?)
        }
        Workspace::Spatial(m) => {
            let d = slab_decompose(m)?;
            Ok(build_spatial(&d, qs, qg)?)
        }
    }
}

/// Decomposes `ws` with the query bound to the centroid of the first cell,
/// for inspecting a decomposition without a planning query.
pub fn decompose(ws: &Workspace) -> Result<CellGraph, Error> {
    match ws {
        Workspace::Planar(m) => {
            let tri = triangulate(m)?;
            let t = tri.free_triangles().next().ok_or(DecompError::EmptyFreeSpace)?;
            let [a, b, c] = tri.corners(t);
            let q = Point2::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0);
            Ok(build_planar(&tri, m, q, q)?)
        }
        Workspace::Spatial(m) => {
            let d = slab_decompose(m)?;
            let q = d.cells.first().ok_or(DecompError::EmptyFreeSpace)?.center();
            Ok(build_spatial(&d, q, q)?)
        }
    }
}

/// Planner result for either dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    Planar(PlanResult<Point2>),
    Spatial(PlanResult<Point3>),
}

impl Plan {
    pub fn cost(&self) -> f64 {
        match self {
            Plan::Planar(r) => r.cost,
            Plan::Spatial(r) => r.cost,
        }
    }

    /// Waypoints as 3D points (`z = 0` in 2D).
    pub fn waypoints(&self) -> Vec<Point3> {
        match self {
            Plan::Planar(r) => r.best.waypoints.iter().map(|p| Point3::new(p.x, p.y, 0.0)).collect(),
            Plan::Spatial(r) => r.best.waypoints.clone(),
        }
    }

    pub fn corridor(&self) -> &[usize] {
        match self {
            Plan::Planar(r) => &r.best.corridor,
            Plan::Spatial(r) => &r.best.corridor,
        }
    }

    pub fn counters(&self) -> &PhaseCounters {
        match self {
            Plan::Planar(r) => &r.counters,
            Plan::Spatial(r) => &r.counters,
        }
    }

    pub fn trace(&self) -> &[(core::time::Duration, f64)] {
        match self {
            Plan::Planar(r) => &r.trace,
            Plan::Spatial(r) => &r.trace,
        }
    }

    pub fn evaluations(&self) -> &[Evaluation] {
        match self {
            Plan::Planar(r) => &r.evaluations,
            Plan::Spatial(r) => &r.evaluations,
        }
    }

    pub fn scores(&self) -> Option<&[f64]> {
        match self {
            Plan::Planar(r) => r.scores.as_deref(),
            Plan::Spatial(r) => r.scores.as_deref(),
        }
    }

    pub fn gnn_warning(&self) -> Option<&crate::error::GnnError> {
        match self {
            Plan::Planar(r) => r.gnn_warning.as_ref(),
            Plan::Spatial(r) => r.gnn_warning.as_ref(),
        }
    }
}

/// Runs the planner on an existing graph.
pub fn plan_graph(
    g: &CellGraph,
    weights: Option<&GnnWeights>,
    cfg: &PlannerConfig,
    sampler: &FaceSampler,
    clock: &dyn Clock,
) -> Result<Plan, Error> {
    Ok(match g.dim {
        2 => Plan::Planar(plan(g, weights, cfg, &Funnel, clock)?),
        _ => Plan::Spatial(plan(g, weights, cfg, sampler, clock)?),
    })
}

/// Decompose, build the graph and plan.
pub fn run(
    ws: &Workspace,
    qs: Point3,
    qg: Point3,
    weights: Option<&GnnWeights>,
    cfg: &PlannerConfig,
    sampler: &FaceSampler,
    clock: &dyn Clock,
) -> Result<(CellGraph, Plan), Error> {
    let g = build_graph(ws, qs, qg)?;
    if g.dim != ws.dim() {
        return Err(GraphError::DimensionMismatch.into());
    }
    let p = plan_graph(&g, weights, cfg, sampler, clock)?;
    Ok((g, p))
}
