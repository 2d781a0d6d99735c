//! JSON documents read and written by the command-line tool.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use cellplan_core::cbf::Trajectory;
use cellplan_core::cellgraph::{CellGraph, CellShape, PortalShape};
use cellplan_core::decomp2d::PlanarMap;
use cellplan_core::decomp3d::BoxMap;
use cellplan_core::geom::{Aabb3, Point2, Point3, Rect, SimplePolygon};
use cellplan_core::gnn::{canonical_edge, Arch, GnnWeights, Header, Tensor};
use cellplan_core::pipeline::{Plan, Workspace};
use cellplan_core::scenarios::DynamicScenario;
use cellplan_core::WeightsError;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid document: {0}")]
    Invalid(String),
    #[error(transparent)]
    Weights(#[from] WeightsError),
}

pub fn read_file(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

fn p3(p: Point3) -> [f64; 3] {
    p.to_array()
}

// ---------------------------------------------------------------- maps

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryJson {
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PolygonJson {
    polygon: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct BoxJson {
    min: [f64; 3],
    max: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct PlanarMapJson {
    dim: u8,
    bounds: [f64; 4],
    obstacles: Vec<PolygonJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    query: Option<QueryJson>,
}

#[derive(Serialize, Deserialize)]
struct SpatialMapJson {
    dim: u8,
    bounds: BoxJson,
    obstacles: Vec<BoxJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    query: Option<QueryJson>,
}

#[derive(Deserialize)]
struct DimOnly {
    dim: u8,
}

/// A parsed map file, with the optional embedded query.
#[derive(Debug, Clone, PartialEq)]
pub struct MapDoc {
    pub workspace: Workspace,
    pub query: Option<(Point3, Point3)>,
}

/// Parses `x,y` or `x,y,z` (2D points get `z = 0`).
pub fn point_from_slice(v: &[f64], dim: usize) -> Result<Point3, FormatError> {
    if v.len() != dim {
        return Err(FormatError::Invalid(format!("expected {dim} coordinates, got {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(FormatError::Invalid("non-finite coordinate".into()));
    }
    Ok(Point3::new(v[0], v[1], if dim == 3 { v[2] } else { 0.0 }))
}

fn query_from(q: Option<QueryJson>, dim: usize) -> Result<Option<(Point3, Point3)>, FormatError> {
    q.map(|q| Ok((point_from_slice(&q.start, dim)?, point_from_slice(&q.goal, dim)?))).transpose()
}

fn query_to(q: Option<(Point3, Point3)>, dim: usize) -> Option<QueryJson> {
    q.map(|(s, g)| QueryJson { start: s.to_array()[..dim].to_vec(), goal: g.to_array()[..dim].to_vec() })
}

pub fn parse_map(text: &str) -> Result<MapDoc, FormatError> {
    let DimOnly { dim } = serde_json::from_str(text)?;
    match dim {
        2 => {
            let m: PlanarMapJson = serde_json::from_str(text)?;
            let [x0, y0, x1, y1] = m.bounds;
            let obstacles = m
                .obstacles
                .into_iter()
                .map(|o| SimplePolygon::new(o.polygon.into_iter().map(|[x, y]| Point2::new(x, y)).collect()))
                .collect();
            let map = PlanarMap::new(Rect::new(Point2::new(x0, y0), Point2::new(x1, y1)), obstacles);
            Ok(MapDoc { workspace: Workspace::Planar(map), query: query_from(m.query, 2)? })
        }
        3 => {
            let m: SpatialMapJson = serde_json::from_str(text)?;
            let b = |j: BoxJson| Aabb3::new(Point3::from_array(j.min), Point3::from_array(j.max));
            let map = BoxMap::new(b(m.bounds), m.obstacles.into_iter().map(b).collect());
            Ok(MapDoc { workspace: Workspace::Spatial(map), query: query_from(m.query, 3)? })
        }
        d => Err(FormatError::Invalid(format!("unsupported map dimension {d}"))),
    }
}

pub fn load_map(path: &Path) -> Result<MapDoc, FormatError> {
    parse_map(&read_file(path)?)
}

fn planar_json(map: &PlanarMap, query: Option<(Point3, Point3)>) -> PlanarMapJson {
    PlanarMapJson {
        dim: 2,
        bounds: [map.bounds.min.x, map.bounds.min.y, map.bounds.max.x, map.bounds.max.y],
        obstacles: map
            .obstacles
            .iter()
            .map(|o| PolygonJson { polygon: o.vertices.iter().map(|v| [v.x, v.y]).collect() })
            .collect(),
        query: query_to(query, 2),
    }
}

fn box_json(b: &Aabb3) -> BoxJson {
    BoxJson { min: p3(b.min), max: p3(b.max) }
}

pub fn map_to_json(ws: &Workspace, query: Option<(Point3, Point3)>) -> String {
    let out = match ws {
        Workspace::Planar(m) => serde_json::to_string_pretty(&planar_json(m, query)),
        Workspace::Spatial(m) => serde_json::to_string_pretty(&SpatialMapJson {
            dim: 3,
            bounds: box_json(&m.bounds),
            obstacles: m.obstacles.iter().map(box_json).collect(),
            query: query_to(query, 3),
        }),
    };
    out.expect("map documents always serialize")
}

#[derive(Serialize)]
struct StepJson {
    obstacles: Vec<PolygonJson>,
    present: Vec<usize>,
}

#[derive(Serialize)]
struct DynamicJson {
    dim: u8,
    bounds: [f64; 4],
    seed: u64,
    kinds: Vec<&'static str>,
    walls: usize,
    count_bounds: [usize; 2],
    steps: Vec<StepJson>,
    query: QueryJson,
}

pub fn dynamic_to_json(d: &DynamicScenario) -> String {
    let (lo, hi) = d.count_bounds();
    let doc = DynamicJson {
        dim: 2,
        bounds: [0.0, 0.0, 1.0, 1.0],
        seed: d.spec.seed,
        kinds: d.kinds.iter().map(|k| k.as_str()).collect(),
        walls: d.walls.len(),
        count_bounds: [lo, hi],
        steps: d
            .steps
            .iter()
            .zip(&d.present)
            .map(|(m, present)| StepJson { obstacles: planar_json(m, None).obstacles, present: present.clone() })
            .collect(),
        query: query_to(Some((d.start, d.goal)), 2).expect("query present"),
    };
    serde_json::to_string_pretty(&doc).expect("dynamic documents always serialize")
}

// ---------------------------------------------------------------- weights

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeaderJson {
    pub format: String,
    pub schema_version: u32,
    pub arch: String,
    pub d_n: usize,
    pub d_e: usize,
    pub hidden: usize,
    pub heads: usize,
    pub layers: usize,
    pub feature_version: String,
    pub leaky_relu_slope: f64,
    pub residual: String,
    pub norm_eps: f64,
}

impl From<&Header> for HeaderJson {
    fn from(h: &Header) -> Self {
        Self {
            format: h.format.clone(),
            schema_version: h.schema_version,
            arch: h.arch.as_str().into(),
            d_n: h.d_n,
            d_e: h.d_e,
            hidden: h.hidden,
            heads: h.heads,
            layers: h.layers,
            feature_version: h.feature_version.clone(),
            leaky_relu_slope: h.leaky_relu_slope,
            residual: h.residual.clone(),
            norm_eps: h.norm_eps,
        }
    }
}

#[derive(Deserialize)]
struct TensorIn {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct WeightsIn {
    header: HeaderJson,
    tensors: BTreeMap<String, TensorIn>,
}

#[derive(Serialize)]
struct TensorOut<'a> {
    shape: &'a [usize],
    data: Box<RawValue>,
}

#[derive(Serialize)]
struct WeightsOut<'a> {
    header: HeaderJson,
    tensors: BTreeMap<&'a str, TensorOut<'a>>,
}

/// Parses and validates a weight document. Any structural problem,
/// including a truncated file, is a schema mismatch.
pub fn parse_weights(text: &str) -> Result<GnnWeights, WeightsError> {
    let doc: WeightsIn =
        serde_json::from_str(text).map_err(|e| WeightsError::SchemaMismatch(format!("unreadable weight file: {e}")))?;
    let h = doc.header;
    let arch = Arch::parse(&h.arch).ok_or_else(|| WeightsError::SchemaMismatch(format!("unknown arch `{}`", h.arch)))?;
    let header = Header {
        format: h.format,
        schema_version: h.schema_version,
        arch,
        d_n: h.d_n,
        d_e: h.d_e,
        hidden: h.hidden,
        heads: h.heads,
        layers: h.layers,
        feature_version: h.feature_version,
        leaky_relu_slope: h.leaky_relu_slope,
        residual: h.residual,
        norm_eps: h.norm_eps,
    };
    let tensors = doc.tensors.into_iter().map(|(k, t)| (k, Tensor::new(t.shape, t.data))).collect();
    GnnWeights::new(header, tensors)
}

/// Loads weights and checks them against the planner's feature packing.
pub fn load_weights(path: &Path, feature_version: &str) -> Result<GnnWeights, FormatError> {
    let w = parse_weights(&read_file(path)?)?;
    w.check_features(feature_version)?;
    Ok(w)
}

/// Floats with 17 significant digits.
fn float_list(data: &[f64]) -> Box<RawValue> {
    let mut s = String::with_capacity(data.len() * 24 + 2);
    s.push('[');
    for (i, v) in data.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{v:.16e}").expect("writing to a string");
    }
    s.push(']');
    RawValue::from_string(s).expect("float list is valid JSON")
}

pub fn weights_to_json(w: &GnnWeights) -> String {
    let doc = WeightsOut {
        header: HeaderJson::from(&w.header),
        tensors: w
            .tensors
            .iter()
            .map(|(k, t)| (k.as_str(), TensorOut { shape: &t.shape, data: float_list(&t.data) }))
            .collect(),
    };
    serde_json::to_string(&doc).expect("weights always serialize")
}

// ---------------------------------------------------------------- graph export

pub const GRAPH_FORMAT: &str = "cellplan-graph";
pub const GRAPH_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortalExport {
    pub cells: [usize; 2],
    /// Directed edge whose features and endpoint order feed the edge head.
    pub canonical_edge: usize,
    pub size: f64,
    pub midpoint: [f64; 3],
}

/// Trainer input: node and directed-edge features plus portal bookkeeping.
/// Directed edges `2p` and `2p + 1` are the two orientations of portal `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphExport {
    pub format: String,
    pub version: u32,
    pub feature_version: String,
    pub dim: usize,
    pub num_nodes: usize,
    pub node_dim: usize,
    pub edge_dim: usize,
    pub diagonal: f64,
    pub bounds: [[f64; 3]; 2],
    pub start_cell: usize,
    pub goal_cell: usize,
    pub query: [[f64; 3]; 2],
    pub x: Vec<Vec<f64>>,
    pub edge_index: [Vec<usize>; 2],
    pub edge_attr: Vec<Vec<f64>>,
    pub portals: Vec<PortalExport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
}

pub fn export_graph(g: &CellGraph) -> GraphExport {
    GraphExport {
        format: GRAPH_FORMAT.into(),
        version: GRAPH_VERSION,
        feature_version: g.feature_version().into(),
        dim: g.dim,
        num_nodes: g.len(),
        node_dim: g.node_dim,
        edge_dim: g.edge_dim,
        diagonal: g.diagonal,
        bounds: [p3(g.bounds_min), p3(g.bounds_max)],
        start_cell: g.start,
        goal_cell: g.goal,
        query: [p3(g.qs), p3(g.qg)],
        x: (0..g.len()).map(|i| g.node_row(i).to_vec()).collect(),
        edge_index: [g.edges.iter().map(|e| e.0).collect(), g.edges.iter().map(|e| e.1).collect()],
        edge_attr: (0..g.edges.len()).map(|e| g.edge_row(e).to_vec()).collect(),
        portals: g
            .portals
            .iter()
            .enumerate()
            .map(|(p, portal)| PortalExport {
                cells: [portal.cells.0, portal.cells.1],
                canonical_edge: canonical_edge(g, p),
                size: portal.size,
                midpoint: p3(portal.midpoint),
            })
            .collect(),
        labels: None,
        scores: None,
    }
}

// ---------------------------------------------------------------- decomposition

#[derive(Serialize)]
#[serde(untagged)]
enum CellJson {
    Triangle { corners: [[f64; 2]; 3] },
    Box { min: [f64; 3], max: [f64; 3] },
}

#[derive(Serialize)]
#[serde(untagged)]
enum PortalGeomJson {
    Segment { segment: [[f64; 2]; 2] },
    Face { axis: usize, coord: f64, lo: [f64; 2], hi: [f64; 2] },
}

#[derive(Serialize)]
struct PortalJson {
    cells: [usize; 2],
    #[serde(flatten)]
    geom: PortalGeomJson,
}

#[derive(Serialize)]
struct DecompositionJson {
    dim: usize,
    cell_count: usize,
    portal_count: usize,
    cells: Vec<CellJson>,
    portals: Vec<PortalJson>,
}

pub fn decomposition_to_json(g: &CellGraph) -> String {
    let cells = g
        .cells
        .iter()
        .map(|c| match c.shape {
            CellShape::Triangle { corners, .. } => CellJson::Triangle { corners: corners.map(|p| [p.x, p.y]) },
            CellShape::Box(b) => CellJson::Box { min: p3(b.min), max: p3(b.max) },
        })
        .collect();
    let portals = g
        .portals
        .iter()
        .map(|p| PortalJson {
            cells: [p.cells.0, p.cells.1],
            geom: match p.shape {
                PortalShape::Segment(s) => PortalGeomJson::Segment { segment: [[s.a.x, s.a.y], [s.b.x, s.b.y]] },
                PortalShape::Face(f) => PortalGeomJson::Face { axis: f.axis, coord: f.coord, lo: f.lo, hi: f.hi },
            },
        })
        .collect();
    let doc = DecompositionJson { dim: g.dim, cell_count: g.len(), portal_count: g.portals.len(), cells, portals };
    serde_json::to_string_pretty(&doc).expect("decompositions always serialize")
}

// ---------------------------------------------------------------- plan output

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountersJson {
    pub phase1_enumerated: usize,
    pub phase1_evaluated: usize,
    pub phase2_enumerated: usize,
    pub phase2_evaluated: usize,
    pub phase2_iterations: usize,
    pub final_budget: usize,
    pub budget_exhausted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_ms: Option<f64>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorridorJson {
    pub phase: u8,
    pub cells: Vec<usize>,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanJson {
    pub dim: usize,
    pub waypoints: Vec<Vec<f64>>,
    pub cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_ms: Option<f64>,
    pub corridor: Vec<usize>,
    pub phase: u8,
    pub phase_counters: CountersJson,
    pub trace: Vec<TraceJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corridors: Option<Vec<CorridorJson>>,
}

pub fn plan_to_json(plan: &Plan, dim: usize, time_ms: Option<f64>, emit_corridors: bool) -> PlanJson {
    let c = plan.counters();
    let phase = match plan {
        Plan::Planar(r) => r.phase,
        Plan::Spatial(r) => r.phase,
    };
    PlanJson {
        dim,
        waypoints: plan.waypoints().into_iter().map(|p| p.to_array()[..dim].to_vec()).collect(),
        cost: plan.cost(),
        time_ms,
        corridor: plan.corridor().to_vec(),
        phase,
        phase_counters: CountersJson {
            phase1_enumerated: c.phase1_enumerated,
            phase1_evaluated: c.phase1_evaluated,
            phase2_enumerated: c.phase2_enumerated,
            phase2_evaluated: c.phase2_evaluated,
            phase2_iterations: c.phase2_iterations,
            final_budget: c.final_budget,
            budget_exhausted: c.budget_exhausted,
        },
        trace: plan
            .trace()
            .iter()
            .map(|(t, cost)| TraceJson { time_ms: time_ms.map(|_| t.as_secs_f64() * 1e3), cost: *cost })
            .collect(),
        corridors: emit_corridors.then(|| {
            plan.evaluations()
                .iter()
                .map(|e| CorridorJson { phase: e.phase, cells: e.cells.clone(), length: e.length })
                .collect()
        }),
    }
}

// ---------------------------------------------------------------- trajectories

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStepJson {
    pub t: f64,
    pub pose: [f64; 2],
    pub v: f64,
    pub active: usize,
    pub clamped: bool,
    pub h_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryJson {
    pub radius: f64,
    pub gamma: f64,
    pub dt: f64,
    pub v_nom: f64,
    pub reached_goal: bool,
    pub stalled: bool,
    pub min_h: f64,
    pub interventions: usize,
    pub steps: Vec<TrajectoryStepJson>,
}

pub fn trajectory_to_json(tr: &Trajectory, cfg: &cellplan_core::cbf::BarrierConfig) -> TrajectoryJson {
    TrajectoryJson {
        radius: cfg.radius,
        gamma: cfg.gamma,
        dt: cfg.dt,
        v_nom: cfg.v_nom,
        reached_goal: tr.reached_goal,
        stalled: tr.stalled,
        min_h: tr.min_h,
        interventions: tr.interventions.len(),
        steps: tr
            .steps
            .iter()
            .map(|s| TrajectoryStepJson {
                t: s.t,
                pose: [s.pose.x, s.pose.y],
                v: s.v,
                active: s.active,
                clamped: s.clamped,
                h_min: s.h_min,
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cellplan_core::gnn::Header;

    #[test]
    fn planar_map_round_trip() {
        let text = r#"{"dim":2,"bounds":[0,0,2,1],"obstacles":[{"polygon":[[0.5,0.2],[0.8,0.2],[0.6,0.7]]}]}"#;
        let doc = parse_map(text).unwrap();
        assert_eq!(doc.query, None);
        let again = parse_map(&map_to_json(&doc.workspace, None)).unwrap();
        assert_eq!(again, doc);
    }

    #[test]
    fn spatial_map_with_query() {
        let text = r#"{"dim":3,"bounds":{"min":[0,0,0],"max":[1,1,1]},
            "obstacles":[{"min":[0.4,0.4,0.4],"max":[0.6,0.6,0.6]}],
            "query":{"start":[0.1,0.1,0.1],"goal":[0.9,0.9,0.9]}}"#;
        let doc = parse_map(text).unwrap();
        assert_eq!(doc.workspace.dim(), 3);
        let (s, _) = doc.query.unwrap();
        assert_eq!(s, Point3::new(0.1, 0.1, 0.1));
        assert_eq!(parse_map(&map_to_json(&doc.workspace, doc.query)).unwrap(), doc);
    }

    #[test]
    fn bad_maps() {
        assert!(matches!(parse_map(r#"{"dim":4}"#), Err(FormatError::Invalid(_))));
        assert!(matches!(parse_map(r#"{"dim":2,"bounds":[0,0,1]}"#), Err(FormatError::Json(_))));
    }

    #[test]
    fn weights_round_trip_exactly() {
        for arch in [Arch::Gcn2d, Arch::Gatv2_3d] {
            let w = GnnWeights::random(Header::standard(arch, 8), 3);
            let text = weights_to_json(&w);
            assert_eq!(parse_weights(&text).unwrap(), w);
        }
    }

    #[test]
    fn weight_errors() {
        let w = GnnWeights::random(Header::standard(Arch::Gcn2d, 8), 3);
        let text = weights_to_json(&w);
        let truncated = &text[..text.len() / 2];
        assert!(matches!(parse_weights(truncated), Err(WeightsError::SchemaMismatch(_))));
        let parsed = parse_weights(&text).unwrap();
        assert!(matches!(
            parsed.check_features(cellplan_core::cellgraph::FEATURE_VERSION_3D),
            Err(WeightsError::FeatureVersionMismatch { .. })
        ));
        let bad = text.replacen("\"gcn2d\"", "\"mlp\"", 1);
        assert!(matches!(parse_weights(&bad), Err(WeightsError::SchemaMismatch(_))));
    }

    #[test]
    fn float_list_has_17_digits() {
        let raw = float_list(&[0.1, -2.0]);
        assert_eq!(raw.get(), "[1.0000000000000001e-1,-2.0000000000000000e0]");
    }
}
