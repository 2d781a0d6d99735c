//! Brute-force oracles shared by the property and acceptance tests.
#![allow(dead_code)]

use cellplan_core::cellgraph::{build_planar, CellGraph};
use cellplan_core::decomp2d::{triangulate, PlanarMap};
use cellplan_core::decomp3d::{slab_decompose, BoxMap, SlabDecomposition};
use cellplan_core::eval::{sampled_dp_2d, CorridorEvaluator, Funnel};
use cellplan_core::geom::{Aabb3, Point2, Point3};
use cellplan_core::scenarios::{generate, Family, ScenarioSpec};
use cellplan_core::search::{portal_weights, yen_k_shortest, Corridor, WeightedGraph};
use cellplan_core::validate::violations_2d;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Adjacency = Vec<Vec<(usize, usize)>>;

/// Undirected simple graph from `(a, b, weight)` triples; self loops and
/// repeated pairs are dropped.
pub fn simple_graph(n: usize, edges: &[(usize, usize, f64)]) -> (Adjacency, Vec<f64>) {
    let mut adj = vec![Vec::new(); n];
    let mut w = Vec::new();
    for &(a, b, c) in edges {
        if a == b || adj[a].iter().any(|&(x, _)| x == b) {
            continue;
        }
        let e = w.len();
        adj[a].push((b, e));
        adj[b].push((a, e));
        w.push(c);
    }
    (adj, w)
}

pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize, integer_weights: bool) -> (Adjacency, Vec<f64>) {
    let n = rng.random_range(2..=max_nodes);
    let p = rng.random_range(0.2..0.8);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                let w = if integer_weights { rng.random_range(1..5) as f64 } else { rng.random_range(0.1..3.0) };
                edges.push((a, b, w));
            }
        }
    }
    simple_graph(n, &edges)
}

/// Every simple `s`-`t` path with its cost, sorted by `(cost, nodes)`.
pub fn all_simple_paths(g: &WeightedGraph, s: usize, t: usize) -> Vec<Corridor> {
    fn dfs(g: &WeightedGraph, t: usize, path: &mut Vec<usize>, on: &mut [bool], out: &mut Vec<Corridor>) {
        let u = *path.last().unwrap();
        if u == t {
            out.push(Corridor { cost: g.path_cost(path), cells: path.clone() });
            return;
        }
        for &(v, _) in &g.adjacency[u] {
            if !on[v] {
                on[v] = true;
                path.push(v);
                dfs(g, t, path, on, out);
                path.pop();
                on[v] = false;
            }
        }
    }
    let mut on = vec![false; g.adjacency.len()];
    on[s] = true;
    let mut out = Vec::new();
    dfs(g, t, &mut vec![s], &mut on, &mut out);
    out.sort();
    out
}

/// Checks Yen's output against exhaustive enumeration: same cost sequence,
/// distinct loopless valid paths, and identical paths where costs are
/// unambiguous.
pub fn check_yen(adj: &Adjacency, w: &[f64], s: usize, t: usize, k: usize) -> Result<(), String> {
    let g = WeightedGraph { adjacency: adj, weights: w };
    let truth = all_simple_paths(&g, s, t);
    let got = match yen_k_shortest(&g, s, t, k, None) {
        Ok(v) => v,
        Err(_) if truth.is_empty() => return Ok(()),
        Err(e) => return Err(format!("yen failed: {e}")),
    };
    let want = &truth[..truth.len().min(k)];
    if got.len() != want.len() {
        return Err(format!("{} paths, expected {}", got.len(), want.len()));
    }
    for (i, (a, b)) in got.iter().zip(want).enumerate() {
        if a.cost != b.cost {
            return Err(format!("path {i}: cost {} vs {}", a.cost, b.cost));
        }
        let mut seen = a.cells.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != a.cells.len() || a.cells[0] != s || *a.cells.last().unwrap() != t {
            return Err(format!("path {i} is not a simple s-t path: {:?}", a.cells));
        }
        if a.cost != g.path_cost(&a.cells) {
            return Err(format!("path {i} reports a wrong cost"));
        }
        let tie_free = truth.iter().filter(|c| c.cost == b.cost).count() == 1;
        if tie_free && a.cells != b.cells {
            return Err(format!("path {i}: {:?} vs {:?}", a.cells, b.cells));
        }
    }
    for i in 0..got.len() {
        for j in i + 1..got.len() {
            if got[i].cells == got[j].cells {
                return Err("duplicate path".into());
            }
        }
    }
    Ok(())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_free_point(rng: &mut ChaCha8Rng, map: &PlanarMap) -> Point2 {
    loop {
        let b = map.bounds;
        let p = Point2::new(rng.random_range(b.min.x..b.max.x), rng.random_range(b.min.y..b.max.y));
        if map.is_free(p) && b.distance_to_boundary(p) > 1e-3 {
            return p;
        }
    }
}

/// Forest map with a random query and its cell graph.
pub fn random_planar_instance(seed: u64) -> (PlanarMap, CellGraph) {
    let mut r = rng(seed);
    let spec = ScenarioSpec { obstacles: Some(r.random_range(3..15)), ..ScenarioSpec::new(Family::Forest, seed) };
    let s = generate(&spec).expect("forest generates");
    let cellplan_core::pipeline::Workspace::Planar(map) = s.workspace else { unreachable!() };
    let qs = random_free_point(&mut r, &map);
    let qg = random_free_point(&mut r, &map);
    let tri = triangulate(&map).expect("valid map");
    let g = build_planar(&tri, &map, qs, qg).expect("free query");
    (map, g)
}

/// Outcome of evaluating one corridor with the funnel and the dense DP.
#[derive(Debug, Clone, Copy)]
pub struct CorridorCheck {
    pub funnel: f64,
    pub dp: f64,
    pub straight: f64,
    pub violations: usize,
}

impl CorridorCheck {
    pub fn ok(&self) -> bool {
        self.funnel <= self.dp + 1e-4 && self.funnel >= self.straight - 1e-12 && self.violations == 0
    }
}

/// Up to `k` corridors of a planar graph, each checked against the
/// reference DP with `per_portal` samples.
pub fn check_corridors(map: &PlanarMap, g: &CellGraph, k: usize, per_portal: usize) -> Vec<CorridorCheck> {
    let w = portal_weights(g, None, 0.0);
    let wg = WeightedGraph { adjacency: &g.adjacency, weights: &w };
    let Ok(corridors) = yen_k_shortest(&wg, g.start, g.goal, k, None) else {
        return Vec::new();
    };
    let straight = Point2::new(g.qs.x, g.qs.y).dist(Point2::new(g.qg.x, g.qg.y));
    corridors
        .iter()
        .map(|c| {
            let sol = Funnel.evaluate(g, &c.cells).expect("corridor evaluates");
            CorridorCheck {
                funnel: sol.length,
                dp: sampled_dp_2d(g, &c.cells, per_portal).expect("dp evaluates"),
                straight,
                violations: violations_2d(&sol.waypoints, map, 200.0),
            }
        })
        .collect()
}

/// Random box map: bounds with uneven extents, boxes that may overlap each
/// other and cross the bounds.
pub fn random_box_map(seed: u64) -> BoxMap {
    let mut r = rng(seed);
    let ext = [r.random_range(0.5..2.0), r.random_range(0.5..2.0), r.random_range(0.5..2.0)];
    let bounds = Aabb3::new(Point3::new(0.0, 0.0, 0.0), Point3::new(ext[0], ext[1], ext[2]));
    let n = r.random_range(0..10);
    let mut boxes = Vec::with_capacity(n);
    for _ in 0..n {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for a in 0..3 {
            let size = r.random_range(0.05..0.5) * ext[a];
            let c = r.random_range(-0.1..1.1) * ext[a];
            // Snap some coordinates onto a coarse lattice so faces coincide.
            let mut snap = |v: f64| if r.random_bool(0.3) { (v * 8.0).round() / 8.0 } else { v };
            lo[a] = snap(c - size / 2.0);
            hi[a] = snap(c + size / 2.0).max(lo[a] + 0.01);
        }
        boxes.push(Aabb3::new(Point3::from_array(lo), Point3::from_array(hi)));
    }
    BoxMap::new(bounds, boxes)
}

/// Free volume by coordinate compression over all obstacle planes.
pub fn free_volume_oracle(map: &BoxMap) -> f64 {
    let b = map.bounds;
    let clipped: Vec<Aabb3> = map
        .obstacles
        .iter()
        .filter_map(|o| {
            let lo = Point3::new(o.min.x.max(b.min.x), o.min.y.max(b.min.y), o.min.z.max(b.min.z));
            let hi = Point3::new(o.max.x.min(b.max.x), o.max.y.min(b.max.y), o.max.z.min(b.max.z));
            (lo.x < hi.x && lo.y < hi.y && lo.z < hi.z).then(|| Aabb3::new(lo, hi))
        })
        .collect();
    let mut planes: [Vec<f64>; 3] = Default::default();
    for a in 0..3 {
        planes[a].push(b.min.axis(a));
        planes[a].push(b.max.axis(a));
        for o in &clipped {
            planes[a].push(o.min.axis(a));
            planes[a].push(o.max.axis(a));
        }
        planes[a].sort_by(f64::total_cmp);
        planes[a].dedup();
    }
    let mut free = 0.0;
    for x in planes[0].windows(2) {
        for y in planes[1].windows(2) {
            for z in planes[2].windows(2) {
                let c = Point3::new((x[0] + x[1]) / 2.0, (y[0] + y[1]) / 2.0, (z[0] + z[1]) / 2.0);
                if !clipped.iter().any(|o| o.contains(c)) {
                    free += (x[1] - x[0]) * (y[1] - y[0]) * (z[1] - z[0]);
                }
            }
        }
    }
    free
}

/// Result of checking one slab decomposition.
#[derive(Debug, Clone, Copy)]
pub struct SlabCheck {
    pub relative_volume_error: f64,
    /// Pairs of cells with overlapping interiors.
    pub overlapping_pairs: usize,
    /// Sample points covered by the wrong number of cells.
    pub coverage_errors: usize,
}

impl SlabCheck {
    pub fn ok(&self) -> bool {
        self.relative_volume_error <= 1e-9 && self.overlapping_pairs == 0 && self.coverage_errors == 0
    }
}

fn interior_overlap(a: &Aabb3, b: &Aabb3) -> bool {
    (0..3).all(|k| a.min.axis(k) < b.max.axis(k) && b.min.axis(k) < a.max.axis(k))
}

pub fn check_slabs(map: &BoxMap, d: &SlabDecomposition, samples: usize, seed: u64) -> SlabCheck {
    let truth = free_volume_oracle(map);
    let got = d.free_volume();
    let relative_volume_error = if truth == 0.0 { got.abs() } else { (got - truth).abs() / truth };
    let mut overlapping_pairs = 0;
    for i in 0..d.cells.len() {
        for j in i + 1..d.cells.len() {
            overlapping_pairs += usize::from(interior_overlap(&d.cells[i], &d.cells[j]));
        }
    }
    let mut r = rng(seed);
    let b = map.bounds;
    let mut coverage_errors = 0;
    for _ in 0..samples {
        let p = Point3::new(
            r.random_range(b.min.x..b.max.x),
            r.random_range(b.min.y..b.max.y),
            r.random_range(b.min.z..b.max.z),
        );
        let inside = d.cells.iter().filter(|c| c.contains_interior(p, 0.0)).count();
        let blocked = map.obstacles.iter().any(|o| o.contains(p));
        let on_face = d.cells.iter().any(|c| c.contains(p)) && inside == 0;
        if on_face {
            continue;
        }
        if inside > 1 || (inside == 1) == blocked {
            coverage_errors += 1;
        }
    }
    SlabCheck { relative_volume_error, overlapping_pairs, coverage_errors }
}

/// Decomposes a random box map; `None` when the obstacles fill the bounds.
pub fn random_slab_check(seed: u64) -> Option<SlabCheck> {
    let map = random_box_map(seed);
    let d = slab_decompose(&map).ok()?;
    Some(check_slabs(&map, &d, 2000, seed ^ 0xabc))
}
