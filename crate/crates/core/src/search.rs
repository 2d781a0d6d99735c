//! Score-modulated edge weights, Yen's k-shortest loopless paths and the
//! two-phase corridor planner.

use alloc::collections::{BTreeSet, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::time::Duration;

use crate::cellgraph::{flat, CellGraph, PortalShape};
use crate::error::{GnnError, SearchError};
use crate::eval::{CorridorEvaluator, PathSolution};
use crate::geom::{ellipse_min_sum_face, ellipse_min_sum_segment};
use crate::gnn::{score_or_zero, GnnWeights};
use crate::math;

/// Slack added to the incumbent cost when filtering portals.
pub const ELLIPSE_SLACK: f64 = 1e-9;

/// `d * exp(-beta * s)`.
#[inline]
pub fn modulated_weight(d: f64, s: f64, beta: f64) -> f64 {
    d * math::exp(-beta * s)
}

/// Per-portal weights: centroid distance, optionally modulated by scores.
pub fn portal_weights(g: &CellGraph, scores: Option<&[f64]>, beta: f64) -> Vec<f64> {
    (0..g.portals.len())
        .map(|p| {
            let d = g.centroid_distance(p);
            match scores {
                Some(s) => modulated_weight(d, s[p], beta),
                None => d,
            }
        })
        .collect()
}

/// An ordered cell sequence with its graph cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Corridor {
    pub cells: Vec<usize>,
    pub cost: f64,
}

impl Eq for Corridor {}

impl Ord for Corridor {
    fn cmp(&self, o: &Self) -> Ordering {
        self.cost.total_cmp(&o.cost).then_with(|| self.cells.cmp(&o.cells))
    }
}

impl PartialOrd for Corridor {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Adjacency lists of `(neighbor, edge)` with one weight per edge id.
/// Parallel edges between the same pair of nodes are not supported.
#[derive(Debug, Clone, Copy)]
pub struct WeightedGraph<'a> {
    pub adjacency: &'a [Vec<(usize, usize)>],
    pub weights: &'a [f64],
}

impl WeightedGraph<'_> {
    fn edge(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a].iter().find(|&&(n, _)| n == b).map(|&(_, e)| e)
    }

    /// Sum of edge weights along `path`, accumulated front to back.
    pub fn path_cost(&self, path: &[usize]) -> f64 {
        let mut c = 0.0;
        for w in path.windows(2) {
            c += self.weights[self.edge(w[0], w[1]).expect("path edge")];
        }
        c
    }
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Shortest path from `s` to `t` avoiding removed nodes and edges. Ties are
/// broken towards the lexicographically smallest node sequence.
fn shortest_path(
    g: &WeightedGraph,
    s: usize,
    t: usize,
    node_ok: &[bool],
    edge_ok: &dyn Fn(usize) -> bool,
) -> Option<Vec<usize>> {
    let n = g.adjacency.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    dist[t] = 0.0;
    heap.push(HeapItem(0.0, t));
    while let Some(HeapItem(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, e) in &g.adjacency[u] {
            if !node_ok[v] || !edge_ok(e) {
                continue;
            }
            let nd = d + g.weights[e];
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(HeapItem(nd, v));
            }
        }
    }
    if !dist[s].is_finite() {
        return None;
    }
    let mut path = vec![s];
    let mut cur = s;
    while cur != t {
        let mut best: Option<(f64, usize)> = None;
        for &(v, e) in &g.adjacency[cur] {
            if !node_ok[v] || !edge_ok(e) || !(dist[v] < dist[cur]) {
                continue;
            }
            let val = g.weights[e] + dist[v];
            let better = match best {
                None => true,
                Some((bv, bn)) => val < bv || (val == bv && v < bn),
            };
            if better {
                best = Some((val, v));
            }
        }
        cur = best?.1;
        path.push(cur);
    }
    Some(path)
}

/// Up to `k` loopless paths from `s` to `t` in nondecreasing cost, ties
/// ordered by node sequence. `allowed` filters edges by id.
pub fn yen_k_shortest(
    g: &WeightedGraph,
    s: usize,
    t: usize,
    k: usize,
    allowed: Option<&[bool]>,
) -> Result<Vec<Corridor>, SearchError> {
    if k == 0 {
        return Err(SearchError::InvalidBudget);
    }
    if s == t {
        return Ok(vec![Corridor { cells: vec![s], cost: 0.0 }]);
    }
    let n = g.adjacency.len();
    let all = vec![true; n];
    let base_ok = |e: usize| allowed.is_none_or(|a| a[e]);
    let first = shortest_path(g, s, t, &all, &base_ok).ok_or(SearchError::NoCorridor)?;
    let mut found = vec![Corridor { cost: g.path_cost(&first), cells: first }];
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    seen.insert(found[0].cells.clone());
    let mut candidates: BTreeSet<Corridor> = BTreeSet::new();
    let mut node_ok = vec![true; n];

    while found.len() < k {
        let prev = found[found.len() - 1].cells.clone();
        for i in 0..prev.len() - 1 {
            let spur = prev[i];
            let root = &prev[..=i];
            let mut banned: Vec<usize> = Vec::new();
            for p in &found {
                if p.cells.len() > i + 1 && p.cells[..=i] == *root {
                    if let Some(e) = g.edge(p.cells[i], p.cells[i + 1]) {
                        banned.push(e);
                    }
                }
            }
            node_ok.iter_mut().for_each(|b| *b = true);
            for &r in &root[..i] {
                node_ok[r] = false;
            }
            let edge_ok = |e: usize| base_ok(e) && !banned.contains(&e);
            if let Some(tail) = shortest_path(g, spur, t, &node_ok, &edge_ok) {
                let mut cells = root[..i].to_vec();
                cells.extend(tail);
                if !seen.contains(&cells) {
                    seen.insert(cells.clone());
                    candidates.insert(Corridor { cost: g.path_cost(&cells), cells });
                }
            }
        }
        match candidates.pop_first() {
            Some(c) => found.push(c),
            None => break,
        }
    }
    found.sort();
    Ok(found)
}

/// Wall-clock source for timeouts; `core` has no clock of its own.
pub trait Clock {
    fn elapsed(&self) -> Duration;
}

/// A clock that never advances: the planner runs to completion.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed(&self) -> Duration {
        Duration::ZERO
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerConfig {
    pub k: usize,
    pub beta: f64,
    pub timeout: Option<Duration>,
}

impl PlannerConfig {
    pub fn default_2d() -> Self {
        Self { k: 8, beta: 3.0, timeout: None }
    }

    pub fn default_3d(guided: bool) -> Self {
        Self { k: if guided { 16 } else { 32 }, beta: 3.0, timeout: None }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PhaseCounters {
    pub phase1_enumerated: usize,
    pub phase1_evaluated: usize,
    pub phase2_enumerated: usize,
    pub phase2_evaluated: usize,
    pub phase2_iterations: usize,
    /// Budget reached when the refinement loop stopped.
    pub final_budget: usize,
    /// The loop ended by exhausting the budget rather than by timeout.
    pub budget_exhausted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub cells: Vec<usize>,
    pub length: f64,
    pub phase: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult<P> {
    pub best: PathSolution<P>,
    pub cost: f64,
    /// Phase (1 or 2) and evaluation index that produced the best path.
    pub phase: u8,
    pub evaluation_index: usize,
    pub counters: PhaseCounters,
    /// `(elapsed, cost)` at each improvement.
    pub trace: Vec<(Duration, f64)>,
    pub evaluations: Vec<Evaluation>,
    pub scores: Option<Vec<f64>>,
    pub gnn_warning: Option<GnnError>,
}

/// `min_{x in portal} |x - qs| + |x - qg|` for every portal.
pub fn portal_focal_sums(g: &CellGraph) -> Vec<f64> {
    g.portals
        .iter()
        .map(|p| match p.shape {
            PortalShape::Segment(s) => ellipse_min_sum_segment(s, flat(g.qs), flat(g.qg)),
            PortalShape::Face(f) => ellipse_min_sum_face(&f, g.qs, g.qg),
        })
        .collect()
}

struct State<P> {
    best: Option<(PathSolution<P>, u8, usize)>,
    cost: f64,
    seen: BTreeSet<Vec<usize>>,
    trace: Vec<(Duration, f64)>,
    evaluations: Vec<Evaluation>,
}

impl<P: Clone> State<P> {
    fn record(&mut self, sol: PathSolution<P>, phase: u8, now: Duration) -> bool {
        self.evaluations.push(Evaluation { cells: sol.corridor.clone(), length: sol.length, phase });
        if sol.length < self.cost {
            self.cost = sol.length;
            self.trace.push((now, sol.length));
            self.best = Some((sol, phase, self.evaluations.len() - 1));
            true
        } else {
            false
        }
    }
}

/// Two-phase corridor search.
pub fn plan<E: CorridorEvaluator>(
    g: &CellGraph,
    weights: Option<&GnnWeights>,
    cfg: &PlannerConfig,
    evaluator: &E,
    clock: &dyn Clock,
) -> Result<PlanResult<E::Point>, SearchError> {
    if cfg.k == 0 {
        return Err(SearchError::InvalidBudget);
    }
    let timed_out = || cfg.timeout.is_some_and(|t| clock.elapsed() >= t);
    let (scores, warning) = match weights {
        Some(w) => {
            let (s, e) = score_or_zero(g, w);
            (Some(s), e)
        }
        None => (None, None),
    };
    let w = portal_weights(g, scores.as_deref(), cfg.beta);
    let wg = WeightedGraph { adjacency: &g.adjacency, weights: &w };
    let mut counters = PhaseCounters::default();
    let mut st: State<E::Point> = State {
        best: None,
        cost: f64::INFINITY,
        seen: BTreeSet::new(),
        trace: Vec::new(),
        evaluations: Vec::new(),
    };

    let first = match yen_k_shortest(&wg, g.start, g.goal, cfg.k, None) {
        Ok(c) => c,
        Err(SearchError::NoCorridor) => return Err(SearchError::NoSolution),
        Err(e) => return Err(e),
    };
    counters.phase1_enumerated = first.len();
    for (i, c) in first.iter().enumerate() {
        // The first corridor is always evaluated so a timeout still yields a path.
        if i > 0 && timed_out() {
            break;
        }
        let sol = evaluator.evaluate(g, &c.cells)?;
        st.seen.insert(c.cells.clone());
        counters.phase1_evaluated += 1;
        st.record(sol, 1, clock.elapsed());
    }

    let sums = portal_focal_sums(g);
    let mut budget = cfg.k;
    'refine: while !timed_out() {
        let allowed: Vec<bool> = sums.iter().map(|&s| s <= st.cost + ELLIPSE_SLACK).collect();
        let batch = match yen_k_shortest(&wg, g.start, g.goal, budget, Some(&allowed)) {
            Ok(b) => b,
            Err(_) => break,
        };
        counters.phase2_iterations += 1;
        counters.phase2_enumerated += batch.len();
        let mut improved = false;
        for c in batch {
            if st.seen.contains(&c.cells) {
                continue;
            }
            if timed_out() {
                break 'refine;
            }
            let sol = evaluator.evaluate(g, &c.cells)?;
            st.seen.insert(c.cells);
            counters.phase2_evaluated += 1;
            improved |= st.record(sol, 2, clock.elapsed());
        }
        if !improved {
            budget = (2 * budget).min(4 * cfg.k);
            if budget == 4 * cfg.k {
                counters.budget_exhausted = true;
                break;
            }
        }
    }
    counters.final_budget = budget;

    let (best, phase, evaluation_index) = st.best.ok_or(SearchError::NoSolution)?;
    Ok(PlanResult {
        cost: best.length,
        best,
        phase,
        evaluation_index,
        counters,
        trace: st.trace,
        evaluations: st.evaluations,
        scores,
        gnn_warning: warning,
    })
}
