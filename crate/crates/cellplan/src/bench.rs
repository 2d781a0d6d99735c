//! Benchmark instances, records and their versioned CSV form.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use cellplan_core::eval::FaceSampler;
use cellplan_core::geom::Point3;
use cellplan_core::gnn::GnnWeights;
use cellplan_core::math::median;
use cellplan_core::pipeline::{build_graph, plan_graph, Workspace};
use cellplan_core::scenarios::{generate, generate_dynamic, DynamicSpec, Family, ScenarioSpec};
use cellplan_core::search::{Clock, PlannerConfig};
use cellplan_core::validate::post_validate;
use serde::{Deserialize, Serialize};

use crate::formats::{load_map, point_from_slice, FormatError};
use crate::StdClock;

/// Value of the `schema_version` column.
pub const CSV_SCHEMA_VERSION: u32 = 1;
/// Post-validation density, samples per unit length.
pub const VALIDATION_DENSITY: f64 = 200.0;

/// One entry of a benchmark scenario file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    /// Generator family; exclusive with `map` and `dynamic`.
    #[serde(default)]
    pub family: Option<String>,
    #[serde(default)]
    pub obstacles: Option<usize>,
    #[serde(default)]
    pub clutter: Option<usize>,
    #[serde(default)]
    pub door_width: Option<f64>,
    #[serde(default)]
    pub grid: Option<usize>,
    /// Dynamic sequence; each step is one instance.
    #[serde(default)]
    pub dynamic: Option<DynamicEntry>,
    /// Map file, relative to the scenario file.
    #[serde(default)]
    pub map: Option<PathBuf>,
    #[serde(default)]
    pub start: Option<Vec<f64>>,
    #[serde(default)]
    pub goal: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicEntry {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_population")]
    pub obstacles: usize,
    #[serde(default)]
    pub rooms: bool,
}

fn default_steps() -> usize {
    10
}

fn default_population() -> usize {
    30
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub scenarios: Vec<ScenarioEntry>,
}

pub fn parse_scenarios(text: &str) -> Result<ScenarioFile, FormatError> {
    Ok(serde_json::from_str(text)?)
}

/// A concrete planning problem.
#[derive(Debug, Clone)]
pub struct Instance {
    pub id: String,
    pub family: String,
    pub seed: u64,
    pub step: Option<usize>,
    pub workspace: Workspace,
    pub start: Point3,
    pub goal: Point3,
}

/// Expands every entry into `runs` instances with seeds `seed_base + i`.
/// Map entries are instantiated once.
pub fn instances(file: &ScenarioFile, base_dir: &Path, runs: usize, seed_base: u64) -> Result<Vec<Instance>, FormatError> {
    let mut out = Vec::new();
    for (e_idx, e) in file.scenarios.iter().enumerate() {
        let kinds = [e.family.is_some(), e.dynamic.is_some(), e.map.is_some()];
        if kinds.iter().filter(|&&k| k).count() != 1 {
            return Err(FormatError::Invalid(format!(
                "scenario {e_idx} needs exactly one of `family`, `dynamic` or `map`"
            )));
        }
        if let Some(path) = &e.map {
            let doc = load_map(&base_dir.join(path))?;
            let dim = doc.workspace.dim();
            let query = match (&e.start, &e.goal) {
                (Some(s), Some(g)) => (point_from_slice(s, dim)?, point_from_slice(g, dim)?),
                _ => doc
                    .query
                    .ok_or_else(|| FormatError::Invalid(format!("scenario {e_idx} has no query")))?,
            };
            out.push(Instance {
                id: format!("map-{e_idx}"),
                family: "map".into(),
                seed: 0,
                step: None,
                workspace: doc.workspace,
                start: query.0,
                goal: query.1,
            });
            continue;
        }
        for i in 0..runs {
            let seed = seed_base + i as u64;
            if let Some(d) = &e.dynamic {
                let spec = DynamicSpec { seed, steps: d.steps, obstacles: d.obstacles, rooms: d.rooms };
                let dyn_scn = generate_dynamic(&spec).map_err(|err| FormatError::Invalid(err.to_string()))?;
                let family = if d.rooms { "dynamic_rooms" } else { "dynamic" };
                for (t, map) in dyn_scn.steps.into_iter().enumerate() {
                    out.push(Instance {
                        id: format!("{family}-{seed}-{t}"),
                        family: family.into(),
                        seed,
                        step: Some(t),
                        workspace: Workspace::Planar(map),
                        start: dyn_scn.start,
                        goal: dyn_scn.goal,
                    });
                }
                continue;
            }
            let name = e.family.as_deref().unwrap_or_default();
            let family =
                Family::parse(name).ok_or_else(|| FormatError::Invalid(format!("unknown family `{name}`")))?;
            let spec = ScenarioSpec {
                obstacles: e.obstacles,
                clutter: e.clutter,
                door_width: e.door_width,
                grid: e.grid,
                ..ScenarioSpec::new(family, seed)
            };
            let s = generate(&spec).map_err(|err| FormatError::Invalid(err.to_string()))?;
            out.push(Instance {
                id: format!("{name}-{seed}"),
                family: name.into(),
                seed,
                step: None,
                workspace: s.workspace,
                start: s.start,
                goal: s.goal,
            });
        }
    }
    Ok(out)
}

/// A planner setting to benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub guided: bool,
    /// `None` uses the dimension default.
    pub k: Option<usize>,
    pub beta: f64,
    pub timeout_ms: Option<u64>,
}

impl BenchConfig {
    pub fn label(&self) -> &'static str {
        if self.guided {
            "guided"
        } else {
            "unguided"
        }
    }

    pub fn planner(&self, dim: usize) -> PlannerConfig {
        let mut c = if dim == 2 { PlannerConfig::default_2d() } else { PlannerConfig::default_3d(self.guided) };
        if let Some(k) = self.k {
            c.k = k;
        }
        c.beta = self.beta;
        c.timeout = self.timeout_ms.map(std::time::Duration::from_millis);
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub schema_version: u32,
    pub scenario_id: String,
    pub family: String,
    pub seed: u64,
    pub step: Option<usize>,
    pub config: String,
    pub k: usize,
    pub beta: f64,
    pub success: bool,
    pub time_to_first_ms: Option<f64>,
    pub total_ms: f64,
    pub final_cost: Option<f64>,
    pub corridors_enumerated: usize,
    pub corridors_evaluated: usize,
    pub phase2_iterations: usize,
    pub budget_exhausted: bool,
    pub violations: usize,
    pub cells: usize,
    pub portals: usize,
    /// `time_ms:cost` pairs separated by `;`.
    pub trace: String,
    pub error: Option<String>,
}

impl BenchmarkRecord {
    /// Parses the `trace` column.
    pub fn trace_points(&self) -> Result<Vec<(f64, f64)>, FormatError> {
        if self.trace.is_empty() {
            return Ok(Vec::new());
        }
        self.trace
            .split(';')
            .map(|pair| {
                let (t, c) = pair
                    .split_once(':')
                    .ok_or_else(|| FormatError::Invalid(format!("bad trace entry `{pair}`")))?;
                let parse = |s: &str| s.parse::<f64>().map_err(|e| FormatError::Invalid(format!("{s}: {e}")));
                Ok((parse(t)?, parse(c)?))
            })
            .collect()
    }
}

fn format_trace(trace: &[(f64, f64)]) -> String {
    trace.iter().map(|(t, c)| format!("{t}:{c}")).collect::<Vec<_>>().join(";")
}

/// Runs one instance under one configuration. Timing covers decomposition,
/// graph construction, scoring and search.
pub fn run_instance(
    inst: &Instance,
    cfg: &BenchConfig,
    weights: Option<&GnnWeights>,
    sampler: &FaceSampler,
) -> BenchmarkRecord {
    let dim = inst.workspace.dim();
    let pc = cfg.planner(dim);
    let clock = StdClock::start();
    let mut rec = BenchmarkRecord {
        schema_version: CSV_SCHEMA_VERSION,
        scenario_id: inst.id.clone(),
        family: inst.family.clone(),
        seed: inst.seed,
        step: inst.step,
        config: cfg.label().into(),
        k: pc.k,
        beta: pc.beta,
        success: false,
        time_to_first_ms: None,
        total_ms: 0.0,
        final_cost: None,
        corridors_enumerated: 0,
        corridors_evaluated: 0,
        phase2_iterations: 0,
        budget_exhausted: false,
        violations: 0,
        cells: 0,
        portals: 0,
        trace: String::new(),
        error: None,
    };
    let g = match build_graph(&inst.workspace, inst.start, inst.goal) {
        Ok(g) => g,
        Err(e) => {
            rec.total_ms = clock.elapsed().as_secs_f64() * 1e3;
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    rec.cells = g.len();
    rec.portals = g.portals.len();
    let result = plan_graph(&g, if cfg.guided { weights } else { None }, &pc, sampler, &clock);
    rec.total_ms = clock.elapsed().as_secs_f64() * 1e3;
    match result {
        Ok(p) => {
            let trace: Vec<(f64, f64)> = p.trace().iter().map(|(t, c)| (t.as_secs_f64() * 1e3, *c)).collect();
            let c = p.counters();
            rec.success = true;
            rec.time_to_first_ms = trace.first().map(|t| t.0);
            rec.final_cost = Some(p.cost());
            rec.corridors_enumerated = c.phase1_enumerated + c.phase2_enumerated;
            rec.corridors_evaluated = c.phase1_evaluated + c.phase2_evaluated;
            rec.phase2_iterations = c.phase2_iterations;
            rec.budget_exhausted = c.budget_exhausted;
            rec.violations = post_validate(&p.waypoints(), &inst.workspace, VALIDATION_DENSITY);
            rec.trace = format_trace(&trace);
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

/// Runs every (instance, config) pair on `workers` threads. Records come
/// back in instance-major, config-minor order.
pub fn run_all(
    insts: &[Instance],
    configs: &[BenchConfig],
    weights: &dyn Fn(usize) -> Option<GnnWeights>,
    sampler: &FaceSampler,
    workers: usize,
) -> Vec<BenchmarkRecord> {
    let models: Vec<Option<GnnWeights>> = vec![weights(2), weights(3)];
    let jobs: Vec<(usize, usize)> = (0..insts.len()).flat_map(|i| (0..configs.len()).map(move |c| (i, c))).collect();
    let next = AtomicUsize::new(0);
    let results = Mutex::new(vec![None; jobs.len()]);
    std::thread::scope(|s| {
        for _ in 0..workers.max(1) {
            s.spawn(|| loop {
                let j = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(i, c)) = jobs.get(j) else { break };
                let inst = &insts[i];
                let w = models[inst.workspace.dim() - 2].as_ref();
                let rec = run_instance(inst, &configs[c], w, sampler);
                results.lock().expect("no worker panicked")[j] = Some(rec);
            });
        }
    });
    results.into_inner().expect("no worker panicked").into_iter().map(|r| r.expect("every job ran")).collect()
}

pub fn write_csv<W: std::io::Write>(out: W, records: &[BenchmarkRecord]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<BenchmarkRecord>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}

/// Per-config aggregate: `(config, successes, runs, median ttf, median cost)`.
pub fn summarize(records: &[BenchmarkRecord]) -> Vec<(String, usize, usize, Option<f64>, Option<f64>)> {
    let mut labels: Vec<&str> = records.iter().map(|r| r.config.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();
    labels
        .into_iter()
        .map(|l| {
            let rs: Vec<&BenchmarkRecord> = records.iter().filter(|r| r.config == l).collect();
            let ttf: Vec<f64> = rs.iter().filter_map(|r| r.time_to_first_ms).collect();
            let cost: Vec<f64> = rs.iter().filter_map(|r| r.final_cost).collect();
            let ok = rs.iter().filter(|r| r.success).count();
            (l.to_string(), ok, rs.len(), median(&ttf), median(&cost))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(trace: &str) -> BenchmarkRecord {
        BenchmarkRecord {
            schema_version: CSV_SCHEMA_VERSION,
            scenario_id: "forest-0".into(),
            family: "forest".into(),
            seed: 0,
            step: None,
            config: "unguided".into(),
            k: 8,
            beta: 3.0,
            success: true,
            time_to_first_ms: Some(1.5),
            total_ms: 4.25,
            final_cost: Some(1.2345678901234567),
            corridors_enumerated: 20,
            corridors_evaluated: 12,
            phase2_iterations: 3,
            budget_exhausted: true,
            violations: 0,
            cells: 300,
            portals: 330,
            trace: trace.into(),
            error: None,
        }
    }

    #[test]
    fn csv_round_trip() {
        let mut failed = record("");
        failed.success = false;
        failed.final_cost = None;
        failed.time_to_first_ms = None;
        failed.error = Some("no solution found".into());
        let rs = vec![record("1.5:1.3;2.25:1.2345678901234567"), failed];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("schema_version,scenario_id,"));
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rs);
        assert_eq!(back[0].trace_points().unwrap(), vec![(1.5, 1.3), (2.25, 1.2345678901234567)]);
    }

    #[test]
    fn empty_csv() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[]).unwrap();
        assert!(read_csv(buf.as_slice()).unwrap().is_empty());
    }

    #[test]
    fn scenario_entries_expand() {
        let file = parse_scenarios(
            r#"{"scenarios":[{"family":"forest","obstacles":5},{"dynamic":{"steps":3,"obstacles":10}}]}"#,
        )
        .unwrap();
        let insts = instances(&file, Path::new("."), 2, 7).unwrap();
        assert_eq!(insts.len(), 2 + 2 * 3);
        assert_eq!(insts[0].id, "forest-7");
        assert_eq!(insts[2].step, Some(0));
        assert!(parse_scenarios(r#"{"scenarios":[{"family":"forest","bogus":1}]}"#).is_err());
        let both = parse_scenarios(r#"{"scenarios":[{}]}"#).unwrap();
        assert!(instances(&both, Path::new("."), 1, 0).is_err());
    }

    #[test]
    fn unguided_run_succeeds() {
        let file = parse_scenarios(r#"{"scenarios":[{"family":"multi_room"}]}"#).unwrap();
        let insts = instances(&file, Path::new("."), 2, 0).unwrap();
        let cfg = BenchConfig { guided: false, k: None, beta: 3.0, timeout_ms: None };
        let recs = run_all(&insts, &[cfg], &|_| None, &FaceSampler::default(), 2);
        assert_eq!(recs.len(), 2);
        for r in &recs {
            assert!(r.success && r.violations == 0, "{r:?}");
            let costs: Vec<f64> = r.trace_points().unwrap().iter().map(|p| p.1).collect();
            assert!(costs.windows(2).all(|w| w[1] < w[0]));
        }
    }
}
