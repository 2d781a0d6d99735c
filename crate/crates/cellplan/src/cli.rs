//! Command definitions and their implementations.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cellplan_core::cbf::{execute_guarded, execute_unguarded, BarrierConfig};
use cellplan_core::eval::FaceSampler;
use cellplan_core::geom::Point3;
use cellplan_core::gnn::{score_portals, Arch, GnnWeights};
use cellplan_core::pipeline::{build_graph, decompose, plan_graph, Plan, Workspace};
use cellplan_core::scenarios::{generate, generate_dynamic, DynamicSpec, Family, ScenarioSpec};
use cellplan_core::search::{Clock, PlannerConfig};
use cellplan_core::{Error, SearchError};
use clap::{Args, Parser, Subcommand};

use crate::bench::{instances, parse_scenarios, run_all, summarize, write_csv, BenchConfig};
use crate::formats::{
    decomposition_to_json, dynamic_to_json, export_graph, load_map, load_weights, map_to_json, plan_to_json,
    point_from_slice, read_file, trajectory_to_json, FormatError,
};
use crate::StdClock;

/// Environment variable naming the default model file.
pub const MODEL_ENV: &str = "CELLPLAN_MODEL";

#[derive(Debug, Parser)]
#[command(name = "cellplan", version, about = "Cell-decomposition motion planner with learned portal scores")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan a path on a map.
    Plan(PlanArgs),
    /// Print the cell decomposition of a map.
    Decompose(DecomposeArgs),
    /// Generate a benchmark map or a dynamic sequence.
    GenScenario(GenArgs),
    /// Export the cell graph and its features for training.
    ExportGraph(ExportArgs),
    /// Run planner configurations over a scenario list and write CSV records.
    Benchmark(BenchArgs),
    /// Plan on a 2D map and track the path with the barrier guard.
    ExecuteCbf(CbfArgs),
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    /// Map JSON file.
    #[arg(long)]
    pub map: PathBuf,
    /// Start as `x,y` or `x,y,z`; defaults to the map's query.
    #[arg(long)]
    pub start: Option<String>,
    /// Goal as `x,y` or `x,y,z`; defaults to the map's query.
    #[arg(long)]
    pub goal: Option<String>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Weight file; falls back to the environment variable.
    #[arg(long, env = MODEL_ENV)]
    pub model: Option<PathBuf>,
    /// Ignore any model and plan on centroid distances.
    #[arg(long)]
    pub unguided: bool,
    /// Initial corridor budget; defaults to 8 in 2D, 16 (guided) or 32 in 3D.
    #[arg(long)]
    pub k: Option<usize>,
    /// Score modulation strength.
    #[arg(long, default_value_t = 3.0)]
    pub beta: f64,
    /// Wall-clock budget for the whole pipeline.
    #[arg(long)]
    pub timeout_ms: Option<u64>,
    /// Sample points per portal face (3D, perfect square).
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
    /// Re-sampling rounds per 3D corridor.
    #[arg(long, default_value_t = 3)]
    pub rounds: usize,
    /// Seed of the 3D re-sampling.
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub query: QueryArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Write JSON here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Leave wall-clock fields out of the output.
    #[arg(long)]
    pub omit_timing: bool,
    /// Include every evaluated corridor.
    #[arg(long)]
    pub emit_corridors: bool,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Map JSON file.
    #[arg(long)]
    pub map: PathBuf,
    /// Write JSON here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Map family (ignored with `--dynamic`).
    #[arg(long, default_value = "forest")]
    pub family: String,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Forest polygons or dynamic population.
    #[arg(long)]
    pub obstacles: Option<usize>,
    /// Clutter boxes or polygons, for families that place clutter.
    #[arg(long)]
    pub clutter: Option<usize>,
    /// Door or gap width.
    #[arg(long)]
    pub door_width: Option<f64>,
    /// Maze or labyrinth grid size.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Emit a dynamic sequence instead of a static map.
    #[arg(long)]
    pub dynamic: bool,
    /// Steps of a dynamic sequence.
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    /// Place dynamic obstacles inside a multi-room layout.
    #[arg(long)]
    pub rooms: bool,
    /// Write JSON here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub query: QueryArgs,
    /// Attach portal scores from this weight file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Write JSON here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Scenario list JSON.
    #[arg(long)]
    pub scenarios: PathBuf,
    /// Runs per generated scenario entry.
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// First generator seed; run i uses seed-base + i.
    #[arg(long, default_value_t = 0)]
    pub seed_base: u64,
    /// Weight files, one per dimension, comma separated or repeated.
    #[arg(long, env = MODEL_ENV, value_delimiter = ',')]
    pub model: Vec<PathBuf>,
    /// Configurations to run: `guided`, `unguided` or both.
    #[arg(long, value_delimiter = ',')]
    pub configs: Vec<String>,
    /// Initial corridor budget; defaults per dimension and configuration.
    #[arg(long)]
    pub k: Option<usize>,
    /// Score modulation strength.
    #[arg(long, default_value_t = 3.0)]
    pub beta: f64,
    /// Wall-clock budget per instance.
    #[arg(long, default_value_t = 20_000)]
    pub timeout_ms: u64,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CbfArgs {
    #[command(flatten)]
    pub query: QueryArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Robot radius.
    #[arg(long, default_value_t = 0.01)]
    pub radius: f64,
    /// Barrier decay rate.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Control period in seconds.
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// Nominal speed in workspace diagonals per second.
    #[arg(long, default_value_t = 1.0)]
    pub v_nom: f64,
    /// Track the path without the guard.
    #[arg(long)]
    pub unguarded: bool,
    /// Write JSON here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    NoSolution(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Internal(String),
}

impl AppError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            AppError::NoSolution(_) => 2,
            AppError::Input(_) => 3,
            AppError::Internal(_) => 1,
        })
    }
}

impl From<FormatError> for AppError {
    fn from(e: FormatError) -> Self {
        AppError::Input(e.to_string())
    }
}

impl From<Error> for AppError {
    fn from(e: Error) -> Self {
        match e {
            Error::Search(SearchError::NoSolution | SearchError::NoCorridor) => AppError::NoSolution(e.to_string()),
            Error::Search(SearchError::Eval(_)) | Error::Eval(_) | Error::Gnn(_) => AppError::Internal(e.to_string()),
            _ => AppError::Input(e.to_string()),
        }
    }
}

pub fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Plan(a) => cmd_plan(&a),
        Command::Decompose(a) => cmd_decompose(&a),
        Command::GenScenario(a) => cmd_gen_scenario(&a),
        Command::ExportGraph(a) => cmd_export_graph(&a),
        Command::Benchmark(a) => cmd_benchmark(&a),
        Command::ExecuteCbf(a) => cmd_execute_cbf(&a),
    }
}

fn parse_point(s: &str, dim: usize) -> Result<Point3, AppError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| AppError::Input(format!("bad point `{s}`: {e}")))?;
    Ok(point_from_slice(&v, dim)?)
}

fn load_query(q: &QueryArgs) -> Result<(Workspace, Point3, Point3), AppError> {
    let doc = load_map(&q.map)?;
    let dim = doc.workspace.dim();
    let (s, g) = match (&q.start, &q.goal) {
        (Some(s), Some(g)) => (parse_point(s, dim)?, parse_point(g, dim)?),
        (None, None) => doc
            .query
            .ok_or_else(|| AppError::Input("`--start` and `--goal` are required for maps without a query".into()))?,
        _ => return Err(AppError::Input("`--start` and `--goal` must be given together".into())),
    };
    Ok((doc.workspace, s, g))
}

fn arch_for(dim: usize) -> Arch {
    if dim == 2 {
        Arch::Gcn2d
    } else {
        Arch::Gatv2_3d
    }
}

fn load_model(path: &Path, dim: usize) -> Result<GnnWeights, AppError> {
    Ok(load_weights(path, arch_for(dim).feature_version())?)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), AppError> {
    let io = |e: std::io::Error| AppError::Input(format!("cannot write output: {e}"));
    match path {
        Some(p) => std::fs::write(p, text).map_err(io),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(io)?;
            out.write_all(b"\n").map_err(io)
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("output documents always serialize")
}

impl SearchArgs {
    /// Weights to use, or `None` for the unguided planner. A zero `beta`
    /// keeps the model but takes the unguided budget default.
    fn weights(&self, dim: usize) -> Result<Option<GnnWeights>, AppError> {
        match (&self.model, self.unguided) {
            (Some(p), false) => load_model(p, dim).map(Some),
            _ => Ok(None),
        }
    }

    fn planner(&self, dim: usize, guided: bool) -> Result<PlannerConfig, AppError> {
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(AppError::Input("`--beta` must be finite and non-negative".into()));
        }
        let guided = guided && self.beta > 0.0;
        let mut c = if dim == 2 { PlannerConfig::default_2d() } else { PlannerConfig::default_3d(guided) };
        if let Some(k) = self.k {
            c.k = k;
        }
        c.beta = self.beta;
        c.timeout = self.timeout_ms.map(std::time::Duration::from_millis);
        Ok(c)
    }

    fn sampler(&self) -> FaceSampler {
        FaceSampler { samples: self.samples, rounds: self.rounds, seed: self.seed }
    }
}

fn run_plan(
    q: &QueryArgs,
    s: &SearchArgs,
) -> Result<(Workspace, cellplan_core::cellgraph::CellGraph, Plan, f64), AppError> {
    let (ws, qs, qg) = load_query(q)?;
    let weights = s.weights(ws.dim())?;
    let cfg = s.planner(ws.dim(), weights.is_some())?;
    let clock = StdClock::start();
    let g = build_graph(&ws, qs, qg)?;
    let plan = plan_graph(&g, weights.as_ref(), &cfg, &s.sampler(), &clock)?;
    let ms = clock.elapsed().as_secs_f64() * 1e3;
    if let Some(w) = plan.gnn_warning() {
        eprintln!("warning: scoring failed, planned unguided: {w}");
    }
    Ok((ws, g, plan, ms))
}

pub fn cmd_plan(a: &PlanArgs) -> Result<(), AppError> {
    let (ws, _, plan, ms) = run_plan(&a.query, &a.search)?;
    let mut doc = plan_to_json(&plan, ws.dim(), (!a.omit_timing).then_some(ms), a.emit_corridors);
    if a.omit_timing {
        doc.trace.iter_mut().for_each(|t| t.time_ms = None);
    }
    write_output(a.output.as_deref(), &to_json(&doc))
}

pub fn cmd_decompose(a: &DecomposeArgs) -> Result<(), AppError> {
    let doc = load_map(&a.map)?;
    let g = match doc.query {
        Some((s, q)) => build_graph(&doc.workspace, s, q)?,
        None => decompose(&doc.workspace)?,
    };
    write_output(a.output.as_deref(), &decomposition_to_json(&g))
}

pub fn cmd_gen_scenario(a: &GenArgs) -> Result<(), AppError> {
    let text = if a.dynamic {
        let spec = DynamicSpec {
            steps: a.steps,
            obstacles: a.obstacles.unwrap_or(DynamicSpec::new(a.seed).obstacles),
            rooms: a.rooms,
            ..DynamicSpec::new(a.seed)
        };
        let d = generate_dynamic(&spec).map_err(|e| AppError::Input(e.to_string()))?;
        dynamic_to_json(&d)
    } else {
        let family = Family::parse(&a.family).ok_or_else(|| {
            let names: Vec<&str> = Family::ALL.iter().map(|f| f.as_str()).collect();
            AppError::Input(format!("unknown family `{}` (expected one of {})", a.family, names.join(", ")))
        })?;
        let spec = ScenarioSpec {
            obstacles: a.obstacles,
            clutter: a.clutter,
            door_width: a.door_width,
            grid: a.grid,
            ..ScenarioSpec::new(family, a.seed)
        };
        let s = generate(&spec).map_err(|e| AppError::Input(e.to_string()))?;
        if !s.solvable {
            eprintln!("warning: generated scenario is not solvable");
        }
        map_to_json(&s.workspace, Some((s.start, s.goal)))
    };
    write_output(a.output.as_deref(), &text)
}

pub fn cmd_export_graph(a: &ExportArgs) -> Result<(), AppError> {
    let (ws, qs, qg) = load_query(&a.query)?;
    let g = build_graph(&ws, qs, qg)?;
    let mut doc = export_graph(&g);
    if let Some(p) = &a.model {
        let w = load_model(p, ws.dim())?;
        doc.scores = Some(score_portals(&g, &w).map_err(Error::from)?);
    }
    write_output(a.output.as_deref(), &to_json(&doc))
}

pub fn cmd_benchmark(a: &BenchArgs) -> Result<(), AppError> {
    let file = parse_scenarios(&read_file(&a.scenarios)?)?;
    let base = a.scenarios.parent().unwrap_or(Path::new("."));
    let insts = instances(&file, base, a.runs, a.seed_base)?;

    let mut models: [Option<GnnWeights>; 2] = [None, None];
    for p in &a.model {
        let w = crate::formats::parse_weights(&read_file(p)?).map_err(FormatError::from)?;
        let dim = if w.header.arch == Arch::Gcn2d { 2 } else { 3 };
        w.check_features(arch_for(dim).feature_version()).map_err(FormatError::from)?;
        models[dim - 2] = Some(w);
    }

    let labels: Vec<String> = if a.configs.is_empty() {
        let mut l = vec!["unguided".to_string()];
        if models.iter().any(Option::is_some) {
            l.insert(0, "guided".into());
        }
        l
    } else {
        a.configs.clone()
    };
    let mut configs = Vec::new();
    for l in &labels {
        let guided = match l.as_str() {
            "guided" => true,
            "unguided" => false,
            other => return Err(AppError::Input(format!("unknown config `{other}`"))),
        };
        configs.push(BenchConfig { guided, k: a.k, beta: a.beta, timeout_ms: Some(a.timeout_ms) });
    }
    if configs.iter().any(|c| c.guided) {
        if let Some(i) = insts.iter().find(|i| models[i.workspace.dim() - 2].is_none()) {
            return Err(AppError::Input(format!(
                "guided config needs a {}D model for scenario `{}`",
                i.workspace.dim(),
                i.id
            )));
        }
    }

    let workers = a.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let records = run_all(&insts, &configs, &|d| models[d - 2].clone(), &FaceSampler::default(), workers);

    let mut buf = Vec::new();
    write_csv(&mut buf, &records).map_err(|e| AppError::Internal(e.to_string()))?;
    let text = String::from_utf8(buf).expect("CSV output is UTF-8");
    match &a.output {
        Some(p) => std::fs::write(p, &text).map_err(|e| AppError::Input(format!("cannot write output: {e}")))?,
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| AppError::Input(format!("cannot write output: {e}")))?,
    }
    for (label, ok, n, ttf, cost) in summarize(&records) {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
        eprintln!("{label}: success {ok}/{n}, median time-to-first {} ms, median cost {}", f(ttf), f(cost));
    }
    Ok(())
}

pub fn cmd_execute_cbf(a: &CbfArgs) -> Result<(), AppError> {
    let (ws, g, plan, _) = run_plan(&a.query, &a.search)?;
    let Plan::Planar(r) = plan else {
        return Err(AppError::Input("execute-cbf needs a 2D map".into()));
    };
    let cfg = BarrierConfig {
        gamma: a.gamma,
        dt: a.dt,
        v_nom: a.v_nom * ws.diagonal(),
        ..BarrierConfig::new(a.radius)
    };
    let tr = if a.unguarded { execute_unguarded(&g, &r.best, &cfg) } else { execute_guarded(&g, &r.best, &cfg) }
        .map_err(|e| AppError::from(Error::from(e)))?;
    write_output(a.output.as_deref(), &to_json(&trajectory_to_json(&tr, &cfg)))
}
