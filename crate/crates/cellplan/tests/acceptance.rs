//! Runs every acceptance criterion and prints one PASS/FAIL line for each.

#[path = "../../core/tests/support/mod.rs"]
mod support;

mod common;

use std::io::Write;
use std::process::Command;
use std::time::Instant;

use cellplan::bench::{run_instance, BenchConfig, Instance};
use cellplan::formats::weights_to_json;
use cellplan_core::cbf::{execute_guarded, BarrierConfig, MAX_ACTIVE};
use cellplan_core::cellgraph::build_planar;
use cellplan_core::decomp2d::{triangulate, PlanarMap};
use cellplan_core::eval::{FaceSampler, Funnel};
use cellplan_core::geom::{point_segment_distance, Point2, Rect, Segment2, SimplePolygon};
use cellplan_core::gnn::{Arch, GnnWeights, Header};
use cellplan_core::math::median;
use cellplan_core::pipeline::run;
use cellplan_core::scenarios::{generate, Family, ScenarioSpec};
use cellplan_core::search::{plan, NoClock, PlannerConfig};
use cellplan_core::validate::post_validate;
use rand::Rng;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { name, pass, detail }
}

fn yen_oracle() -> Outcome {
    let t0 = Instant::now();
    let mut failures = Vec::new();
    for i in 0..500u64 {
        let mut r = support::rng(i);
        let (adj, w) = support::random_graph(&mut r, 12, i % 2 == 0);
        let n = adj.len();
        let k = 1 + (i as usize % 6);
        if let Err(e) = support::check_yen(&adj, &w, 0, n - 1, k) {
            failures.push(format!("graph {i}: {e}"));
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs < 60.0;
    outcome("yen oracle equivalence", pass, format!("500 graphs, {} mismatches, {secs:.2} s{}", failures.len(), failures.first().map_or(String::new(), |f| format!(", first: {f}"))))
}

fn funnel_optimality() -> Outcome {
    let mut checks = Vec::new();
    let mut seed = 0u64;
    while checks.len() < 300 {
        let (map, g) = support::random_planar_instance(seed);
        checks.extend(support::check_corridors(&map, &g, 4, 64));
        seed += 1;
    }
    checks.truncate(300);
    let bad = checks.iter().filter(|c| !c.ok()).count();
    let violations: usize = checks.iter().map(|c| c.violations).sum();
    let gap = checks.iter().map(|c| c.funnel - c.dp).fold(f64::NEG_INFINITY, f64::max);
    outcome(
        "funnel optimality",
        bad == 0,
        format!("300 corridors over {seed} maps, {bad} failing, max funnel-dp {gap:.3e}, {violations} violations"),
    )
}

fn slab_conservation() -> Outcome {
    let mut checks = Vec::new();
    let mut seed = 0u64;
    while checks.len() < 100 {
        if let Some(c) = support::random_slab_check(seed) {
            checks.push(c);
        }
        seed += 1;
    }
    let bad = checks.iter().filter(|c| !c.ok()).count();
    let err = checks.iter().map(|c| c.relative_volume_error).fold(0.0, f64::max);
    let overlaps: usize = checks.iter().map(|c| c.overlapping_pairs + c.coverage_errors).sum();
    outcome("slab conservation", bad == 0, format!("100 maps, max relative volume error {err:.2e}, {overlaps} overlap/coverage errors"))
}

struct RunStats {
    solved: bool,
    violations: usize,
    trace_decreasing: bool,
    unique_evaluations: bool,
    budget_exhausted: bool,
}

fn static_instances() -> Vec<(Family, u64)> {
    let mut v = Vec::new();
    for f in [Family::Forest, Family::Labyrinth, Family::Bottleneck2d, Family::MultiRoom] {
        v.extend((0..50).map(|s| (f, 1000 + s)));
    }
    for f in [Family::BnOffice3d, Family::BnMaze3d, Family::BnLayers3d, Family::DenseBnOffice3d, Family::DenseBnMaze3d] {
        v.extend((0..10).map(|s| (f, 1000 + s)));
    }
    v
}

fn solve(family: Family, seed: u64, guided: bool) -> RunStats {
    let s = generate(&ScenarioSpec::new(family, seed)).expect("scenario generates");
    let dim = s.workspace.dim();
    let arch = if dim == 2 { Arch::Gcn2d } else { Arch::Gatv2_3d };
    let w = guided.then(|| GnnWeights::random(Header::standard(arch, 16), seed));
    let cfg = if dim == 2 { PlannerConfig::default_2d() } else { PlannerConfig::default_3d(guided) };
    match run(&s.workspace, s.start, s.goal, w.as_ref(), &cfg, &FaceSampler::default(), &NoClock) {
        Ok((_, p)) => {
            let mut cells: Vec<&Vec<usize>> = p.evaluations().iter().map(|e| &e.cells).collect();
            let n = cells.len();
            cells.sort();
            cells.dedup();
            let c = p.counters();
            RunStats {
                solved: s.solvable,
                violations: post_validate(&p.waypoints(), &s.workspace, 200.0),
                trace_decreasing: p.trace().windows(2).all(|t| t[1].1 < t[0].1),
                unique_evaluations: cells.len() == n && c.phase1_evaluated + c.phase2_evaluated == n,
                budget_exhausted: c.budget_exhausted,
            }
        }
        Err(_) => RunStats {
            solved: false,
            violations: 0,
            trace_decreasing: true,
            unique_evaluations: true,
            budget_exhausted: false,
        },
    }
}

fn completeness_and_convergence() -> [Outcome; 2] {
    let insts = static_instances();
    let stats: Vec<(bool, RunStats)> = insts
        .iter()
        .flat_map(|&(f, seed)| [(f.dim() == 2, solve(f, seed, false)), (f.dim() == 2, solve(f, seed, seed % 2 == 0))])
        .collect();
    let unguided: Vec<&(bool, RunStats)> = stats.iter().step_by(2).collect();
    let solved2 = unguided.iter().filter(|(p, r)| *p && r.solved).count();
    let solved3 = unguided.iter().filter(|(p, r)| !*p && r.solved).count();
    let violations: usize = stats.iter().map(|(_, r)| r.violations).sum();
    let complete = solved2 == 200 && solved3 == 50 && violations == 0;
    let runs = stats.len();
    let decreasing = stats.iter().filter(|(_, r)| r.trace_decreasing).count();
    let unique = stats.iter().filter(|(_, r)| r.unique_evaluations).count();
    let exhausted = stats.iter().filter(|(_, r)| r.budget_exhausted).count();
    let converges = decreasing == runs && unique == runs && exhausted == runs;
    [
        outcome(
            "completeness",
            complete,
            format!("2D {solved2}/200, 3D {solved3}/50 solved unguided; {violations} violations over {runs} runs"),
        ),
        outcome(
            "convergence",
            converges,
            format!("{runs} runs: {decreasing} strictly decreasing traces, {unique} with single evaluations, {exhausted} budget exhausted"),
        ),
    ]
}

fn beta_zero_identical() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut same = 0;
    let mut total = 0;
    for (family, arch) in [
        ("forest", Arch::Gcn2d),
        ("labyrinth", Arch::Gcn2d),
        ("multi_room", Arch::Gcn2d),
        ("bn_office3d", Arch::Gatv2_3d),
        ("bn_maze3d", Arch::Gatv2_3d),
    ] {
        let w = GnnWeights::random(Header::standard(arch, 32), 5);
        let wp = dir.path().join(format!("{family}.weights.json"));
        std::fs::write(&wp, weights_to_json(&w)).unwrap();
        for seed in 0..2 {
            let mp = dir.path().join(format!("{family}-{seed}.json"));
            let bin = env!("CARGO_BIN_EXE_cellplan");
            let gen = Command::new(bin)
                .args(["gen-scenario", "--family", family, "--seed", &seed.to_string(), "--output"])
                .arg(&mp)
                .status()
                .unwrap();
            assert!(gen.success());
            let out = |extra: &str| {
                Command::new(bin)
                    .args(["plan", "--omit-timing", "--emit-corridors", "--map"])
                    .arg(&mp)
                    .args(["--model"])
                    .arg(&wp)
                    .arg(extra)
                    .args(if extra == "--beta" { vec!["0"] } else { vec![] })
                    .env_remove("CELLPLAN_MODEL")
                    .output()
                    .unwrap()
            };
            let a = out("--beta");
            let b = out("--unguided");
            total += 1;
            if a.status.success() && b.status.success() && a.stdout == b.stdout {
                same += 1;
            }
        }
    }
    outcome("beta 0 equals unguided", same == total, format!("{same}/{total} plan outputs byte-identical"))
}

fn bottleneck_speed() -> Outcome {
    let cfg = BenchConfig { guided: false, k: None, beta: 3.0, timeout_ms: Some(20_000) };
    let mut ttf = Vec::new();
    let mut cells = Vec::new();
    let mut ok = 0;
    for seed in 0..100 {
        let s = generate(&ScenarioSpec::new(Family::Bottleneck2d, seed)).unwrap();
        let inst = Instance {
            id: format!("bottleneck2d-{seed}"),
            family: "bottleneck2d".into(),
            seed,
            step: None,
            workspace: s.workspace,
            start: s.start,
            goal: s.goal,
        };
        let r = run_instance(&inst, &cfg, None, &FaceSampler::default());
        ok += usize::from(r.success && r.violations == 0);
        ttf.extend(r.time_to_first_ms);
        cells.push(r.cells as f64);
    }
    let m = median(&ttf).unwrap_or(f64::INFINITY);
    let c = median(&cells).unwrap_or(0.0);
    // One second target with a 2x allowance for slower machines.
    let pass = ok == 100 && m < 2000.0;
    outcome("bottleneck2d speed", pass, format!("{ok}/100 solved, median time-to-first {m:.1} ms, median {c:.0} cells"))
}

fn gnn_parity() -> Outcome {
    let a = common::golden("2d");
    let b = common::golden("3d");
    let worst = a.score_diff.max(b.score_diff);
    outcome(
        "gnn golden parity",
        worst <= 1e-4 && a.feature_diff < 1e-12 && b.feature_diff < 1e-12,
        format!("{} + {} portals, max score difference {worst:.2e}", a.portals, b.portals),
    )
}

fn cbf_safety() -> Outcome {
    let mut min_h = f64::INFINITY;
    let mut max_active = 0;
    let mut reached = 0;
    let mut errors = 0;
    for seed in 0..50u64 {
        let mut r = support::rng(seed);
        let width = r.random_range(0.035..0.05);
        let thick = r.random_range(0.01..0.05);
        let (x0, y0) = (r.random_range(0.3..0.6), r.random_range(0.2..0.8));
        let map = PlanarMap::new(
            Rect::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)),
            vec![
                SimplePolygon::rectangle(Point2::new(x0, 0.0), Point2::new(x0 + thick, y0 - width / 2.0)),
                SimplePolygon::rectangle(Point2::new(x0, y0 + width / 2.0), Point2::new(x0 + thick, 1.0)),
            ],
        );
        let radius = r.random_range(0.1..0.95) * width / 2.0;
        let corners = map.bounds.corners();
        let walls: Vec<Segment2> = map
            .obstacles
            .iter()
            .flat_map(|o| o.edges())
            .chain((0..4).map(|i| Segment2::new(corners[i], corners[(i + 1) % 4])))
            .collect();
        let mut pick = |lo: f64, hi: f64| loop {
            let p = Point2::new(r.random_range(lo..hi), r.random_range(0.0..1.0));
            if walls.iter().all(|&w| point_segment_distance(p, w) > radius) {
                return p;
            }
        };
        let qs = pick(0.0, x0);
        let qg = pick(x0 + thick, 1.0);
        let g = build_planar(&triangulate(&map).unwrap(), &map, qs, qg).unwrap();
        let path = plan(&g, None, &PlannerConfig::default_2d(), &Funnel, &NoClock).unwrap().best;
        match execute_guarded(&g, &path, &BarrierConfig::new(radius)) {
            Ok(tr) => {
                min_h = min_h.min(tr.min_h);
                max_active = max_active.max(tr.steps.iter().map(|s| s.active).max().unwrap_or(0));
                reached += usize::from(tr.reached_goal);
            }
            Err(_) => errors += 1,
        }
    }
    let pass = errors == 0 && min_h >= -1e-9 && max_active <= MAX_ACTIVE;
    outcome(
        "cbf safety",
        pass,
        format!("50 door runs, min h {min_h:.3e}, max active {max_active}, {reached} reached the goal, {errors} errors"),
    )
}

#[test]
fn acceptance() {
    let t0 = Instant::now();
    // Sequential, so the timed criteria do not compete for the CPU.
    let [complete, converge] = completeness_and_convergence();
    let results = vec![
        yen_oracle(),
        funnel_optimality(),
        slab_conservation(),
        complete,
        converge,
        beta_zero_identical(),
        bottleneck_speed(),
        gnn_parity(),
        cbf_safety(),
    ];

    let mut err = std::io::stderr().lock();
    for r in &results {
        writeln!(err, "[{}] {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail).unwrap();
    }
    let passed = results.iter().filter(|r| r.pass).count();
    writeln!(err, "acceptance: {passed}/{} criteria passed in {:.1?}", results.len(), t0.elapsed())
        .unwrap();
    let failed: Vec<&str> = results.iter().filter(|r| !r.pass).map(|r| r.name).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
