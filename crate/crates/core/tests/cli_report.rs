use std::collections::{HashMap, HashSet};
use std::f64::consts::TAU;
use std::io::BufReader;
use std::path::Path;
use std::sync::OnceLock;

use isoembed::cli_report::*;
use isoembed::corrugation::CorrugationTable;
use isoembed::nash_step::{step, Phase, StepParams};
use isoembed::tensor_field::io::write_container;
use isoembed::tensor_field::{GridChart, ImmersionField, MetricField, ScalarField};

fn table() -> &'static CorrugationTable {
    static T: OnceLock<CorrugationTable> = OnceLock::new();
    T.get_or_init(|| CorrugationTable::with_defaults().unwrap())
}

fn problems(text: &str) -> Vec<String> {
    match parse_scenario_str(text, Path::new(".")) {
        Err(ReportError::Config(p)) => p,
        other => panic!("expected a configuration error, got {other:?}"),
    }
}

/// Flat torus, `g = 1.44 Id`, started at `g - u#e = g / 64` exactly, one
/// working pass at frequencies of 1 and 16 cycles.
fn torus_text(resolution: usize, depth: usize, extra: &str) -> String {
    let scale = (1.44f64 * (1.0 - 1.0 / 64.0)).sqrt();
    format!(
        r#"
name = "torus"
[chart]
resolution = {resolution}
[metric]
kind = "constant"
value = [1.44, 0.0, 1.44]
[initial]
kind = "scaled"
scale = {scale:?}
[schedule]
depth = {depth}
{extra}
[bootstrap]
delta = 0.015625
[[passes]]
lambda_1 = {TAU:?}
growth = 1.0
k_factor = 4.0
radius_scale = 1.0
frequencies = [[{TAU:?}, {f:?}]]
"#,
        f = 16.0 * TAU
    )
}

fn torus(resolution: usize, depth: usize, extra: &str) -> Scenario {
    parse_scenario_str(&torus_text(resolution, depth, extra), Path::new(".")).unwrap()
}

#[test]
fn minimal_scenario_echoes_defaults() {
    let s = parse_scenario_str("[metric]\nkind = \"constant\"\nvalue = [1.44, 0.0, 1.44]\n", Path::new(".")).unwrap();
    assert_eq!(s.metric, MetricSpec::Constant { value: [1.44, 0.0, 1.44] });
    assert_eq!(s.chart, ChartSpec::default());
    assert_eq!(s.schedule, ScheduleSpec::default());
    assert_eq!(s.initial, InitialSpec::Flat);
    let echo = s.echo();
    assert!(echo.contains("theta = \"0.15\""), "{echo}");
    assert!(echo.contains("resolution = 256"));
    let again = parse_scenario_str(&echo, Path::new(".")).unwrap();
    assert_eq!(again, s);
}

#[test]
fn rationals_accept_fractions_and_numbers() {
    let s = parse_scenario_str("[schedule]\ntheta = \"3/20\"\nalpha = 0.1\ntarget_theta = \"0.09\"\n", Path::new(".")).unwrap();
    assert_eq!(s.schedule.alpha.0, "0.1");
    let setup = s.setup().unwrap();
    assert_eq!(setup.params.theta.to_string(), "3/20");
    assert_eq!(setup.params.alpha.to_string(), "1/10");
    assert_eq!(setup.params.theta_target.unwrap().to_string(), "9/100");
}

#[test]
fn theta_at_or_above_one_fifth_is_rejected() {
    let p = problems("[schedule]\ntheta = 0.25\n");
    assert_eq!(p.len(), 1, "{p:?}");
    assert!(p[0].contains("1/5"), "{p:?}");
    assert_eq!(problems("[schedule]\ntheta = \"1/5\"\n").len(), 1);
    assert!(parse_scenario_str("[schedule]\ntheta = \"0.19999\"\n", Path::new(".")).is_ok());
}

#[test]
fn wavelength_rule_rejects_thin_grids() {
    let p = problems("[chart]\nresolution = 64\n[schedule]\nlambda_budget = 128.0\n");
    assert_eq!(p.len(), 1, "{p:?}");
    assert!(p[0].contains("wavelength rule"), "{p:?}");
    // 2 pi 128 / 16 is the largest frequency 128 nodes carry
    let ok = format!(
        "[chart]\nresolution = 128\n[schedule]\nlambda_budget = {:?}\n[bootstrap]\ndelta = 0.0625\n",
        TAU * 8.0
    );
    assert!(parse_scenario_str(&ok, Path::new(".")).is_ok());
    // a searched delta* adds the bootstrap frequency 2 pi 3^2
    let p = problems(&format!("[chart]\nresolution = 128\n[schedule]\nlambda_budget = {:?}\n", TAU * 8.0));
    assert!(p.len() == 1 && p[0].contains(&format!("{:?}", TAU * 9.0)), "{p:?}");
}

#[test]
fn every_problem_is_listed_at_once() {
    let p = problems(
        "name = \"x\"\ncolour = 1\n[chart]\nresolution = 64\nresolutoin = 3\n[schedule]\ntheta = 0.3\nalpha = 2\nlambda_budget = 128\n[[passes]]\nlambda_1 = 1.0\ngrowth = 1.0\nk_factor = 2.0\nradius_scale = 1.0\nradius = 4\n",
    );
    let expect = ["unknown key `colour`", "`chart.resolutoin`", "`passes[0].radius`", "theta", "alpha", "wavelength rule"];
    for e in expect {
        assert!(p.iter().any(|m| m.contains(e)), "missing {e} in {p:?}");
    }
    assert_eq!(p.len(), expect.len(), "{p:?}");
}

#[test]
fn triangulation_indices_are_checked() {
    let p = problems("[chart]\nboundary = \"clamped\"\n[skeleton]\nkind = \"triangulation\"\nvertices = [[0.2, 0.2], [2.0, 0.5]]\nedges = [[0, 1], [1, 3]]\n");
    assert_eq!(p.len(), 2, "{p:?}");
}

#[test]
fn sampled_metric_loads_relative_to_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let chart = GridChart::torus(1.0, 128).unwrap();
    let g = MetricField::from_fn(&chart, |x| [1.0 + 0.1 * (TAU * x[0]).sin(), 0.05, 1.0]);
    write_container(&g, std::fs::File::create(dir.path().join("g.isof")).unwrap()).unwrap();
    let path = dir.path().join("s.toml");
    std::fs::write(&path, "[chart]\nresolution = 128\n[metric]\nkind = \"samples\"\npath = \"g.isof\"\n[bootstrap]\ndelta = 0.0625\n").unwrap();
    let s = parse_scenario(&path).unwrap();
    assert_eq!(s.setup().unwrap().g.values, g.values);
    std::fs::write(&path, "[chart]\nresolution = 256\n[metric]\nkind = \"samples\"\npath = \"g.isof\"\n").unwrap();
    assert!(matches!(parse_scenario(&path), Err(ReportError::Config(_))));
}

#[test]
fn two_by_two_grid_gives_two_triangles() {
    let v = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]];
    let mut buf = Vec::new();
    write_vertex_grid(&v, [2, 2], "unit square", &mut buf).unwrap();
    let mesh = read_obj(BufReader::new(&buf[..])).unwrap();
    assert_eq!(mesh.vertices.len(), 4);
    assert_eq!(mesh.faces.len(), 2);
    assert_eq!(mesh.vertices[3], [1.0, 1.0, 0.0]);
    // formatting is fixed: nine digits after the point
    let text = String::from_utf8(buf).unwrap();
    assert!(text.contains("v 1.000000000e0 1.000000000e0 0.000000000e0"), "{text}");

    let chart = GridChart::square(1.0, 8).unwrap();
    let mut buf = Vec::new();
    write_obj(&ImmersionField::flat(&chart, 1.0), &mut buf).unwrap();
    let mesh = read_obj(BufReader::new(&buf[..])).unwrap();
    assert_eq!((mesh.vertices.len(), mesh.faces.len()), (64, 98));
}

/// Periodic torus of revolution with one corrugation on top.
fn corrugated_torus(n: usize) -> ImmersionField {
    let chart = GridChart::torus(1.0, n).unwrap();
    let (big, small) = (1.2 / TAU, 0.6 / TAU);
    let u = ImmersionField::from_fn(&chart, |x| {
        let (a, b) = (TAU * x[0], TAU * x[1]);
        let r = big + small * b.cos();
        [r * a.cos(), r * a.sin(), small * b.sin()]
    });
    let rho = ScalarField::constant(&chart, 0.05);
    let phase = Phase::linear(&chart, [1.0, 0.0]);
    let p = StepParams {
        gamma: 8.0,
        ..StepParams::new(TAU * 8.0)
    };
    step(&u, &rho, &phase, &p, table()).unwrap().v
}

/// Undirected edge multiplicities after merging vertices with equal positions.
fn welded_edge_counts(mesh: &ObjMesh) -> HashMap<(usize, usize), usize> {
    let mut ids: HashMap<[u64; 3], usize> = HashMap::new();
    let weld: Vec<usize> = mesh
        .vertices
        .iter()
        .map(|p| {
            let key = p.map(f64::to_bits);
            let next = ids.len();
            *ids.entry(key).or_insert(next)
        })
        .collect();
    let mut edges = HashMap::new();
    for f in &mesh.faces {
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            let (a, b) = (weld[a], weld[b]);
            *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    edges
}

#[test]
fn corrugated_torus_mesh_is_watertight_after_welding() {
    let n = 128;
    let v = corrugated_torus(n);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("torus.obj");
    export_mesh(&v, &path).unwrap();
    let mesh = read_obj(BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
    assert_eq!(mesh.vertices.len(), (n + 1) * (n + 1));
    assert_eq!(mesh.faces.len(), 2 * n * n);
    let edges = welded_edge_counts(&mesh);
    assert!(edges.values().all(|&c| c == 2));
    // 3 edges per cell on a closed grid
    assert_eq!(edges.len(), 3 * n * n);
    let distinct: HashSet<[u64; 3]> = mesh.vertices.iter().map(|p| p.map(f64::to_bits)).collect();
    assert_eq!(distinct.len(), n * n);

    // re-import reproduces the positions
    for (p, q) in mesh.vertices.iter().zip(mesh_vertices(&v)) {
        for c in 0..3 {
            assert!((p[c] - q[c]).abs() <= 1e-9 * q[c].abs().max(1.0));
        }
    }
}

#[test]
fn equivariant_seams_are_shifted_by_the_drift() {
    let chart = GridChart::torus(2.0, 8).unwrap();
    let u = ImmersionField::flat(&chart, 0.5);
    let v = mesh_vertices(&u);
    assert_eq!(mesh_shape(&u), [9, 9]);
    // last column sits one period (times the scale) past the first
    assert_eq!(v[8], [1.0, 0.0, 0.0]);
    assert_eq!(v[9 * 8 + 8], [1.0, 1.0, 0.0]);
}

#[test]
fn dry_run_plans_without_computing() {
    let dir = tempfile::tempdir().unwrap();
    let s = torus(512, 4, "");
    let r = dry_run(&s, dir.path()).unwrap();
    assert_eq!(r.status, RunStatus::DryRun);
    assert_eq!(r.exit_code(), EXIT_OK);
    let plan = r.plan.unwrap();
    assert_eq!(plan.nodes, 512 * 512);
    assert_eq!(plan.working_passes, 1);
    assert_eq!(plan.theta_chain, ["3/20", "375/3844"]);
    assert_eq!(plan.levels.len(), 4);
    assert!((plan.levels[0].nodes_per_wavelength - 32.0).abs() < 1e-9);
    assert!(plan.estimated_peak_bytes > 512 * 512 * 8);
    assert!(dir.path().join("summary.json").exists());
    assert!(!dir.path().join("history.jsonl").exists());
}

#[test]
fn small_amplitude_fails_with_calibrated_suggestion() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&torus(256, 1, "amplitude = 2.0"), dir.path(), table()).unwrap();
    assert_eq!(r.status, RunStatus::AssertionFailed);
    assert_eq!(r.exit_code(), EXIT_ASSERTION);
    assert!(r.assertions.failures.iter().any(|f| f.contains("schedule ordering")), "{:?}", r.assertions);
    // delta_2 / delta_1 = 1/4 at the minimal A: ln A = ln 2 / (theta (b - 1)) + ln delta_1 / (2 theta)
    let (theta, b, delta1) = (0.15f64, 1.24f64, 1.0f64 / 64.0);
    let ln_min = 2f64.ln() / (theta * (b - 1.0)) + delta1.ln() / (2.0 * theta);
    let suggested = r.suggested_amplitude.unwrap();
    assert!(suggested.ln() >= ln_min - 1e-9 && suggested.ln() - ln_min < 1e-5, "{} vs {ln_min}", suggested.ln());
    let summary: serde_json::Value =
        serde_json::from_reader(std::fs::File::open(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "assertion_failed");
}

#[test]
fn torus_run_reports_a_decreasing_defect_column() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&torus(256, 4, ""), dir.path(), table()).unwrap();
    let lines: Vec<serde_json::Value> = std::fs::read_to_string(dir.path().join("history.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), r.history_lines);
    assert!(!lines.is_empty());
    let norms = r.final_norms.as_ref().unwrap();
    // the column starts from the defect delta* |g| of the strong start
    let mut column = vec![norms.bootstrap_delta * 1.44];
    column.extend(lines.iter().map(|l| l["sup_defect"].as_f64().unwrap()));
    assert!(column.windows(2).all(|w| w[1] < w[0]), "{column:?}");
    for key in ["delta", "desk_lambda", "rho_bands", "displacement", "holder_probe", "assertions_passed"] {
        assert!(lines[0].get(key).is_some(), "history lacks {key}");
    }
    // one working pass, stopped once 16 cycles no longer fit the grid
    let working: Vec<_> = r.passes.iter().filter(|p| !p.skipped).collect();
    assert_eq!(working.len(), 1);
    assert!(working[0].truncated.is_some());
    assert!(norms.displacement <= norms.displacement_budget);

    // meshes written mid-run passed the shortness audit of their stage
    for m in &r.meshes {
        if m.stage != "initial" && m.stage != "final" {
            assert!(m.file.is_none() || m.short, "{m:?}");
        }
        if let Some(f) = &m.file {
            assert!(dir.path().join(f).exists());
        }
    }
    assert!(r.meshes.iter().any(|m| m.stage == "final" && m.file.is_some()));
}

fn strip_timing(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(m) => {
            m.remove("wall_time");
            m.remove("peak_rss_bytes");
            m.values_mut().for_each(strip_timing);
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn outputs(dir: &Path) -> (Vec<serde_json::Value>, serde_json::Value, Vec<u8>) {
    let mut history: Vec<serde_json::Value> = std::fs::read_to_string(dir.join("history.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    history.iter_mut().for_each(strip_timing);
    let mut summary = serde_json::from_reader(std::fs::File::open(dir.join("summary.json")).unwrap()).unwrap();
    strip_timing(&mut summary);
    (history, summary, std::fs::read(dir.join("mesh_final.obj")).unwrap())
}

#[test]
fn identical_scenarios_give_identical_reports() {
    let s = torus(256, 1, "");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(&s, a.path(), table()).unwrap();
    run(&s, b.path(), table()).unwrap();
    assert!(outputs(a.path()) == outputs(b.path()));
}

#[test]
fn failing_configuration_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = Scenario::default();
    s.schedule.depth = 0;
    let r = run(&s, dir.path(), table()).unwrap();
    assert_eq!(r.status, RunStatus::ConfigError);
    assert_eq!(r.exit_code(), EXIT_CONFIG);
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn benchmarks_emit_records() {
    let steps = step_bench(256, &[16.0, 32.0], table()).unwrap();
    assert_eq!(steps.len(), 2);
    assert!(steps.iter().all(|r| r.sup_defect > 0.0 && r.c1_defect > 0.0 && r.c2_norm > 0.0));
    assert!(steps[1].sup_defect < steps[0].sup_defect);
    let line = serde_json::to_value(&steps[0]).unwrap();
    for key in ["lambda", "sup_defect", "c1_defect", "c2_norm", "wall_time"] {
        assert!(line.get(key).is_some());
    }
    let stages = stage_bench(512, &[8.0, 16.0], table()).unwrap();
    assert_eq!(stages[1].k_factor, Some(16.0));
    assert!((stages[1].lambda - TAU * 32.0).abs() < 1e-12);
    assert!(stages[1].sup_defect < stages[0].sup_defect);

    let check = conformal_check(64, 7, 0.3).unwrap();
    assert!(check.stats.residual_sup < 1e-6, "{:?}", check.stats);
    assert!(check.mu_bound_excess <= 1e-12);
    assert_eq!(conformal_check(64, 7, 0.3).unwrap().stats.iterations, check.stats.iterations);
}
