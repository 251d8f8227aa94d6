//! Runs a scenario end to end and writes `history.jsonl`, `summary.json`
//! and OBJ meshes into the output directory.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::mesh::export_mesh;
use super::scenario::{Scenario, Setup};
use super::ReportError;
use crate::adapted_induction::{
    build_schedule, calibrate_amplitude, exponent_chain, min_defect_eigenvalue, minimal_ln_amplitude, run_global,
    to_f64, Amplitude, Certificate, HistoryWriter, InductionError, PassReport, ScheduleSummary,
};
use crate::corrugation::CorrugationTable;
use crate::nash_step::bootstrap_strong;
use crate::tensor_field::ImmersionField;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

/// Shortness audit tolerance on the smallest defect eigenvalue.
const SHORT_TOLERANCE: f64 = 1e-10;

/// Rough working-set size per grid node: state, cut-offs, conformal
/// buffers and the temporaries of one corrugation step.
const BYTES_PER_NODE: u64 = 96 * 8;
/// Immersion values and tracked Jacobian of one kept snapshot.
const SNAPSHOT_BYTES_PER_NODE: u64 = 9 * 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Passed,
    DryRun,
    AssertionFailed,
    Failed,
    ConfigError,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Passed | RunStatus::DryRun => EXIT_OK,
            RunStatus::AssertionFailed | RunStatus::Failed => EXIT_ASSERTION,
            RunStatus::ConfigError => EXIT_CONFIG,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelPlan {
    pub q: usize,
    pub frequencies: [f64; 2],
    pub ell: f64,
    pub nodes_per_wavelength: f64,
    pub tube_radius: f64,
}

/// What a dry run reports: the schedule of the first working pass and a
/// memory estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub nodes: usize,
    pub working_passes: usize,
    /// `delta*` the bootstrap will use: the override, or the search rule
    /// applied to the initial defect.
    pub delta_start: Option<f64>,
    pub theta_chain: Vec<String>,
    pub theta_final: f64,
    pub ln_minimal_amplitude: Option<f64>,
    pub first_schedule: Option<ScheduleSummary>,
    pub levels: Vec<LevelPlan>,
    pub estimated_peak_bytes: u64,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshEntry {
    pub stage: String,
    /// File name inside the output directory; `None` when the map failed
    /// the shortness audit and an intermediate mesh was withheld.
    pub file: Option<String>,
    pub min_defect_eigenvalue: f64,
    pub short: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalNorms {
    pub bootstrap_delta: f64,
    pub bootstrap_h_sup: f64,
    pub relative_defect: f64,
    pub displacement: f64,
    pub displacement_budget: f64,
    pub theta_final: f64,
    pub probe_theta: f64,
    pub probe_ratio: Option<f64>,
    pub certificate: Certificate,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AssertionSummary {
    pub passed: bool,
    pub levels_checked: usize,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub seed: u64,
    pub status: RunStatus,
    pub error: Option<String>,
    pub scenario: Scenario,
    pub plan: Option<RunPlan>,
    pub passes: Vec<PassReport>,
    pub final_norms: Option<FinalNorms>,
    pub assertions: AssertionSummary,
    /// Calibrated `A` after a schedule failure.
    pub suggested_amplitude: Option<f64>,
    pub history_lines: usize,
    pub meshes: Vec<MeshEntry>,
    pub wall_time: f64,
    pub peak_rss_bytes: Option<u64>,
}

impl RunReport {
    fn new(scenario: &Scenario, status: RunStatus) -> Self {
        Self {
            name: scenario.name.clone(),
            seed: scenario.seed,
            status,
            error: None,
            scenario: scenario.clone(),
            plan: None,
            passes: Vec::new(),
            final_norms: None,
            assertions: AssertionSummary::default(),
            suggested_amplitude: None,
            history_lines: 0,
            meshes: Vec::new(),
            wall_time: 0.0,
            peak_rss_bytes: None,
        }
    }

    /// Report of a scenario that never got to run.
    pub fn config_error(scenario: &Scenario, problems: &[String]) -> Self {
        let mut r = Self::new(scenario, RunStatus::ConfigError);
        r.error = Some(problems.join("; "));
        r.assertions.failures = problems.to_vec();
        r
    }

    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }

    pub fn write_summary(&self, out_dir: &Path) -> Result<(), ReportError> {
        std::fs::create_dir_all(out_dir)?;
        let f = std::fs::File::create(out_dir.join("summary.json"))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(f), self)?;
        Ok(())
    }
}

/// Peak resident set from `/proc`, where available.
fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn delta_start(setup: &Setup) -> Option<f64> {
    if let Some(d) = setup.params.bootstrap.delta {
        return Some(d);
    }
    let (min_eig, _) = min_defect_eigenvalue(&setup.u0, &setup.g);
    let mut d = 1.0;
    while d > setup.params.bootstrap.delta_cap {
        d *= 0.5;
    }
    while 2.0 * d > min_eig {
        d *= 0.5;
        if d < 1e-12 {
            return None;
        }
    }
    Some(d)
}

fn working_passes(setup: &Setup) -> usize {
    let mut current = crate::adapted_induction::SkeletonSet::Empty;
    let mut n = 0;
    for s in &setup.plan.skeleta {
        if *s != current {
            n += 1;
            current = s.clone();
        }
    }
    n
}

/// Schedule, desk frequencies and memory estimate, without running anything.
pub fn plan(scenario: &Scenario) -> Result<RunPlan, ReportError> {
    let setup = scenario.setup()?;
    let p = &setup.params;
    let working = working_passes(&setup);
    let chain = exponent_chain(&p.theta, &p.alpha, 2, working)?;
    let mut theta_chain = vec![p.theta.to_string()];
    theta_chain.extend(chain.iter().map(|s| s.theta_next.to_string()));
    let theta_final = chain.last().map_or(to_f64(&p.theta), |s| to_f64(&s.theta_next));
    let mut notes = Vec::new();
    let delta = delta_start(&setup);
    let (mut ln_min, mut first_schedule, mut levels) = (None, None, Vec::new());
    match (delta, chain.first()) {
        (Some(d), Some(step)) => {
            let ln = minimal_ln_amplitude(to_f64(&step.theta), to_f64(&step.b), d);
            ln_min = Some(ln);
            let ln_a = p.amplitude.map_or(ln, f64::ln);
            let depth = p.passes[0].depth;
            match build_schedule(&Amplitude::from_ln(ln_a), &p.theta, &p.alpha, d, 2, depth + 2) {
                Ok(s) => {
                    let kappa = to_f64(&s.kappa());
                    let ladder = &p.passes[0].ladder;
                    let h = setup.chart.max_spacing();
                    for q in 0..depth {
                        let f = ladder.frequencies(q);
                        levels.push(LevelPlan {
                            q,
                            frequencies: f,
                            ell: ladder.lambda(q + 2).powf(-kappa),
                            nodes_per_wavelength: std::f64::consts::TAU / (f[0].max(f[1]) * h),
                            tube_radius: ladder.radius(q),
                        });
                    }
                    first_schedule = Some(s.summary());
                }
                Err(e) => notes.push(format!("first schedule: {e}")),
            }
        }
        (None, _) => notes.push("initial map is not strictly short enough for any delta*".into()),
        _ => notes.push("no working pass".into()),
    }
    let nodes = setup.chart.len();
    let snapshots = if p.snapshots { working as u64 + 1 } else { 0 };
    Ok(RunPlan {
        nodes,
        working_passes: working,
        delta_start: delta,
        theta_chain,
        theta_final,
        ln_minimal_amplitude: ln_min,
        first_schedule,
        levels,
        estimated_peak_bytes: nodes as u64 * (BYTES_PER_NODE + snapshots * SNAPSHOT_BYTES_PER_NODE),
        notes,
    })
}

/// Plans the scenario and writes only the summary.
pub fn dry_run(scenario: &Scenario, out_dir: &Path) -> Result<RunReport, ReportError> {
    let start = Instant::now();
    let mut report = match plan(scenario) {
        Ok(p) => {
            let mut r = RunReport::new(scenario, RunStatus::DryRun);
            r.plan = Some(p);
            r
        }
        Err(ReportError::Config(problems)) => RunReport::config_error(scenario, &problems),
        Err(e) => {
            let mut r = RunReport::new(scenario, classify(&e));
            r.error = Some(e.to_string());
            r
        }
    };
    report.wall_time = start.elapsed().as_secs_f64();
    report.write_summary(out_dir)?;
    Ok(report)
}

fn classify(e: &ReportError) -> RunStatus {
    match e {
        ReportError::Config(_)
        | ReportError::Induction(
            InductionError::Theta { .. }
            | InductionError::Alpha(_)
            | InductionError::Dimension(_)
            | InductionError::Delta(_)
            | InductionError::TargetTheta { .. }
            | InductionError::Precondition(_),
        ) => RunStatus::ConfigError,
        ReportError::Induction(InductionError::Ordering { .. }) => RunStatus::AssertionFailed,
        _ => RunStatus::Failed,
    }
}

fn mesh_entry(
    out_dir: &Path,
    stage: &str,
    u: &ImmersionField,
    min_eig: f64,
    always: bool,
) -> Result<MeshEntry, ReportError> {
    let short = min_eig >= -SHORT_TOLERANCE;
    let file = if short || always {
        let name = format!("mesh_{stage}.obj");
        export_mesh(u, &out_dir.join(&name))?;
        Some(name)
    } else {
        None
    };
    Ok(MeshEntry {
        stage: stage.into(),
        file,
        min_defect_eigenvalue: min_eig,
        short,
    })
}

/// Smallest `A` whose schedule is ordered, found by bisection in `ln A`
/// from the failing value.
fn suggest_amplitude(setup: &Setup, table: &CorrugationTable, ln_failed: f64) -> Result<Option<f64>, ReportError> {
    let p = &setup.params;
    let start = bootstrap_strong(&setup.u0, &setup.g, &p.bootstrap, table)?;
    let depth = p.passes[0].depth;
    let found = calibrate_amplitude(ln_failed, ln_failed + 4096.0, 1e-6, |ln_a| {
        Ok(build_schedule(&Amplitude::from_ln(ln_a), &p.theta, &p.alpha, start.delta, 2, depth + 2).is_ok())
    })?;
    Ok(found.map(f64::exp))
}

/// Runs the scenario and writes its history, meshes and summary. Failures
/// of the pipeline end up in the report; only I/O on the output directory
/// is returned as an error.
pub fn run(scenario: &Scenario, out_dir: &Path, table: &CorrugationTable) -> Result<RunReport, ReportError> {
    let start = Instant::now();
    std::fs::create_dir_all(out_dir)?;
    let setup = match scenario.setup() {
        Ok(s) => s,
        Err(e) => {
            let mut report = match e {
                ReportError::Config(problems) => RunReport::config_error(scenario, &problems),
                e => {
                    let mut r = RunReport::new(scenario, RunStatus::ConfigError);
                    r.error = Some(e.to_string());
                    r
                }
            };
            report.wall_time = start.elapsed().as_secs_f64();
            report.write_summary(out_dir)?;
            return Ok(report);
        }
    };
    let mut report = RunReport::new(scenario, RunStatus::Passed);
    report.plan = plan(scenario).ok();
    let meshes = scenario.output.meshes;
    if meshes {
        let (e, _) = min_defect_eigenvalue(&setup.u0, &setup.g);
        report.meshes.push(mesh_entry(out_dir, "initial", &setup.u0, e, true)?);
    }

    let mut history = HistoryWriter::create(&out_dir.join("history.jsonl"))?;
    let mut io_error = None;
    let outcome = run_global(&setup.u0, &setup.g, &setup.plan, &setup.params, table, |r| {
        if let Err(e) = history.write(r) {
            io_error.get_or_insert(e);
        }
    });
    report.history_lines = history.lines();
    if let Some(e) = io_error {
        return Err(e.into());
    }

    match outcome {
        Ok(out) => {
            let mut failures = Vec::new();
            for p in &out.passes {
                for h in p.hypotheses.iter().filter(|h| !h.holds()) {
                    failures.push(format!("pass {}: hypothesis {} violated at {} nodes", p.index, h.name, h.violations));
                }
            }
            for r in &out.records {
                failures.extend(r.failures.iter().map(|f| format!("pass {} q {}: {f}", r.pass, r.q)));
            }
            report.assertions = AssertionSummary {
                passed: out.assertions_passed(),
                levels_checked: out.records.len(),
                failures,
            };
            if !report.assertions.passed {
                report.status = RunStatus::AssertionFailed;
            }
            if meshes {
                for s in &out.snapshots {
                    report
                        .meshes
                        .push(mesh_entry(out_dir, &s.stage, &s.u, s.min_defect_eigenvalue, false)?);
                }
                let (e, _) = min_defect_eigenvalue(&out.v, &setup.g);
                report.meshes.push(mesh_entry(out_dir, "final", &out.v, e, true)?);
            }
            report.final_norms = Some(FinalNorms {
                bootstrap_delta: out.bootstrap_delta,
                bootstrap_h_sup: out.bootstrap_h_sup,
                relative_defect: out.relative_defect,
                displacement: out.displacement,
                displacement_budget: out.displacement_budget,
                theta_final: out.theta_final,
                probe_theta: out.probe_theta,
                probe_ratio: out.probe_ratio,
                certificate: out.certificate,
            });
            report.passes = out.passes;
        }
        Err(e) => {
            let e = ReportError::from(e);
            report.status = classify(&e);
            report.error = Some(e.to_string());
            if let ReportError::Induction(InductionError::Ordering { q, .. }) = &e {
                report
                    .assertions
                    .failures
                    .push(format!("schedule ordering at level {q}: amplitude below the minimal A"));
                let ln_failed = setup.params.amplitude.map_or(0.0, f64::ln);
                report.suggested_amplitude = suggest_amplitude(&setup, table, ln_failed).ok().flatten();
            } else {
                report.assertions.failures.push(e.to_string());
            }
        }
    }
    report.wall_time = start.elapsed().as_secs_f64();
    report.peak_rss_bytes = peak_rss_bytes();
    report.write_summary(out_dir)?;
    Ok(report)
}
