//! Scenario files: TOML with nested sections. Every key has a default, so
//! a scenario can be as short as a metric, and the resolved form is echoed
//! back into the run summary.

use std::f64::consts::TAU;
use std::fmt;
use std::path::{Path, PathBuf};

use num_rational::BigRational;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ReportError;
use crate::adapted_induction::{
    parse_rational, theta_bound, to_f64, DeskLadder, GlobalParams, PassParams, SkeletonPlan,
    Triangulation,
};
use crate::nash_step::{BootstrapParams, MIN_NODES_PER_WAVELENGTH};
use crate::tensor_field::io::read_container;
use crate::tensor_field::{BoundaryMode, GridChart, ImmersionField, MetricField};

/// Exact rational written as `"3/20"`, `"0.15"` or a bare number.
#[derive(Clone, PartialEq)]
pub struct RationalSpec(pub String);

impl RationalSpec {
    pub fn value(&self) -> Option<BigRational> {
        parse_rational(&self.0)
    }
}

impl fmt::Debug for RationalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for RationalSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for RationalSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Int(i64),
            Float(f64),
        }
        Ok(Self(match Raw::deserialize(d)? {
            Raw::Text(t) => t,
            Raw::Int(i) => i.to_string(),
            // shortest round-trip form, so 0.15 stays 3/20
            Raw::Float(x) => format!("{x}"),
        }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    Clamped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChartSpec {
    pub boundary: Boundary,
    pub origin: [f64; 2],
    pub extent: [f64; 2],
    /// Nodes per axis.
    pub resolution: usize,
}

impl Default for ChartSpec {
    fn default() -> Self {
        Self {
            boundary: Boundary::Periodic,
            origin: [0.0; 2],
            extent: [1.0; 2],
            resolution: 256,
        }
    }
}

impl ChartSpec {
    pub fn chart(&self) -> Result<GridChart, ReportError> {
        let mode = match self.boundary {
            Boundary::Periodic => BoundaryMode::Periodic,
            Boundary::Clamped => BoundaryMode::Clamped,
        };
        Ok(GridChart::new(self.origin, self.extent, [self.resolution; 2], mode)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricSpec {
    /// `[g11, g12, g22]` at every node.
    Constant { value: [f64; 3] },
    /// `scale exp(2 f) Id` with `f = sum a cos(2 pi (kx x / Lx + ky y / Ly) + phase)`;
    /// each mode is `[kx, ky, a, phase]`.
    Conformal { scale: f64, modes: Vec<[f64; 4]> },
    /// Metric container file on the scenario's chart; relative paths are
    /// taken from the scenario's directory.
    Samples { path: PathBuf },
}

impl Default for MetricSpec {
    fn default() -> Self {
        MetricSpec::Constant {
            value: [1.0, 0.0, 1.0],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialSpec {
    /// The chart map `x -> (x, 0)`.
    #[default]
    Flat,
    Scaled {
        scale: f64,
    },
    /// Immersion container file on the scenario's chart. The container
    /// keeps values only, so maps on a torus load as periodic.
    Samples {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleSpec {
    pub theta: RationalSpec,
    pub alpha: RationalSpec,
    pub target_theta: Option<RationalSpec>,
    /// `A` of the first working pass; the minimal admissible value if absent.
    pub amplitude: Option<f64>,
    pub amplitude_factor: f64,
    pub depth: usize,
    /// Largest frequency the run may use; checked against the resolution.
    pub lambda_budget: Option<f64>,
    pub probe_fraction: f64,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self {
            theta: RationalSpec("0.15".into()),
            alpha: RationalSpec("0.1".into()),
            target_theta: None,
            amplitude: None,
            amplitude_factor: 1.0,
            depth: 1,
            lambda_budget: None,
            probe_fraction: 0.9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapSpec {
    pub a0: f64,
    pub lambda: f64,
    pub k_factor: f64,
    pub delta_cap: f64,
    /// Fixed `delta*` instead of the search.
    pub delta: Option<f64>,
}

impl Default for BootstrapSpec {
    fn default() -> Self {
        Self {
            a0: 1e6,
            lambda: TAU,
            k_factor: 3.0,
            delta_cap: 0.125,
            delta: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PassSpec {
    pub c_bar: f64,
    pub rho_floor: f64,
    pub amplitude_floor: f64,
    /// Stop at the first violated assertion.
    pub enforce: bool,
}

impl Default for PassSpec {
    fn default() -> Self {
        let p = PassParams::new(1, DeskLadder::new(1.0, 1.0, 2.0, 1.0));
        Self {
            c_bar: p.c_bar,
            rho_floor: p.rho_floor,
            amplitude_floor: p.amplitude_floor,
            enforce: p.enforce,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SkeletonSpec {
    /// Only the whole chart: one working pass.
    #[default]
    None,
    /// Vertices, then edges, then the whole chart.
    Triangulation {
        vertices: Vec<[f64; 2]>,
        edges: Vec<[usize; 2]>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSpec {
    /// Write OBJ meshes of the initial, intermediate and final maps.
    pub meshes: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { meshes: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub chart: ChartSpec,
    pub metric: MetricSpec,
    pub initial: InitialSpec,
    pub schedule: ScheduleSpec,
    pub bootstrap: BootstrapSpec,
    pub pass: PassSpec,
    /// Desk ladder of each working pass; the last one repeats.
    pub passes: Vec<DeskLadder>,
    pub skeleton: SkeletonSpec,
    pub output: OutputSpec,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            seed: 0,
            chart: ChartSpec::default(),
            metric: MetricSpec::default(),
            initial: InitialSpec::default(),
            schedule: ScheduleSpec::default(),
            bootstrap: BootstrapSpec::default(),
            pass: PassSpec::default(),
            passes: vec![DeskLadder::new(TAU, 2.0, 2.0, 1.0)],
            skeleton: SkeletonSpec::default(),
            output: OutputSpec::default(),
        }
    }
}

/// Everything a run needs, built from a validated scenario.
#[derive(Clone, Debug)]
pub struct Setup {
    pub chart: GridChart,
    pub g: MetricField,
    pub u0: ImmersionField,
    pub plan: SkeletonPlan,
    pub params: GlobalParams,
}

/// Reads, checks and resolves a scenario file.
pub fn parse_scenario(path: &Path) -> Result<Scenario, ReportError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ReportError::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_scenario_str(&text, base)
}

/// Parses scenario text; relative sample paths resolve against `base`.
pub fn parse_scenario_str(text: &str, base: &Path) -> Result<Scenario, ReportError> {
    let raw: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ReportError::Config(vec![e.to_string()]))?;
    let mut scenario: Scenario = raw
        .clone()
        .try_into()
        .map_err(|e: toml::de::Error| ReportError::Config(vec![e.to_string()]))?;
    scenario.resolve_paths(base);
    let echoed = scenario.echo_table()?;
    let mut problems = Vec::new();
    unknown_keys(&raw, &echoed, "", &mut problems);
    problems.extend(scenario.problems());
    if problems.is_empty() {
        Ok(scenario)
    } else {
        Err(ReportError::Config(problems))
    }
}

/// Keys of `raw` that the typed scenario did not pick up.
fn unknown_keys(raw: &toml::Table, known: &toml::Table, prefix: &str, out: &mut Vec<String>) {
    for (key, value) in raw {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match (value, known.get(key)) {
            (_, None) => out.push(format!("unknown key `{path}`")),
            (toml::Value::Table(r), Some(toml::Value::Table(k))) => unknown_keys(r, k, &path, out),
            (toml::Value::Array(r), Some(toml::Value::Array(k))) => {
                for (i, (rv, kv)) in r.iter().zip(k).enumerate() {
                    if let (toml::Value::Table(rt), toml::Value::Table(kt)) = (rv, kv) {
                        unknown_keys(rt, kt, &format!("{path}[{i}]"), out);
                    }
                }
            }
            _ => {}
        }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl Scenario {
    fn resolve_paths(&mut self, base: &Path) {
        if let MetricSpec::Samples { path } = &mut self.metric {
            resolve(base, path);
        }
        if let InitialSpec::Samples { path } = &mut self.initial {
            resolve(base, path);
        }
    }

    fn echo_table(&self) -> Result<toml::Table, ReportError> {
        toml::Table::try_from(self).map_err(|e| ReportError::Config(vec![format!("cannot echo scenario: {e}")]))
    }

    /// The scenario with every default filled in, as TOML.
    pub fn echo(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    /// Largest step frequency of the bootstrap and of any pass within the
    /// configured depth, or the explicit budget when that is larger.
    pub fn lambda_max(&self) -> f64 {
        let ladders = self
            .passes
            .iter()
            .flat_map(|l| (0..self.schedule.depth).map(move |q| l.frequencies(q)[0].max(l.frequencies(q)[1])))
            .fold(0.0, f64::max);
        // a searched delta* leaves a remainder, corrugated at lambda K^j for j < 3
        let bootstrap = match self.bootstrap.delta {
            None => self.bootstrap.lambda * self.bootstrap.k_factor.powi(2),
            Some(_) => 0.0,
        };
        ladders.max(bootstrap).max(self.schedule.lambda_budget.unwrap_or(0.0))
    }

    /// Every problem with the scenario, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.name.trim().is_empty() {
            out.push("name must not be empty".into());
        }
        let chart = match self.chart.chart() {
            Ok(c) => Some(c),
            Err(e) => {
                out.push(format!("chart: {e}"));
                None
            }
        };

        let s = &self.schedule;
        let bound = theta_bound(2);
        match s.theta.value() {
            None => out.push(format!("schedule.theta = {:?} is not a number", s.theta)),
            Some(t) => {
                if !(t > BigRational::from_integer(0.into()) && t < bound) {
                    out.push(format!("schedule.theta = {:?} must satisfy 0 < theta < 1/5", s.theta));
                }
                if let Some(target) = &s.target_theta {
                    match target.value() {
                        Some(v) if v > BigRational::from_integer(0.into()) && v <= t => {}
                        _ => out.push(format!(
                            "schedule.target_theta = {target:?} must lie in (0, theta]"
                        )),
                    }
                }
            }
        }
        match s.alpha.value().map(|a| to_f64(&a)) {
            Some(a) if a > 0.0 && a < 1.0 => {}
            _ => out.push(format!("schedule.alpha = {:?} must lie in (0, 1)", s.alpha)),
        }
        if let Some(a) = s.amplitude {
            if !(a > 1.0 && a.is_finite()) {
                out.push(format!("schedule.amplitude = {a} must exceed 1"));
            }
        }
        if !(s.amplitude_factor >= 1.0) {
            out.push(format!("schedule.amplitude_factor = {} must be at least 1", s.amplitude_factor));
        }
        if s.depth == 0 {
            out.push("schedule.depth must be at least 1".into());
        }
        if !(s.probe_fraction > 0.0 && s.probe_fraction <= 1.0) {
            out.push(format!("schedule.probe_fraction = {} must lie in (0, 1]", s.probe_fraction));
        }

        let b = &self.bootstrap;
        if !(b.a0 > 1.0 && b.lambda > 0.0 && b.k_factor > 1.0 && b.delta_cap > 0.0 && b.delta_cap <= 0.125) {
            out.push(format!(
                "bootstrap needs a0 > 1, lambda > 0, k_factor > 1, 0 < delta_cap <= 1/8, got {b:?}"
            ));
        }
        if let Some(d) = b.delta {
            if !(d > 0.0 && d <= 0.125) {
                out.push(format!("bootstrap.delta = {d} must lie in (0, 1/8]"));
            }
        }
        let p = &self.pass;
        if !(p.c_bar > 0.0 && p.rho_floor >= 0.0 && p.amplitude_floor >= 0.0) {
            out.push(format!("pass needs c_bar > 0 and nonnegative floors, got {p:?}"));
        }

        if self.passes.is_empty() {
            out.push("at least one [[passes]] ladder is required".into());
        }
        for (i, l) in self.passes.iter().enumerate() {
            if let Err(e) = l.validate() {
                out.push(format!("passes[{i}]: {e}"));
            }
        }

        match &self.metric {
            MetricSpec::Constant { value: [a, b, c] } => {
                if !(*a > 0.0 && a * c - b * b > 0.0) {
                    out.push(format!("metric.value = [{a}, {b}, {c}] is not positive definite"));
                }
            }
            MetricSpec::Conformal { scale, modes } => {
                if !(*scale > 0.0) {
                    out.push(format!("metric.scale = {scale} must be positive"));
                }
                if modes.iter().flatten().any(|v| !v.is_finite()) {
                    out.push("metric.modes must be finite".into());
                }
            }
            MetricSpec::Samples { path } => {
                if let Some(c) = &chart {
                    if let Err(e) = load_metric(path, c) {
                        out.push(format!("metric: {e}"));
                    }
                }
            }
        }
        match &self.initial {
            InitialSpec::Flat => {}
            InitialSpec::Scaled { scale } => {
                if !(*scale > 0.0) {
                    out.push(format!("initial.scale = {scale} must be positive"));
                }
            }
            InitialSpec::Samples { path } => {
                if let Some(c) = &chart {
                    if let Err(e) = load_immersion(path, c) {
                        out.push(format!("initial: {e}"));
                    }
                }
            }
        }

        if let SkeletonSpec::Triangulation { vertices, edges } = &self.skeleton {
            if vertices.is_empty() {
                out.push("skeleton.vertices must not be empty".into());
            }
            for (i, e) in edges.iter().enumerate() {
                if e.iter().any(|&v| v >= vertices.len()) || e[0] == e[1] {
                    out.push(format!("skeleton.edges[{i}] = {e:?} does not join two listed vertices"));
                }
            }
            let lo = self.chart.origin;
            let hi = [lo[0] + self.chart.extent[0], lo[1] + self.chart.extent[1]];
            for (i, v) in vertices.iter().enumerate() {
                if !(v[0] >= lo[0] && v[0] <= hi[0] && v[1] >= lo[1] && v[1] <= hi[1]) {
                    out.push(format!("skeleton.vertices[{i}] = {v:?} lies outside the chart"));
                }
            }
        }

        if let Some(c) = &chart {
            let lambda = self.lambda_max();
            let per_wavelength = TAU / (lambda * c.max_spacing());
            if lambda > 0.0 && per_wavelength < MIN_NODES_PER_WAVELENGTH {
                out.push(format!(
                    "wavelength rule: frequency {lambda} gets {per_wavelength:.2} nodes per wavelength at \
                     resolution {}, need {MIN_NODES_PER_WAVELENGTH}",
                    self.chart.resolution
                ));
            }
        }
        out
    }

    /// Fields, skeleton plan and driver parameters of the run.
    pub fn setup(&self) -> Result<Setup, ReportError> {
        let problems = self.problems();
        if !problems.is_empty() {
            return Err(ReportError::Config(problems));
        }
        let chart = self.chart.chart()?;
        let g = match &self.metric {
            MetricSpec::Constant { value } => MetricField::constant(&chart, *value),
            MetricSpec::Conformal { scale, modes } => {
                let o = self.chart.origin;
                let l = self.chart.extent;
                MetricField::from_fn(&chart, |x| {
                    let f: f64 = modes
                        .iter()
                        .map(|m| m[2] * (TAU * (m[0] * (x[0] - o[0]) / l[0] + m[1] * (x[1] - o[1]) / l[1]) + m[3]).cos())
                        .sum();
                    let c = scale * (2.0 * f).exp();
                    [c, 0.0, c]
                })
            }
            MetricSpec::Samples { path } => load_metric(path, &chart)?,
        };
        let u0 = match &self.initial {
            InitialSpec::Flat => linear(&chart, 1.0)?,
            InitialSpec::Scaled { scale } => linear(&chart, *scale)?,
            InitialSpec::Samples { path } => load_immersion(path, &chart)?,
        };
        let plan = match &self.skeleton {
            SkeletonSpec::None => SkeletonPlan::torus(),
            SkeletonSpec::Triangulation { vertices, edges } => SkeletonPlan::triangulation(&Triangulation {
                points: vertices.clone(),
                edges: edges.clone(),
            }),
        };
        let s = &self.schedule;
        let b = &self.bootstrap;
        let mut bootstrap = BootstrapParams::new(b.a0, b.lambda, b.k_factor);
        bootstrap.delta_cap = b.delta_cap;
        bootstrap.delta = b.delta;
        let passes = self
            .passes
            .iter()
            .map(|l| {
                let mut p = PassParams::new(s.depth, l.clone());
                p.c_bar = self.pass.c_bar;
                p.rho_floor = self.pass.rho_floor;
                p.amplitude_floor = self.pass.amplitude_floor;
                p.enforce = self.pass.enforce;
                p
            })
            .collect();
        let params = GlobalParams {
            theta: s.theta.value().expect("validated"),
            alpha: s.alpha.value().expect("validated"),
            theta_target: s.target_theta.as_ref().and_then(RationalSpec::value),
            bootstrap,
            passes,
            amplitude: s.amplitude,
            amplitude_factor: s.amplitude_factor,
            probe_fraction: s.probe_fraction,
            snapshots: self.output.meshes,
        };
        Ok(Setup {
            chart,
            g,
            u0,
            plan,
            params,
        })
    }
}

/// `x -> scale (x, 0)` with its exact Jacobian.
fn linear(chart: &GridChart, scale: f64) -> Result<ImmersionField, ReportError> {
    let jac = [[scale, 0.0], [0.0, scale], [0.0, 0.0]];
    Ok(ImmersionField::flat(chart, scale).with_jacobian(vec![jac; chart.len()])?)
}

fn load_metric(path: &Path, chart: &GridChart) -> Result<MetricField, ReportError> {
    let f = std::fs::File::open(path).map_err(|e| ReportError::Config(vec![format!("{}: {e}", path.display())]))?;
    let m: MetricField = read_container(std::io::BufReader::new(f))?;
    if !m.chart.same_shape(chart) {
        return Err(ReportError::Config(vec![format!(
            "{} is sampled on a different chart",
            path.display()
        )]));
    }
    Ok(m)
}

fn load_immersion(path: &Path, chart: &GridChart) -> Result<ImmersionField, ReportError> {
    let f = std::fs::File::open(path).map_err(|e| ReportError::Config(vec![format!("{}: {e}", path.display())]))?;
    let u: ImmersionField = read_container(std::io::BufReader::new(f))?;
    if !u.chart.same_shape(chart) {
        return Err(ReportError::Config(vec![format!(
            "{} is sampled on a different chart",
            path.display()
        )]));
    }
    Ok(u)
}
