//! Global driver: strong-short bootstrap, then one inductive pass per
//! skeleton, each making the map isometric on a larger set.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::pass::{inductive_pass, pass_schedule, PassParams, QRecord};
use super::schedule::{exponent_chain, minimal_ln_amplitude, to_f64, Amplitude, ScheduleSummary};
use super::skeleton::{SkeletonSet, Triangulation};
use super::state::{min_defect_eigenvalue, AdaptedState, Certificate, EstimateCheck};
use super::InductionError;
use crate::corrugation::CorrugationTable;
use crate::linalg;
use crate::nash_step::{bootstrap_strong, BootstrapParams};
use crate::tensor_field::{pullback_metric, ImmersionField, MetricField};

/// Sets `Sigma_1 ⊂ Sigma_2 ⊂ ...` the passes make the map isometric on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkeletonPlan {
    pub skeleta: Vec<SkeletonSet>,
}

impl SkeletonPlan {
    /// A torus needs no triangulation: two empty skeleta, then the whole chart.
    pub fn torus() -> Self {
        Self {
            skeleta: vec![SkeletonSet::Empty, SkeletonSet::Empty, SkeletonSet::Whole],
        }
    }

    /// Vertices, edges, then the whole chart.
    pub fn triangulation(t: &Triangulation) -> Self {
        Self {
            skeleta: t.skeleta().into_iter().skip(1).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GlobalParams {
    pub theta: BigRational,
    pub alpha: BigRational,
    /// Requested final Hölder exponent; must not exceed what the passes keep.
    pub theta_target: Option<BigRational>,
    pub bootstrap: BootstrapParams,
    /// Parameters of the passes that do work; the last entry repeats.
    pub passes: Vec<PassParams>,
    /// `A` of the first working pass; the minimal admissible value otherwise.
    pub amplitude: Option<f64>,
    /// Later passes use this multiple of their minimal `A`.
    pub amplitude_factor: f64,
    /// Hölder probe exponent as a fraction of the final `theta`.
    pub probe_fraction: f64,
    /// Keep the map after the bootstrap and after every working pass.
    pub snapshots: bool,
}

/// Intermediate map with the shortness audit of its stage.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub stage: String,
    pub u: ImmersionField,
    /// Smallest eigenvalue of `g^{-1/2} (g - u#e) g^{-1/2}`.
    pub min_defect_eigenvalue: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PassReport {
    pub index: usize,
    pub sigma: String,
    /// Skipped passes have `Sigma = S`: the state is already adapted to it.
    pub skipped: bool,
    pub schedule: Option<ScheduleSummary>,
    pub ln_amplitude: f64,
    /// `ln A^{b^2}` handed down by the previous pass, for reference.
    pub inherited_ln_amplitude: Option<f64>,
    pub depth_reached: usize,
    pub truncated: Option<String>,
    pub hypotheses: Vec<EstimateCheck>,
    pub assertions_passed: bool,
}

#[derive(Clone, Debug)]
pub struct GlobalOutcome {
    pub v: ImmersionField,
    pub state: AdaptedState,
    pub bootstrap_delta: f64,
    pub bootstrap_h_sup: f64,
    pub passes: Vec<PassReport>,
    pub records: Vec<QRecord>,
    /// Final exponent `(prod b_j^{-2}) theta_0` over the working passes.
    pub theta_final: f64,
    pub relative_defect: f64,
    /// `|v - u_0|_0` against the budget `A^{-1/2}` of the first working pass.
    pub displacement: f64,
    pub displacement_budget: f64,
    pub probe_theta: f64,
    /// Last probe over the first one.
    pub probe_ratio: Option<f64>,
    pub certificate: Certificate,
    pub snapshots: Vec<Snapshot>,
}

impl GlobalOutcome {
    pub fn assertions_passed(&self) -> bool {
        self.passes.iter().all(|p| p.assertions_passed)
    }
}

fn kind(s: &SkeletonSet) -> String {
    match s {
        SkeletonSet::Empty => "empty".into(),
        SkeletonSet::Vertices { points } => format!("{} vertices", points.len()),
        SkeletonSet::Edges { edges, .. } => format!("{} edges", edges.len()),
        SkeletonSet::Whole => "whole chart".into(),
    }
}

/// Smallest `ln A` in `[lo, hi]` (to `tolerance`) accepted by `accepts`,
/// assuming acceptance is monotone in `A`. `None` when `hi` is rejected.
pub fn calibrate_amplitude(
    lo: f64,
    hi: f64,
    tolerance: f64,
    mut accepts: impl FnMut(f64) -> Result<bool, InductionError>,
) -> Result<Option<f64>, InductionError> {
    if !accepts(hi)? {
        return Ok(None);
    }
    if accepts(lo)? {
        return Ok(Some(lo));
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if accepts(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Bootstrap `u0` to a strong short map, then run the passes of `plan`.
/// Passes whose `Sigma` equals the current isometric set are skipped.
pub fn run_global(
    u0: &ImmersionField,
    g: &MetricField,
    plan: &SkeletonPlan,
    params: &GlobalParams,
    table: &CorrugationTable,
    mut on_record: impl FnMut(&QRecord),
) -> Result<GlobalOutcome, InductionError> {
    if params.passes.is_empty() {
        return Err(InductionError::Precondition("no pass parameters".into()));
    }
    let mut working = 0;
    let mut current = SkeletonSet::Empty;
    for s in &plan.skeleta {
        if *s != current {
            working += 1;
            current = s.clone();
        }
    }
    let chain = exponent_chain(&params.theta, &params.alpha, 2, working)?;
    let theta_final = chain.last().map_or(to_f64(&params.theta), |s| to_f64(&s.theta_next));
    if let Some(t) = &params.theta_target {
        if to_f64(t) > theta_final {
            return Err(InductionError::TargetTheta {
                target: to_f64(t),
                reachable: theta_final,
                passes: working,
            });
        }
    }
    let probe_theta = params.probe_fraction * theta_final;

    let start = bootstrap_strong(u0, g, &params.bootstrap, table)?;
    let mut state = AdaptedState::from_strong(
        start.u.clone(),
        start.h.clone(),
        start.delta,
        Amplitude::new(1.0),
        params.theta.clone(),
        params.alpha.clone(),
    );
    let mut snapshots = Vec::new();
    let mut snapshot = |stage: String, u: &ImmersionField| {
        if params.snapshots {
            snapshots.push(Snapshot {
                stage,
                u: u.clone(),
                min_defect_eigenvalue: min_defect_eigenvalue(u, g).0,
            });
        }
    };
    snapshot("bootstrap".into(), &state.u);
    let mut passes = Vec::new();
    let mut records = Vec::new();
    let mut budget = None;
    let mut inherited: Option<f64> = None;
    let mut w = 0;
    for (index, sigma) in plan.skeleta.iter().enumerate() {
        if *sigma == state.sigma {
            passes.push(PassReport {
                index,
                sigma: kind(sigma),
                skipped: true,
                schedule: None,
                ln_amplitude: state.amplitude.ln(),
                inherited_ln_amplitude: None,
                depth_reached: 0,
                truncated: None,
                hypotheses: Vec::new(),
                assertions_passed: true,
            });
            continue;
        }
        let mut p = params.passes[w.min(params.passes.len() - 1)].clone();
        p.holder_theta = Some(probe_theta);
        let step = &chain[w];
        let delta1 = state.rho.values.iter().map(|r| r * r).fold(0.0, f64::max);
        let ln_min = minimal_ln_amplitude(to_f64(&step.theta), to_f64(&step.b), delta1);
        let ln_a = match (w, params.amplitude) {
            (0, Some(a)) => a.ln(),
            _ => ln_min + params.amplitude_factor.ln(),
        };
        let amplitude = Amplitude::from_ln(ln_a);
        budget.get_or_insert((-0.5 * ln_a).exp());
        state.amplitude = amplitude.clone();
        let sched = pass_schedule(&state, &amplitude, p.depth)?;
        let out = inductive_pass(&state, g, sigma, &sched, &p, index, table, &mut on_record)?;
        passes.push(PassReport {
            index,
            sigma: kind(sigma),
            skipped: false,
            schedule: Some(out.schedule.clone()),
            ln_amplitude: ln_a,
            inherited_ln_amplitude: inherited,
            depth_reached: out.depth_reached,
            truncated: out.truncated.clone(),
            hypotheses: out.hypotheses.clone(),
            assertions_passed: out.assertions_passed(),
        });
        inherited = Some(out.state.amplitude.ln());
        records.extend(out.records.iter().cloned());
        state = out.state;
        snapshot(format!("pass{index}"), &state.u);
        w += 1;
    }

    let v = state.u.clone();
    let pull = pullback_metric(&v);
    let g_sup = g.values.iter().map(linalg::sym_norm).fold(0.0, f64::max);
    let defect = g
        .values
        .iter()
        .zip(&pull.values)
        .map(|(a, b)| linalg::sym_norm(&linalg::sym_sub(a, b)))
        .fold(0.0, f64::max);
    let probes: Vec<f64> = records.iter().filter_map(|r| r.holder_probe).collect();
    let probe_ratio = match (probes.first(), probes.last()) {
        (Some(&a), Some(&b)) if a > 0.0 => Some(b / a),
        _ => None,
    };
    let certificate = state.certify(g, 0.0);
    Ok(GlobalOutcome {
        displacement: v.sup_distance(u0),
        displacement_budget: budget.unwrap_or(f64::INFINITY),
        v,
        state,
        bootstrap_delta: start.delta,
        bootstrap_h_sup: start.h_sup,
        passes,
        records,
        theta_final,
        relative_defect: defect / g_sup,
        probe_theta,
        probe_ratio,
        certificate,
        snapshots,
    })
}

