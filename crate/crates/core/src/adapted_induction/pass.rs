//! One inductive pass: starting from a state adapted to `S`, make it
//! adapted to `Sigma` by a ladder of metric additions localized by the
//! cut-offs, checking the per-level conditions at every node.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::cutoffs::{components, cutoffs, NestingReport, Profiles};
use super::rho::{check_rho_lemma, update_rho, LemmaInputs, RhoLemmaReport};
use super::schedule::{build_schedule, to_f64, Amplitude, Schedule, ScheduleSummary};
use super::skeleton::SkeletonSet;
use super::state::{
    check_power, derivative_sizes, factorization_residual, min_defect_eigenvalue, refactor,
    AdaptedState, EstimateCheck, PowerBound,
};
use super::InductionError;
use crate::corrugation::CorrugationTable;
use crate::decomposition::{ConformalOptions, DecompositionError};
use crate::linalg::{self, Sym2};
use crate::nash_step::{add_metric_2d, distance_to_support, Metric2dParams, NashError};
use crate::tensor_field::{
    holder_seminorm, DerivOrder, FieldError, GridChart, ImmersionField, MetricField, ScalarField,
};

/// Residual bound for `(1)_q`.
pub const FACTORIZATION_TOLERANCE: f64 = 1e-9;
/// `u` must not move on `S` by more than this.
pub const S_TOLERANCE: f64 = 1e-12;

/// Resolvable stand-in for the frequency ladder. Level `q` mollifies at
/// `lambda^_{q+2}^{-kappa}` and corrugates at `lambda^_{q+2} K` and
/// `lambda^_{q+2} K^2`; the tubes have radius `r^_q = radius_scale / lambda^_{q+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeskLadder {
    /// `lambda^_1`; `lambda^_q = lambda^_1 growth^{q-1}`.
    pub lambda_1: f64,
    pub growth: f64,
    pub k_factor: f64,
    pub radius_scale: f64,
    /// Explicit step frequencies per level, overriding the geometric ones.
    #[serde(default)]
    pub frequencies: Option<Vec<[f64; 2]>>,
}

impl DeskLadder {
    pub fn new(lambda_1: f64, growth: f64, k_factor: f64, radius_scale: f64) -> Self {
        Self {
            lambda_1,
            growth,
            k_factor,
            radius_scale,
            frequencies: None,
        }
    }

    /// `lambda^_q`, `q >= 1`.
    pub fn lambda(&self, q: usize) -> f64 {
        self.lambda_1 * self.growth.powi(q as i32 - 1)
    }

    /// `r^_q`.
    pub fn radius(&self, q: usize) -> f64 {
        self.radius_scale / self.lambda(q + 1)
    }

    pub fn frequencies(&self, q: usize) -> [f64; 2] {
        if let Some(f) = self.frequencies.as_ref().and_then(|f| f.get(q)) {
            return *f;
        }
        let l = self.lambda(q + 2);
        [l * self.k_factor, l * self.k_factor * self.k_factor]
    }

    pub fn validate(&self) -> Result<(), String> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !(ok(self.lambda_1) && self.growth >= 1.0 && self.k_factor > 1.0 && ok(self.radius_scale)) {
            return Err(format!(
                "desk ladder needs lambda_1 > 0, growth >= 1, K > 1, radius scale > 0, got {self:?}"
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PassParams {
    pub depth: usize,
    pub ladder: DeskLadder,
    pub profiles: Profiles,
    /// Constant of the displacement bounds `(5)_q`.
    pub c_bar: f64,
    /// Nodes with `rho` at or below this count as part of the isometric set.
    pub rho_floor: f64,
    /// Stop once `delta_{q+2}^{1/2}` drops below this.
    pub amplitude_floor: f64,
    /// Fail on the first violated assertion instead of recording it.
    pub enforce: bool,
    /// Exponent of the Hölder probe on `grad u_q`.
    pub holder_theta: Option<f64>,
    pub m_bound: f64,
    pub c0: f64,
    pub collar: usize,
    pub conformal: ConformalOptions,
}

impl PassParams {
    pub fn new(depth: usize, ladder: DeskLadder) -> Self {
        Self {
            depth,
            ladder,
            profiles: Profiles::default(),
            c_bar: 8.0,
            rho_floor: 0.0,
            amplitude_floor: 1e-6,
            enforce: false,
            holder_theta: None,
            m_bound: 4.0,
            c0: 0.5,
            collar: 2,
            conformal: ConformalOptions::default(),
        }
    }
}

/// Condition check for one level: each connected piece of `supp chi~`
/// sees a single piece of `Sigma`, and the wide tube stays below `r_bar`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricAudit {
    pub components: usize,
    /// Largest number of distinct nearest pieces met by one component.
    pub max_pieces_per_component: usize,
    pub tube_radius: f64,
    /// `r_bar`, half the smallest separation of the pieces.
    pub separation: f64,
    pub ok: bool,
}

/// History record of level `q` (state `q + 1` after the addition).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QRecord {
    pub pass: usize,
    pub q: usize,
    /// `delta_{q+1}`, `delta_{q+2}`.
    pub delta: [f64; 2],
    /// `ln lambda_{q+1}` of the exact schedule.
    pub ln_lambda: f64,
    /// Desk frequency `lambda^_{q+2}` and the two step frequencies.
    pub desk_lambda: f64,
    pub frequencies: [f64; 2],
    pub ell: f64,
    /// `sup |g - u#e|` and its ratio to `sup |g|`.
    pub sup_defect: f64,
    pub relative_defect: f64,
    pub rho_bands: RhoLemmaReport,
    pub rho_max: f64,
    pub rho_min: f64,
    pub nesting: NestingReport,
    pub cutoff_gradient: f64,
    pub components: usize,
    pub support_nodes: usize,
    pub changed_nodes: usize,
    /// Changed nodes farther than `ell` plus one cell from `supp chi~`.
    pub changed_outside: usize,
    pub displacement: f64,
    pub displacement_total: f64,
    /// `C0 = |Delta u|_0 lambda^_{q+1} / delta_{q+1}^{1/2}` and
    /// `C1 = |grad Delta u|_0 / delta_{q+1}^{1/2}`.
    pub c_bar_measured: [f64; 2],
    pub holder_probe: Option<f64>,
    pub factorization_residual: f64,
    pub min_defect_eigenvalue: f64,
    pub h_sup: f64,
    pub estimates: Vec<EstimateCheck>,
    pub zone_estimates: Vec<EstimateCheck>,
    pub geometric: GeometricAudit,
    /// `min dist(x, S) / r_{q+1}` over `supp chi~`.
    pub r_double_star: Option<f64>,
    pub s_residual: f64,
    pub warnings: Vec<String>,
    pub failures: Vec<String>,
    pub assertions_passed: bool,
    pub wall_time: f64,
}

#[derive(Clone, Debug)]
pub struct PassOutcome {
    /// Final iterate, carrying the exponents `(A^{b^2}, theta/b^2, alpha/(2 b^2))`.
    pub state: AdaptedState,
    pub records: Vec<QRecord>,
    pub schedule: ScheduleSummary,
    pub hypotheses: Vec<EstimateCheck>,
    pub truncated: Option<String>,
    pub depth_reached: usize,
}

impl PassOutcome {
    pub fn assertions_passed(&self) -> bool {
        self.hypotheses.iter().all(EstimateCheck::holds) && self.records.iter().all(|r| r.assertions_passed)
    }
}

/// Schedule of a pass started from `state` with amplitude `amplitude`:
/// `delta_1 = max rho^2` and two levels beyond the depth.
pub fn pass_schedule(state: &AdaptedState, amplitude: &Amplitude, depth: usize) -> Result<Schedule, InductionError> {
    let delta1 = state.rho.values.iter().map(|r| r * r).fold(0.0, f64::max);
    build_schedule(amplitude, &state.theta, &state.alpha, delta1, 2, depth + 2)
}

fn sup_norm(g: &MetricField) -> f64 {
    g.values.iter().map(linalg::sym_norm).fold(0.0, f64::max)
}

fn ellipticity(values: &[Sym2]) -> f64 {
    values
        .iter()
        .map(|m| {
            let (lo, hi) = linalg::sym_eig(m);
            if lo > 0.0 {
                hi.max(1.0 / lo)
            } else {
                f64::INFINITY
            }
        })
        .fold(1.0, f64::max)
}

/// Errors that end a pass early: the desk ladder has run out of grid, or
/// an earlier level left `g + h~` indefinite so no increment can be added.
fn is_resolution_limit(e: &NashError) -> bool {
    matches!(
        e,
        NashError::UnderResolved { .. }
            | NashError::Field(FieldError::UnderResolvedKernel { .. })
            | NashError::Field(FieldError::KernelTooWide { .. })
            | NashError::Decomposition(DecompositionError::NotSpd { .. })
    )
}

fn masked(f: &ScalarField, keep: &[bool]) -> ScalarField {
    ScalarField {
        chart: f.chart.clone(),
        values: f.values.iter().zip(keep).map(|(&v, &k)| if k { v } else { 0.0 }).collect(),
    }
}

fn geometric_audit(
    chart: &GridChart,
    sigma: &SkeletonSet,
    nearest: &[Option<usize>],
    comps: &[Vec<usize>],
    tube_radius: f64,
) -> GeometricAudit {
    let mut max_pieces = 0;
    for comp in comps {
        let mut seen: Vec<usize> = comp.iter().filter_map(|&k| nearest[k]).collect();
        seen.sort_unstable();
        seen.dedup();
        max_pieces = max_pieces.max(seen.len());
    }
    let separation = match sigma {
        SkeletonSet::Vertices { .. } | SkeletonSet::Edges { .. } => sigma.separation(chart),
        _ => f64::INFINITY,
    };
    GeometricAudit {
        components: comps.len(),
        max_pieces_per_component: max_pieces,
        tube_radius,
        separation,
        ok: max_pieces <= 1 && tube_radius < separation,
    }
}

struct Bounds {
    u2: PowerBound,
    h: PowerBound,
    grad_h: PowerBound,
}

impl Bounds {
    /// Estimates with growth `e` (`b^2` in `(3)_q`, `b` in `(4)_q`) and
    /// auxiliary exponent `a` (`alpha/(2 b^2)` and `alpha / b`).
    fn new(e: f64, a: f64, theta: f64) -> Self {
        Self {
            u2: PowerBound {
                ln_a_power: e,
                rho_power: 1.0 - e / theta,
            },
            h: PowerBound {
                ln_a_power: -theta * a,
                rho_power: a,
            },
            grad_h: PowerBound {
                ln_a_power: e - theta * a,
                rho_power: a - e / theta,
            },
        }
    }

    fn check(
        &self,
        label: &str,
        u: &ImmersionField,
        rho: &ScalarField,
        h: &MetricField,
        ln_a: f64,
        keep: impl Fn(usize) -> bool + Copy,
    ) -> Vec<EstimateCheck> {
        let s = derivative_sizes(u, rho, h);
        let r = &rho.values;
        vec![
            check_power(&format!("{label} second derivatives of u"), &s.hessian_u, r, ln_a, self.u2, keep),
            check_power(&format!("{label} gradient of rho"), &s.grad_rho, r, ln_a, self.u2, keep),
            check_power(&format!("{label} h"), &s.h, r, ln_a, self.h, keep),
            check_power(&format!("{label} gradient of h"), &s.grad_h, r, ln_a, self.grad_h, keep),
        ]
    }
}

fn first_failure(q: usize, failures: &[String], estimates: &[EstimateCheck]) -> InductionError {
    if let Some(e) = estimates.iter().find(|e| !e.holds()) {
        return InductionError::Assertion {
            q,
            node: e.worst_node,
            estimate: e.name.clone(),
            value: e.worst_log_margin,
            bound: 0.0,
        };
    }
    InductionError::Assertion {
        q,
        node: None,
        estimate: failures.first().cloned().unwrap_or_default(),
        value: f64::NAN,
        bound: f64::NAN,
    }
}

/// Runs levels `q = 0..depth` of the pass from `state` (adapted to
/// `state.sigma`) towards `sigma`. `on_record` sees every level as soon as
/// it is certified. Violated assertions are recorded, or returned as errors
/// with `enforce`.
#[allow(clippy::too_many_arguments)]
pub fn inductive_pass(
    state: &AdaptedState,
    g: &MetricField,
    sigma: &SkeletonSet,
    sched: &Schedule,
    p: &PassParams,
    pass_index: usize,
    table: &CorrugationTable,
    mut on_record: impl FnMut(&QRecord),
) -> Result<PassOutcome, InductionError> {
    let chart = state.u.chart.clone();
    chart.check_same(&g.chart)?;
    p.profiles.validate().map_err(InductionError::Precondition)?;
    p.ladder.validate().map_err(InductionError::Precondition)?;
    if sched.levels() < p.depth + 2 {
        return Err(InductionError::Precondition(format!(
            "schedule has {} levels, depth {} needs {}",
            sched.levels(),
            p.depth,
            p.depth + 2
        )));
    }
    let rho_sup = state.rho.sup();
    if rho_sup > 0.25 * (1.0 + 1e-12) {
        return Err(InductionError::Precondition(format!("sup rho = {rho_sup} exceeds 1/4")));
    }
    let n = chart.len();
    let spacing = chart.max_spacing();
    let theta = sched.theta();
    let alpha = sched.alpha();
    let b = sched.b();
    let kappa = to_f64(&sched.kappa());
    let ln_a = sched.amplitude.ln();
    let g_sup = sup_norm(g);
    let gamma = 4.0 * ellipticity(&g.values);

    let s_set = &state.sigma;
    let s_dist = s_set.distance_field(&chart);
    let s_nodes: Vec<usize> = (0..n).filter(|&k| s_dist.values[k] <= spacing).collect();
    let sigma_dist = sigma.distance_field(&chart);
    let nearest = sigma.nearest_pieces(&chart);

    let rho0 = state.rho.clone();
    let hyp = Bounds::new(1.0, alpha, theta);
    let hypotheses = hyp.check("hypothesis", &state.u, &rho0, &state.h, ln_a, |k| {
        rho0.values[k] > p.rho_floor
    });
    if p.enforce {
        if let Some(e) = hypotheses.iter().find(|e| !e.holds()) {
            return Err(first_failure(0, &[], std::slice::from_ref(e)));
        }
    }
    let interior = Bounds::new(b * b, alpha / (2.0 * b * b), theta);
    let zone = Bounds::new(b, alpha / b, theta);

    let mut u = state.u.clone();
    let mut rho = state.rho.clone();
    let mut h = state.h.clone();
    let mut records = Vec::new();
    let mut truncated = None;

    for q in 0..p.depth {
        let started = Instant::now();
        let d1 = sched.delta(q + 1);
        let d2 = sched.delta(q + 2);
        if !(d2 > 0.0) || d2.sqrt() < p.amplitude_floor {
            truncated = Some(format!(
                "q = {q}: delta_(q+2)^(1/2) = {:e} below the amplitude floor {:e}",
                d2.sqrt(),
                p.amplitude_floor
            ));
            break;
        }
        let radius = p.ladder.radius(q + 1);
        let desk_lambda = p.ladder.lambda(q + 2);
        let frequencies = p.ladder.frequencies(q);
        let ell = desk_lambda.powf(-kappa);
        let cut = cutoffs(&rho0, &sigma_dist, d2, radius, &p.profiles);
        let support: Vec<bool> = cut.chi_tilde.values.iter().map(|&c| c > 0.0).collect();
        let comps = components(&chart, &support);
        let support_nodes = support.iter().filter(|&&s| s).count();
        let geometric = geometric_audit(&chart, sigma, &nearest, &comps, p.profiles.r_tilde_star * radius);
        if p.enforce && !geometric.ok {
            return Err(InductionError::Geometric {
                q,
                reason: format!("{geometric:?}"),
            });
        }
        let r_double_star = if s_set.is_empty() || support_nodes == 0 {
            None
        } else {
            let d = (0..n)
                .filter(|&k| support[k])
                .map(|k| s_dist.values[k])
                .fold(f64::INFINITY, f64::min);
            Some(d / radius)
        };
        if let Some(r) = r_double_star {
            let reach = ell + 2.0 * spacing;
            if r * radius <= reach {
                truncated = Some(format!(
                    "q = {q}: the cut-off support comes within {:e} of S, inside the mollifier reach {reach:e}",
                    r * radius
                ));
                break;
            }
        }

        // amplitude chi sqrt(rho^2 - delta) and the rescaled h
        let amp = ScalarField {
            chart: chart.clone(),
            values: (0..n)
                .map(|k| {
                    let c = cut.chi.values[k];
                    if c == 0.0 {
                        0.0
                    } else {
                        c * (rho.values[k] * rho.values[k] - d2).max(0.0).sqrt()
                    }
                })
                .collect(),
        };
        let h_tilde = MetricField {
            chart: chart.clone(),
            values: (0..n)
                .map(|k| {
                    let c = cut.chi_tilde.values[k];
                    if c == 0.0 {
                        [0.0; 3]
                    } else {
                        let r2 = rho.values[k] * rho.values[k];
                        linalg::sym_scale(&h.values[k], c * r2 / (r2 - d2))
                    }
                })
                .collect(),
            spd_bound: None,
        };
        let mp = Metric2dParams {
            delta: 4.0 * d1,
            lambda: desk_lambda,
            kappa,
            alpha: theta * alpha / (4.0 * b * b),
            gamma,
            c1: 1.0,
            c0: p.c0,
            m_bound: p.m_bound,
            frequencies: Some(frequencies),
            enforce_preconditions: false,
            collar: p.collar,
            conformal: p.conformal.clone(),
        };
        let mut next = u.clone();
        let mut warnings: Vec<String> = Vec::new();
        let mut limit = None;
        for comp in &comps {
            let mut keep = vec![false; n];
            comp.iter().for_each(|&k| keep[k] = true);
            let amp_c = masked(&amp, &keep);
            if amp_c.values.iter().all(|&a| a == 0.0) {
                continue;
            }
            let h_c = MetricField {
                chart: chart.clone(),
                values: (0..n).map(|k| if keep[k] { h_tilde.values[k] } else { [0.0; 3] }).collect(),
                spd_bound: None,
            };
            match add_metric_2d(&next, &amp_c, g, &h_c, &mp, table) {
                Ok(out) => {
                    for w in out.warnings {
                        if !warnings.contains(&w.name) {
                            warnings.push(w.name);
                        }
                    }
                    next = out.v;
                }
                Err(e) if is_resolution_limit(&e) => {
                    limit = Some(e);
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        if let Some(e) = limit {
            truncated = Some(format!("q = {q}: {e}"));
            break;
        }

        let rho_next = update_rho(&rho, &cut.chi, d2);
        let ju = u.jacobian();
        let jn = next.jacobian();
        // tiny amplitudes can move the Jacobian without moving the value
        let changed: Vec<bool> = (0..n)
            .map(|k| next.values[k] != u.values[k] || jn[k] != ju[k])
            .collect();
        let dist_support = distance_to_support(&chart, &support);
        let changed_nodes = changed.iter().filter(|&&c| c).count();
        let changed_outside = (0..n)
            .filter(|&k| changed[k] && dist_support[k] > (ell + spacing) * (1.0 + 1e-9))
            .count();
        let h_next = refactor(&next, &rho_next, g, &h, |k| support[k] || changed[k]);

        let residual = factorization_residual(&next, &rho_next, &h_next, g);
        let (min_eig, _) = min_defect_eigenvalue(&next, g);
        let lemma = check_rho_lemma(&LemmaInputs {
            rho0: &rho0,
            rho: &rho,
            rho_next: &rho_next,
            chi: &cut.chi,
            chi_tilde: &cut.chi_tilde,
            sigma_distance: &sigma_dist,
            delta: [d1, d2],
            inner_radius: p.profiles.r_star * radius,
        });
        let off_sigma = |k: usize| rho_next.values[k] > p.rho_floor;
        let estimates = interior.check("(3)", &next, &rho_next, &h_next, ln_a, off_sigma);
        let zone_radius = p.profiles.r_star * radius;
        let zone_estimates = zone.check("(4)", &next, &rho_next, &h_next, ln_a, |k| {
            off_sigma(k) && rho0.values[k] > d2.sqrt() && sigma_dist.values[k] < zone_radius
        });

        let mut displacement: f64 = 0.0;
        let mut grad_displacement: f64 = 0.0;
        for k in 0..n {
            if !changed[k] {
                continue;
            }
            let d = [
                next.values[k][0] - u.values[k][0],
                next.values[k][1] - u.values[k][1],
                next.values[k][2] - u.values[k][2],
            ];
            displacement = displacement.max(linalg::norm3(&d));
            let mut s = 0.0;
            for r in 0..3 {
                for c in 0..2 {
                    s += (jn[k][r][c] - ju[k][r][c]).powi(2);
                }
            }
            grad_displacement = grad_displacement.max(s.sqrt());
        }
        let sd1 = d1.sqrt();
        let c_bar_measured = [
            displacement * p.ladder.lambda(q + 1) / sd1,
            grad_displacement / sd1,
        ];
        let s_residual = s_nodes
            .iter()
            .map(|&k| {
                let a = next.values[k];
                let o = state.u.values[k];
                linalg::norm3(&[a[0] - o[0], a[1] - o[1], a[2] - o[2]])
            })
            .fold(0.0, f64::max);
        let pull_defect = {
            let pull = crate::tensor_field::pullback_metric(&next);
            g.values
                .iter()
                .zip(&pull.values)
                .map(|(a, b)| linalg::sym_norm(&linalg::sym_sub(a, b)))
                .fold(0.0, f64::max)
        };

        let mut failures = Vec::new();
        for v in &lemma.violations {
            failures.push(format!("lemma {} at node {} ({} nodes)", v.property, v.node, v.count));
        }
        if !cut.nesting.holds() {
            failures.push(format!("cut-off nesting {:?}", cut.nesting));
        }
        if !(residual < FACTORIZATION_TOLERANCE) {
            failures.push(format!("(1) factorization residual {residual:e}"));
        }
        if changed_outside > 0 {
            failures.push(format!("(2) {changed_outside} nodes changed outside supp chi~"));
        }
        for e in estimates.iter().chain(&zone_estimates) {
            if !e.holds() {
                failures.push(format!(
                    "{} at {} nodes (worst log margin {:.3})",
                    e.name, e.violations, e.worst_log_margin
                ));
            }
        }
        if c_bar_measured[0] > p.c_bar || c_bar_measured[1] > p.c_bar {
            failures.push(format!("(5) measured constants {c_bar_measured:?} exceed {}", p.c_bar));
        }
        if !(min_eig > 0.0) {
            failures.push(format!("shortness lost (eigenvalue {min_eig:e})"));
        }
        if !geometric.ok {
            failures.push(format!("geometric condition {geometric:?}"));
        }
        if s_residual > S_TOLERANCE {
            failures.push(format!("u moved by {s_residual:e} on S"));
        }
        if p.enforce && !failures.is_empty() {
            let all: Vec<EstimateCheck> = estimates.iter().chain(&zone_estimates).cloned().collect();
            return Err(first_failure(q, &failures, &all));
        }
        let holder_probe = p
            .holder_theta
            .map(|t| holder_seminorm(&next, t, DerivOrder::One));
        let displacement_total = next.sup_distance(&state.u);
        let record = QRecord {
            pass: pass_index,
            q,
            delta: [d1, d2],
            ln_lambda: sched.ln_lambda(q + 1),
            desk_lambda,
            frequencies,
            ell,
            sup_defect: pull_defect,
            relative_defect: pull_defect / g_sup,
            rho_bands: lemma,
            rho_max: rho_next.sup(),
            rho_min: rho_next.min(),
            nesting: cut.nesting,
            cutoff_gradient: cut.gradient_sup,
            components: comps.len(),
            support_nodes,
            changed_nodes,
            changed_outside,
            displacement,
            displacement_total,
            c_bar_measured,
            holder_probe,
            factorization_residual: residual,
            min_defect_eigenvalue: min_eig,
            h_sup: sup_norm(&h_next),
            estimates,
            zone_estimates,
            geometric,
            r_double_star,
            s_residual,
            warnings,
            assertions_passed: failures.is_empty(),
            failures,
            wall_time: started.elapsed().as_secs_f64(),
        };
        on_record(&record);
        records.push(record);
        u = next;
        rho = rho_next;
        h = h_next;
    }

    let depth_reached = records.len();
    let e = &sched.exponents;
    Ok(PassOutcome {
        state: AdaptedState {
            u,
            rho,
            h,
            sigma: sigma.clone(),
            amplitude: sched.next_amplitude(),
            theta: e.theta_next.clone(),
            alpha: e.alpha_next.clone(),
        },
        records,
        schedule: sched.summary(),
        hypotheses,
        truncated,
        depth_reached,
    })
}
