use std::fmt;

use serde::{Deserialize, Serialize};

use super::stage::{stage, StageParams, StageTerm, StepSummary};
use super::step::StepParams;
use super::support::distance_to_support;
use super::{NashError, Phase};
use crate::corrugation::CorrugationTable;
use crate::decomposition::{solve_conformal, ConformalOptions, ConformalStats};
use crate::linalg;
use crate::tensor_field::{
    norm_report, pullback_metric, ImmersionField, MetricField, Mollify, NormReport, ScalarField,
};

#[derive(Clone, Debug)]
pub struct Metric2dParams {
    pub delta: f64,
    pub lambda: f64,
    /// Mollification exponent, `ell = lambda^(-kappa)`.
    pub kappa: f64,
    pub alpha: f64,
    /// Ellipticity of `G` and of the pullback of `u`.
    pub gamma: f64,
    /// Stage growth `K = c1 lambda^(kappa - 1)`.
    pub c1: f64,
    pub c0: f64,
    /// Bound on the conformal phase gradients.
    pub m_bound: f64,
    /// Explicit frequencies of the two steps, replacing `lambda K` and
    /// `lambda K^2`.
    pub frequencies: Option<[f64; 2]>,
    /// Fail on violated hypotheses instead of reporting them.
    pub enforce_preconditions: bool,
    pub collar: usize,
    pub conformal: ConformalOptions,
}

impl Metric2dParams {
    pub fn new(delta: f64, lambda: f64) -> Self {
        Self {
            delta,
            lambda,
            kappa: 1.5,
            alpha: 0.5,
            gamma: 2.0,
            c1: 1.0,
            c0: 0.5,
            m_bound: 4.0,
            frequencies: None,
            enforce_preconditions: false,
            collar: 2,
            conformal: ConformalOptions::default(),
        }
    }

    pub fn ell(&self) -> f64 {
        self.lambda.powf(-self.kappa)
    }

    pub fn k_factor(&self) -> f64 {
        self.c1 * self.lambda.powf(self.kappa - 1.0)
    }

    pub fn step_frequencies(&self) -> [f64; 2] {
        self.frequencies.unwrap_or_else(|| {
            let k = self.k_factor();
            [self.lambda * k, self.lambda * k * k]
        })
    }
}

/// A violated hypothesis: `value` exceeds `bound`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Precondition {
    pub name: String,
    pub value: f64,
    pub bound: f64,
}

impl fmt::Display for Precondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {:e} exceeds {:e}", self.name, self.value, self.bound)
    }
}

#[derive(Clone, Debug)]
pub struct Metric2dOutcome {
    pub v: ImmersionField,
    /// `grad v^T grad v - (grad u^T grad u + rho^2 (G + H))`.
    pub error: MetricField,
    pub sup_error: f64,
    pub error_norms: NormReport,
    pub ell: f64,
    pub k_factor: f64,
    pub frequencies: Vec<f64>,
    /// Largest change of a phase drift made to fit the torus.
    pub phase_snap: f64,
    pub warnings: Vec<Precondition>,
    pub conformal: Option<ConformalStats>,
    /// Largest `|v - u|` farther than `ell` plus one cell from `supp rho`.
    pub support_residual: f64,
    pub support_ok: bool,
    pub displacement: f64,
    pub steps: Vec<StepSummary>,
}

fn band_excess(values: &[linalg::Sym2]) -> f64 {
    values
        .iter()
        .map(|m| {
            let (lo, hi) = linalg::sym_eig(m);
            if lo <= 0.0 {
                f64::INFINITY
            } else {
                hi.max(1.0 / lo)
            }
        })
        .fold(0.0, f64::max)
}

fn preconditions(
    u: &ImmersionField,
    rho: &ScalarField,
    g: &MetricField,
    h: &MetricField,
    p: &Metric2dParams,
) -> Vec<Precondition> {
    let mut out = Vec::new();
    let mut check = |name: &str, value: f64, bound: f64| {
        if !(value <= bound) {
            out.push(Precondition {
                name: name.into(),
                value,
                bound,
            });
        }
    };
    let sd = p.delta.sqrt();
    let lam = p.lambda;
    let rho_norms = norm_report(rho, &[]);
    check("sup rho", rho_norms.sup_norm, sd);
    check("C1 norm of rho", rho_norms.c1_norm, sd * lam);
    let h_norms = norm_report(h, &[]);
    check("sup H", h.sup(), lam.powf(-p.alpha));
    check("C1 norm of H", h_norms.c1_norm, lam.powf(1.0 - p.alpha));
    check("2 gamma", 2.0 * p.gamma, lam.powf(p.alpha));
    check("ellipticity of G", band_excess(&g.values), p.gamma);
    check("ellipticity of the pullback", band_excess(&pullback_metric(u).values), p.gamma);
    let u_norms = norm_report(u, &[]);
    check("second derivatives of u", u_norms.c2_norm - u_norms.c1_norm, sd * lam);
    out
}

/// Adds `rho^2 (G + H)` to the pullback of `u` on a 2D chart: mollify at
/// `ell = lambda^(-kappa)`, factor `G~ + H~` in conformal coordinates, and
/// run a two-term stage at `lambda K` and `lambda K^2`.
pub fn add_metric_2d(
    u: &ImmersionField,
    rho: &ScalarField,
    g: &MetricField,
    h: &MetricField,
    p: &Metric2dParams,
    table: &CorrugationTable,
) -> Result<Metric2dOutcome, NashError> {
    let chart = &u.chart;
    chart.check_same(&rho.chart)?;
    chart.check_same(&g.chart)?;
    chart.check_same(&h.chart)?;
    let warnings = preconditions(u, rho, g, h, p);
    if p.enforce_preconditions && !warnings.is_empty() {
        return Err(NashError::Preconditions(warnings));
    }
    let ell = p.ell();
    let k_factor = p.k_factor();
    let target: Vec<linalg::Sym2> = {
        let pull = pullback_metric(u);
        (0..chart.len())
            .map(|k| {
                let r2 = rho.values[k] * rho.values[k];
                let add = linalg::sym_scale(&linalg::sym_add(&g.values[k], &h.values[k]), r2);
                linalg::sym_add(&pull.values[k], &add)
            })
            .collect()
    };

    let (v, steps, frequencies, phase_snap, conformal) = if rho.values.iter().all(|&r| r == 0.0) {
        (u.clone(), Vec::new(), Vec::new(), 0.0, None)
    } else {
        let rho_m = rho.mollify(ell)?;
        let gh = g.mollify(ell)?.zip_map(&h.mollify(ell)?, linalg::sym_add);
        let fac = solve_conformal(&gh, &p.conformal)?;
        let weight = ScalarField {
            chart: chart.clone(),
            values: fac
                .theta
                .values
                .iter()
                .zip(&rho_m.values)
                .map(|(t, r)| t * r.max(0.0))
                .collect(),
        };
        let freqs = p.step_frequencies();
        let mut snap: f64 = 0.0;
        let mut terms = Vec::with_capacity(2);
        for (c, &lam) in freqs.iter().enumerate() {
            let (phase, s) = Phase::from_conformal(&fac, c).snapped(lam);
            snap = snap.max(s);
            terms.push(StageTerm {
                amplitude: weight.clone(),
                phase,
            });
        }
        let sp = StepParams {
            lambda: freqs[0],
            epsilon: p.delta,
            delta: p.delta,
            nu: p.lambda,
            nu_tilde: 1.0 / ell,
            m_bound: p.m_bound,
            gamma: 2.0 * p.gamma + p.m_bound.powi(4) * p.delta,
            c0: p.c0,
            collar: p.collar,
        };
        let sg = StageParams {
            k_factor,
            kappa: p.kappa,
            c1: p.c1,
            frequencies: Some(freqs.to_vec()),
        };
        let out = stage(u, &terms, &sp, &sg, None, table)?;
        (out.v, out.steps, out.frequencies, snap, Some(fac.stats))
    };

    let pull = pullback_metric(&v);
    let error = MetricField {
        chart: chart.clone(),
        values: pull
            .values
            .iter()
            .zip(&target)
            .map(|(a, b)| linalg::sym_sub(a, b))
            .collect(),
        spd_bound: None,
    };
    let sup_error = error.sup_where(|k| chart.in_interior(k, p.collar));
    let error_norms = norm_report(&error, &[]);

    let mask: Vec<bool> = rho.values.iter().map(|&r| r != 0.0).collect();
    let dist = distance_to_support(chart, &mask);
    let reach = ell + chart.max_spacing();
    let mut support_residual: f64 = 0.0;
    let mut displacement: f64 = 0.0;
    for k in 0..chart.len() {
        let d = linalg::norm3(&[
            v.values[k][0] - u.values[k][0],
            v.values[k][1] - u.values[k][1],
            v.values[k][2] - u.values[k][2],
        ]);
        displacement = displacement.max(d);
        if dist[k] > reach {
            support_residual = support_residual.max(d);
        }
    }

    Ok(Metric2dOutcome {
        v,
        error,
        sup_error,
        error_norms,
        ell,
        k_factor,
        frequencies,
        phase_snap,
        warnings,
        conformal,
        support_residual,
        support_ok: support_residual <= super::SUPPORT_TOLERANCE,
        displacement,
        steps,
    })
}
