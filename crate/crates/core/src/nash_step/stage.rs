use serde::{Deserialize, Serialize};

use super::step::{step, StepParams};
use super::{NashError, Phase};
use crate::corrugation::CorrugationTable;
use crate::linalg::{self, Sym2};
use crate::tensor_field::{
    norm_report, pullback_metric, shortness_of_defect, ImmersionField, MetricField, NormReport,
    ScalarField, Shortness,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageParams {
    /// Frequency growth factor between consecutive steps.
    pub k_factor: f64,
    pub kappa: f64,
    pub c1: f64,
    /// Explicit step frequencies; overrides the geometric ladder.
    pub frequencies: Option<Vec<f64>>,
}

impl StageParams {
    pub fn new(k_factor: f64) -> Self {
        Self {
            k_factor,
            kappa: 1.5,
            c1: 1.0,
            frequencies: None,
        }
    }

    /// Step frequencies `lambda K^(k-1)` unless given explicitly.
    pub fn ladder(&self, lambda: f64, terms: usize) -> Vec<f64> {
        match &self.frequencies {
            Some(f) => f.clone(),
            None => (0..terms)
                .map(|k| lambda * self.k_factor.powi(k as i32))
                .collect(),
        }
    }

    /// Mollification length `lambda^(-kappa)`.
    pub fn ell(&self, lambda: f64) -> f64 {
        lambda.powf(-self.kappa)
    }

    pub fn validate(&self, p: &StepParams, terms: usize) -> Result<(), NashError> {
        let mut problems = Vec::new();
        if self.kappa < 1.0 {
            problems.push(format!("kappa = {} must be at least 1", self.kappa));
        }
        if let Some(f) = &self.frequencies {
            if f.len() != terms {
                problems.push(format!("{} frequencies for {} terms", f.len(), terms));
            }
            if f.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
                problems.push("frequencies must be positive".into());
            }
        } else if !(self.k_factor > self.c1 * p.nu_tilde / p.nu) {
            problems.push(format!(
                "K = {} must exceed c1 nu_tilde / nu = {}",
                self.k_factor,
                self.c1 * p.nu_tilde / p.nu
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(NashError::Params(problems))
        }
    }
}

/// One primitive metric `amplitude^2 dPhi (x) dPhi`.
#[derive(Clone, Debug)]
pub struct StageTerm {
    pub amplitude: ScalarField,
    pub phase: Phase,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub lambda: f64,
    pub sup_defect: f64,
    pub max_amplitude: f64,
    pub eig_range: (f64, f64),
    pub band_ok: bool,
    pub support_ok: bool,
    pub displacement: f64,
    pub c2_norm: f64,
}

#[derive(Clone, Debug)]
pub struct StageOutcome {
    pub v: ImmersionField,
    /// `grad v^T grad v - (grad u^T grad u + sum_k rho_k^2 grad Phi_k (x) grad Phi_k)`.
    pub error: MetricField,
    /// Sup of the error outside the boundary collar.
    pub sup_error: f64,
    pub error_norms: NormReport,
    pub frequencies: Vec<f64>,
    pub steps: Vec<StepSummary>,
}

/// Successive steps, one per term, at escalating frequencies. With a target
/// metric the stage stops with an error as soon as `target - v#e` loses
/// positivity.
pub fn stage(
    u: &ImmersionField,
    terms: &[StageTerm],
    p: &StepParams,
    s: &StageParams,
    target: Option<&MetricField>,
    table: &CorrugationTable,
) -> Result<StageOutcome, NashError> {
    s.validate(p, terms.len())?;
    let chart = &u.chart;
    let frequencies = s.ladder(p.lambda, terms.len());
    let mut expected: Vec<Sym2> = pullback_metric(u).values;
    let mut current = u.clone();
    let mut steps = Vec::with_capacity(terms.len());
    for (k, (term, &lambda)) in terms.iter().zip(&frequencies).enumerate() {
        chart.check_same(&term.amplitude.chart)?;
        for (e, (r, g)) in expected
            .iter_mut()
            .zip(term.amplitude.values.iter().zip(&term.phase.gradient))
        {
            *e = linalg::sym_add(e, &linalg::sym_scale(&linalg::outer2(g), r * r));
        }
        if term.amplitude.values.iter().all(|&r| r == 0.0) {
            continue;
        }
        let out = step(&current, &term.amplitude, &term.phase, &p.with_lambda(lambda), table)?;
        steps.push(StepSummary {
            lambda,
            sup_defect: out.sup_defect,
            max_amplitude: out.max_amplitude,
            eig_range: out.eig_range,
            band_ok: out.band_ok,
            support_ok: out.support_ok,
            displacement: out.diff_norms.sup_norm,
            c2_norm: out.norms.c2_norm,
        });
        current = out.v;
        if let Some(g) = target {
            let pull = pullback_metric(&current);
            let report = shortness_of_defect(&g.zip_map(&pull, linalg::sym_sub));
            if report.class == Shortness::NotShort {
                return Err(NashError::ShortnessLost {
                    term: k,
                    node: report.argmin,
                    eigenvalue: report.min_eigenvalue,
                });
            }
        }
    }
    let pull = pullback_metric(&current);
    let error = MetricField {
        chart: chart.clone(),
        values: pull
            .values
            .iter()
            .zip(&expected)
            .map(|(a, b)| linalg::sym_sub(a, b))
            .collect(),
        spd_bound: None,
    };
    let sup_error = error.sup_where(|k| chart.in_interior(k, p.collar));
    let error_norms = norm_report(&error, &[]);
    Ok(StageOutcome {
        v: current,
        error,
        sup_error,
        error_norms,
        frequencies,
        steps,
    })
}
