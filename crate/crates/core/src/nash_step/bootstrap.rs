use serde::{Deserialize, Serialize};

use super::stage::{stage, StageParams, StageTerm, StepSummary};
use super::step::StepParams;
use super::{NashError, Phase};
use crate::corrugation::CorrugationTable;
use crate::decomposition::{DecompositionError, PrimitiveFrame};
use crate::linalg::{self, Sym2};
use crate::tensor_field::{
    check_short, norm_report, pullback_metric, ImmersionField, MetricField, ScalarField, Shortness,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapParams {
    /// Amplitude base `A_0` of the target estimates.
    pub a0: f64,
    /// Largest admissible `delta*`; `delta*` is the largest power of two
    /// below it with `g - u#e >= 2 delta* g`.
    pub delta_cap: f64,
    /// Use this `delta*` instead of searching; needs `g - u#e >= delta* g`.
    pub delta: Option<f64>,
    /// Frequency of the first step.
    pub lambda: f64,
    /// Frequency growth between steps.
    pub k_factor: f64,
    /// Ellipticity bound for the frame at the mean remainder.
    pub gamma: f64,
    pub collar: usize,
}

impl BootstrapParams {
    pub fn new(a0: f64, lambda: f64, k_factor: f64) -> Self {
        Self {
            a0,
            delta_cap: 0.125,
            delta: None,
            lambda,
            k_factor,
            gamma: 8.0,
            collar: 2,
        }
    }
}

/// Strong-short start `g - u#e = delta* (g + h)`.
#[derive(Clone, Debug)]
pub struct StrongStart {
    pub u: ImmersionField,
    pub h: MetricField,
    pub delta: f64,
    /// Relative margin `min eig g^{-1/2} (g - u#e) g^{-1/2}` of the input.
    pub margin: f64,
    /// `1 / (8 N)` for the `N` primitive terms.
    pub alpha_star: f64,
    pub h_sup: f64,
    /// `A_0^(-alpha*)`.
    pub h_bound: f64,
    pub displacement: f64,
    pub c2_norm: f64,
    /// Extreme eigenvalues of `g^{-1/2} u#e g^{-1/2}` for the new map.
    pub pullback_range: (f64, f64),
    /// `g/2 <= u#e <= g` everywhere.
    pub strong_ok: bool,
    pub frequencies: Vec<f64>,
    pub steps: Vec<StepSummary>,
}

fn relative_margin(g: &[Sym2], m: &[Sym2]) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (a, b) in g.iter().zip(m) {
        if let Some((x, y)) = linalg::relative_eig(b, a) {
            lo = lo.min(x);
            hi = hi.max(y);
        }
    }
    (lo, hi)
}

/// Turns a strictly short `u` into a strong short one: remove all but
/// `delta* g` of the defect with a stage of primitive metrics, and report
/// the remainder `h = -E / delta*`.
///
/// The defect remainder is decomposed by one frame centered at its mean;
/// the chart is a single patch, so the partition weights are identically 1.
pub fn bootstrap_strong(
    u: &ImmersionField,
    g: &MetricField,
    p: &BootstrapParams,
    table: &CorrugationTable,
) -> Result<StrongStart, NashError> {
    let chart = &u.chart;
    chart.check_same(&g.chart)?;
    let report = check_short(u, g)?;
    if report.class != Shortness::StrictlyShort {
        return Err(NashError::NotStrictlyShort {
            node: report.argmin,
            eigenvalue: report.min_eigenvalue,
        });
    }
    let pull = pullback_metric(u);
    let defect: Vec<Sym2> = g
        .values
        .iter()
        .zip(&pull.values)
        .map(|(a, b)| linalg::sym_sub(a, b))
        .collect();
    let (margin, _) = relative_margin(&g.values, &defect);
    let delta = match p.delta {
        Some(d) => {
            if !(d > 0.0 && margin >= d - 1e-14) {
                return Err(NashError::Params(vec![format!(
                    "delta* = {d} exceeds the shortness margin {margin}"
                )]));
            }
            d
        }
        None => {
            let mut d = p.delta_cap;
            while margin < 2.0 * d {
                d *= 0.5;
                if d < 1e-12 {
                    return Err(NashError::NotStrictlyShort {
                        node: report.argmin,
                        eigenvalue: report.min_eigenvalue,
                    });
                }
            }
            d
        }
    };
    let remainder: Vec<Sym2> = defect
        .iter()
        .zip(&g.values)
        .map(|(d, gk)| linalg::sym_sub(d, &linalg::sym_scale(gk, delta)))
        .collect();

    let n_terms = 3;
    let alpha_star = 1.0 / (8.0 * n_terms as f64);
    let r_sup = remainder.iter().map(linalg::sym_norm).fold(0.0, f64::max);
    let (v, frequencies, steps) = if r_sup <= 1e-12 {
        (u.clone(), Vec::new(), Vec::new())
    } else {
        let n = chart.len() as f64;
        let mut mean = [0.0; 3];
        for r in &remainder {
            for c in 0..3 {
                mean[c] += r[c] / n;
            }
        }
        let frame = if chart.is_periodic() {
            PrimitiveFrame::lattice2(&mean)?
        } else {
            PrimitiveFrame::build2(&mean, p.gamma)?
        };
        let mut amps = vec![Vec::with_capacity(chart.len()); n_terms];
        for r in &remainder {
            let c = frame.coefficients2(r);
            for j in 0..n_terms {
                if c[j] < 0.0 {
                    return Err(DecompositionError::NoPositivity(c[j]).into());
                }
                amps[j].push(c[j].sqrt());
            }
        }
        let frequencies: Vec<f64> = (0..n_terms)
            .map(|j| p.lambda * p.k_factor.powi(j as i32))
            .collect();
        let terms: Vec<StageTerm> = amps
            .into_iter()
            .zip(frame.directions())
            .zip(&frequencies)
            .map(|((a, dir), &lam)| StageTerm {
                amplitude: ScalarField {
                    chart: chart.clone(),
                    values: a,
                },
                phase: Phase::linear(chart, [dir[0], dir[1]]).snapped(lam).0,
            })
            .collect();
        // the terms have no intrinsic length scale below the first wavelength
        let sp = StepParams {
            nu: p.lambda,
            nu_tilde: p.lambda,
            collar: p.collar,
            ..StepParams::new(p.lambda)
        };
        let sg = StageParams {
            frequencies: Some(frequencies),
            ..StageParams::new(p.k_factor)
        };
        let out = stage(u, &terms, &sp, &sg, Some(g), table)?;
        (out.v, out.frequencies, out.steps)
    };

    // g - v#e = delta* g - E with E = v#e - (u#e + R)
    let new_pull = pullback_metric(&v);
    let h_values: Vec<Sym2> = (0..chart.len())
        .map(|k| {
            let e = linalg::sym_sub(
                &new_pull.values[k],
                &linalg::sym_add(&pull.values[k], &remainder[k]),
            );
            linalg::sym_scale(&e, -1.0 / delta)
        })
        .collect();
    let h = MetricField {
        chart: chart.clone(),
        values: h_values,
        spd_bound: None,
    };
    let h_sup = h.sup();
    let pullback_range = relative_margin(&g.values, &new_pull.values);
    let displacement = v.sup_distance(u);
    let c2_norm = norm_report(&v, &[]).c2_norm;
    Ok(StrongStart {
        u: v,
        h,
        delta,
        margin,
        alpha_star,
        h_sup,
        h_bound: p.a0.powf(-alpha_star),
        displacement,
        c2_norm,
        pullback_range,
        strong_ok: pullback_range.0 >= 0.5 && pullback_range.1 <= 1.0,
        frequencies,
        steps,
    })
}
