use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{NashError, Phase};
use crate::corrugation::CorrugationTable;
use crate::linalg::{self, Jac, Sym2, Vec3};
use crate::tensor_field::{
    norm_report, stencil, GridChart, ImmersionField, MetricField, Mollifier, NormReport,
    ScalarField, StencilOrder, MIN_RADIUS_CELLS,
};

pub const MIN_NODES_PER_WAVELENGTH: f64 = 16.0;
/// Largest admissible condition number of the mollified pullback.
pub const MAX_CONDITION: f64 = 1e6;
/// `v - u` must vanish to this level off the support of the amplitude.
pub const SUPPORT_TOLERANCE: f64 = 1e-14;

/// Frequency and regularity scales of a step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    pub lambda: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub nu: f64,
    pub nu_tilde: f64,
    /// Bound `M` on the phase gradient, `1/M <= |grad Phi| <= M`.
    pub m_bound: f64,
    /// Ellipticity `gamma` of the pullback of `u`.
    pub gamma: f64,
    pub c0: f64,
    /// Boundary collar (in cells) left out of defect measurements on
    /// clamped charts.
    pub collar: usize,
}

impl StepParams {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            epsilon: 1.0,
            delta: 1.0,
            nu: 1.0,
            nu_tilde: 1.0,
            m_bound: 4.0,
            gamma: 4.0,
            c0: 1.0,
            collar: 2,
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }

    /// Smallest frequency allowed by the amplitude and derivative scales.
    pub fn min_lambda(&self) -> f64 {
        self.c0 * (self.delta / self.epsilon).sqrt() * self.nu_tilde
    }

    /// Band `[1/gamma_bar, gamma_bar]` promised for the new pullback. The
    /// upper end adds the largest primitive metric the amplitude bound
    /// allows.
    pub fn gamma_bar(&self) -> f64 {
        2.0 * self.gamma + self.m_bound.powi(4) * self.epsilon
    }

    pub fn validate(&self) -> Result<(), NashError> {
        let mut problems = Vec::new();
        let positive = |v: f64| v > 0.0 && v.is_finite();
        for (name, v) in [
            ("lambda", self.lambda),
            ("epsilon", self.epsilon),
            ("delta", self.delta),
            ("nu", self.nu),
            ("nu_tilde", self.nu_tilde),
            ("c0", self.c0),
        ] {
            if !positive(v) {
                problems.push(format!("{name} = {v} must be positive"));
            }
        }
        if !(self.m_bound >= 1.0 && self.gamma >= 1.0) {
            problems.push(format!(
                "M = {} and gamma = {} must be at least 1",
                self.m_bound, self.gamma
            ));
        }
        if !(self.epsilon <= self.delta && self.delta <= 1.0) {
            problems.push(format!(
                "need epsilon <= delta <= 1, got epsilon = {}, delta = {}",
                self.epsilon, self.delta
            ));
        }
        if self.nu > self.nu_tilde {
            problems.push(format!(
                "need nu <= nu_tilde, got {} > {}",
                self.nu, self.nu_tilde
            ));
        }
        if problems.is_empty() && self.lambda < self.min_lambda() {
            problems.push(format!(
                "lambda = {} below c0 (delta/epsilon)^(1/2) nu_tilde = {}",
                self.lambda,
                self.min_lambda()
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(NashError::Params(problems))
        }
    }
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub v: ImmersionField,
    /// `grad v^T grad v - (grad u^T grad u + rho^2 grad Phi (x) grad Phi)`.
    pub defect: MetricField,
    /// Sup of the defect outside the boundary collar.
    pub sup_defect: f64,
    pub diff_norms: NormReport,
    pub norms: NormReport,
    /// Largest `|v - u|` over nodes where the amplitude vanishes.
    pub support_residual: f64,
    pub support_ok: bool,
    /// Extreme eigenvalues of the new pullback.
    pub eig_range: (f64, f64),
    pub gamma_bar: f64,
    pub band_ok: bool,
    /// Largest corrugation amplitude `|xi~| rho` fed to the table.
    pub max_amplitude: f64,
    pub lambda: f64,
}

/// Jacobian of the map mollified at length `ell`, by mollifying the Jacobian
/// itself. Renormalization near clamped edges keeps this an average of
/// nearby Jacobians, so linear maps are reproduced exactly.
pub(crate) fn mollified_jacobian(
    chart: &GridChart,
    jac: &[Jac],
    ell: f64,
) -> Result<Vec<Jac>, NashError> {
    let ell = ell.max(MIN_RADIUS_CELLS * chart.max_spacing() * (1.0 + 1e-12));
    let m = Mollifier::new(chart, ell)?;
    let comps: Vec<Vec<f64>> = (0..6)
        .map(|c| jac.iter().map(|j| j[c / 2][c % 2]).collect())
        .collect();
    let refs: Vec<&[f64]> = comps.iter().map(|c| c.as_slice()).collect();
    let r = m.apply_many(&refs);
    Ok((0..chart.len())
        .map(|k| {
            [
                [r[0][k], r[1][k]],
                [r[2][k], r[3][k]],
                [r[4][k], r[5][k]],
            ]
        })
        .collect())
}

/// Tangential and normal directions and the corrugation amplitude at a node.
struct Frame {
    xi: Vec3,
    zeta: Vec3,
    amp: f64,
}

fn frame_at(jt: &Jac, grad_phi: &[f64; 2], rho: f64) -> Result<Frame, f64> {
    let a = linalg::gram(jt);
    let (lo, hi) = linalg::sym_eig(&a);
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(condition);
    }
    let ai = linalg::sym_inv(&a).ok_or(condition)?;
    let w = [
        ai[0] * grad_phi[0] + ai[1] * grad_phi[1],
        ai[1] * grad_phi[0] + ai[2] * grad_phi[1],
    ];
    let xt: Vec3 = [
        jt[0][0] * w[0] + jt[0][1] * w[1],
        jt[1][0] * w[0] + jt[1][1] * w[1],
        jt[2][0] * w[0] + jt[2][1] * w[1],
    ];
    let zt = linalg::cross3(&linalg::column(jt, 0), &linalg::column(jt, 1));
    let nx = linalg::norm3(&xt);
    let nz = linalg::norm3(&zt);
    Ok(Frame {
        xi: linalg::scale3(&xt, 1.0 / (nx * nx)),
        zeta: linalg::scale3(&zt, 1.0 / (nz * nx)),
        amp: nx * rho,
    })
}

fn check_resolution(
    chart: &GridChart,
    amplitude: &ScalarField,
    phase: &Phase,
    lambda: f64,
) -> Result<(), NashError> {
    let grad_max = (0..chart.len())
        .filter(|&k| amplitude.values[k] != 0.0)
        .map(|k| phase.gradient[k][0].hypot(phase.gradient[k][1]))
        .fold(0.0, f64::max);
    if grad_max == 0.0 {
        return Ok(());
    }
    let per_wavelength = TAU / (lambda * grad_max * chart.max_spacing());
    if per_wavelength < MIN_NODES_PER_WAVELENGTH {
        return Err(NashError::UnderResolved {
            lambda,
            nodes_per_wavelength: per_wavelength,
            required: MIN_NODES_PER_WAVELENGTH,
        });
    }
    Ok(())
}

/// One corrugation step at frequency `p.lambda`:
/// `v = u + (Gamma1(rho~, lambda Phi) xi + Gamma2(rho~, lambda Phi) zeta) / lambda`.
///
/// The directions come from `u` mollified at length `1/lambda`; the new
/// Jacobian is tracked exactly by the chain rule, with stencil gradients of
/// the smooth fields `rho~`, `xi`, `zeta`.
pub fn step(
    u: &ImmersionField,
    amplitude: &ScalarField,
    phase: &Phase,
    p: &StepParams,
    table: &CorrugationTable,
) -> Result<StepOutcome, NashError> {
    p.validate()?;
    let chart = &u.chart;
    chart.check_same(&amplitude.chart)?;
    chart.check_same(phase.chart())?;
    let n = chart.len();
    let lambda = p.lambda;
    if let Some((node, &value)) = amplitude.values.iter().enumerate().find(|(_, &r)| r < 0.0) {
        return Err(NashError::NegativeAmplitude { node, value });
    }
    check_resolution(chart, amplitude, phase, lambda)?;
    if phase.commensurability_defect(lambda) > 1e-9 {
        return Err(NashError::Incommensurate {
            lambda,
            drift: phase.drift,
        });
    }

    let ju = u.jacobian();
    let pull_u: Vec<Sym2> = ju.iter().map(linalg::gram).collect();
    for (k, g) in pull_u.iter().enumerate() {
        if amplitude.values[k] == 0.0 {
            continue;
        }
        let (lo, hi) = linalg::sym_eig(g);
        if lo < 1.0 / p.gamma || hi > p.gamma {
            return Err(NashError::Ellipticity {
                node: k,
                lo,
                hi,
                gamma: p.gamma,
            });
        }
        let gp = phase.gradient[k][0].hypot(phase.gradient[k][1]);
        if gp < 1.0 / p.m_bound || gp > p.m_bound {
            return Err(NashError::PhaseGradient {
                node: k,
                value: gp,
                m_bound: p.m_bound,
            });
        }
    }

    let jt = mollified_jacobian(chart, &ju, 1.0 / lambda)?;
    let frames: Vec<Result<Frame, f64>> = (0..n)
        .into_par_iter()
        .map(|k| frame_at(&jt[k], &phase.gradient[k], amplitude.values[k]))
        .collect();
    let mut xi = vec![[0.0; 3]; n];
    let mut zeta = vec![[0.0; 3]; n];
    let mut amp = vec![0.0; n];
    for (k, f) in frames.into_iter().enumerate() {
        match f {
            Ok(f) => {
                xi[k] = f.xi;
                zeta[k] = f.zeta;
                amp[k] = f.amp;
            }
            Err(condition) => return Err(NashError::Singular { node: k, condition }),
        }
    }
    let s_max = table.s_max();
    let max_amplitude = amp.iter().cloned().fold(0.0, f64::max);
    if let Some(node) = amp.iter().position(|&s| s > s_max) {
        return Err(NashError::AmplitudeOutOfTable {
            node,
            value: amp[node],
            s_max,
        });
    }

    let grad = |f: &[f64]| stencil::gradient(chart, f, StencilOrder::Fourth);
    let grad_amp = grad(&amp);
    let grad_xi: Vec<Vec<[f64; 2]>> = (0..3)
        .map(|c| grad(&xi.iter().map(|x| x[c]).collect::<Vec<_>>()))
        .collect();
    let grad_zeta: Vec<Vec<[f64; 2]>> = (0..3)
        .map(|c| grad(&zeta.iter().map(|z| z[c]).collect::<Vec<_>>()))
        .collect();

    let nodes: Vec<Result<(Vec3, Jac), NashError>> = (0..n)
        .into_par_iter()
        .map(|k| {
            if amplitude.values[k] == 0.0 {
                return Ok((u.values[k], ju[k]));
            }
            let c = table.eval_all(amp[k], lambda * phase.values.values[k])?;
            let mut v = u.values[k];
            let mut j = ju[k];
            let gp = phase.gradient[k];
            let ga = grad_amp[k];
            for r in 0..3 {
                v[r] += (c.gamma[0] * xi[k][r] + c.gamma[1] * zeta[k][r]) / lambda;
                let along = c.dt[0] * xi[k][r] + c.dt[1] * zeta[k][r];
                let across = c.ds[0] * xi[k][r] + c.ds[1] * zeta[k][r];
                for a in 0..2 {
                    j[r][a] += along * gp[a]
                        + (across * ga[a]
                            + c.gamma[0] * grad_xi[r][k][a]
                            + c.gamma[1] * grad_zeta[r][k][a])
                            / lambda;
                }
            }
            Ok((v, j))
        })
        .collect();
    let mut values = Vec::with_capacity(n);
    let mut jv = Vec::with_capacity(n);
    for r in nodes {
        let (v, j) = r?;
        values.push(v);
        jv.push(j);
    }

    let defect_values: Vec<Sym2> = (0..n)
        .map(|k| {
            let target = linalg::sym_add(
                &pull_u[k],
                &linalg::sym_scale(
                    &linalg::outer2(&phase.gradient[k]),
                    amplitude.values[k] * amplitude.values[k],
                ),
            );
            linalg::sym_sub(&linalg::gram(&jv[k]), &target)
        })
        .collect();
    let defect = MetricField {
        chart: chart.clone(),
        values: defect_values,
        spd_bound: None,
    };
    let sup_defect = defect.sup_where(|k| chart.in_interior(k, p.collar));

    let diff = ImmersionField {
        chart: chart.clone(),
        values: (0..n)
            .map(|k| {
                let (a, b) = (values[k], u.values[k]);
                [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
            })
            .collect(),
        drift: [[0.0; 2]; 3],
        order: u.order,
        jacobian: Some(
            (0..n)
                .map(|k| {
                    let mut d = jv[k];
                    for (r, row) in d.iter_mut().enumerate() {
                        row[0] -= ju[k][r][0];
                        row[1] -= ju[k][r][1];
                    }
                    d
                })
                .collect(),
        ),
    };
    let support_residual = (0..n)
        .filter(|&k| amplitude.values[k] == 0.0)
        .map(|k| linalg::norm3(&diff.values[k]))
        .fold(0.0, f64::max);
    let diff_norms = norm_report(&diff, &[]);

    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for j in &jv {
        let (a, b) = linalg::sym_eig(&linalg::gram(j));
        lo = lo.min(a);
        hi = hi.max(b);
    }
    let gamma_bar = p.gamma_bar();
    let v = ImmersionField {
        chart: chart.clone(),
        values,
        drift: u.drift,
        order: u.order,
        jacobian: Some(jv),
    };
    let norms = norm_report(&v, &[]);
    Ok(StepOutcome {
        v,
        defect,
        sup_defect,
        diff_norms,
        norms,
        support_residual,
        support_ok: support_residual <= SUPPORT_TOLERANCE,
        eig_range: (lo, hi),
        gamma_bar,
        band_ok: lo >= 1.0 / gamma_bar && hi <= gamma_bar,
        max_amplitude,
        lambda,
    })
}
