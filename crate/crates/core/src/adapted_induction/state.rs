//! Adapted short immersions `g - u#e = rho^2 (g + h)` and the node-wise
//! power-law estimates that certify them.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::schedule::{to_f64, Amplitude};
use super::skeleton::SkeletonSet;
use crate::linalg::{self, Sym2};
use crate::tensor_field::{
    pullback_metric, stencil, ImmersionField, MetricField, ScalarField, StencilOrder,
};

/// Log-space slack of the power-law checks.
const LOG_TOLERANCE: f64 = 1e-9;

/// `|value| <= A^ln_a_power * rho^rho_power`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerBound {
    pub ln_a_power: f64,
    pub rho_power: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateCheck {
    pub name: String,
    /// Largest `ln value - ln bound` over the checked nodes; positive when violated.
    pub worst_log_margin: f64,
    pub worst_node: Option<usize>,
    pub violations: usize,
    pub checked: usize,
}

impl EstimateCheck {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Checks `values[k] <= A^a rho[k]^p` in logs at the nodes `keep` admits.
pub fn check_power(
    name: &str,
    values: &[f64],
    rho: &[f64],
    ln_a: f64,
    bound: PowerBound,
    keep: impl Fn(usize) -> bool,
) -> EstimateCheck {
    let mut out = EstimateCheck {
        name: name.into(),
        worst_log_margin: f64::NEG_INFINITY,
        worst_node: None,
        violations: 0,
        checked: 0,
    };
    for k in 0..values.len() {
        if !keep(k) || !(rho[k] > 0.0) {
            continue;
        }
        out.checked += 1;
        let ln_bound = bound.ln_a_power * ln_a + bound.rho_power * rho[k].ln();
        let margin = values[k].abs().ln() - ln_bound;
        if margin > out.worst_log_margin {
            out.worst_log_margin = margin;
            out.worst_node = Some(k);
        }
        if margin > LOG_TOLERANCE {
            out.violations += 1;
        }
    }
    out
}

/// Node-wise sizes of the quantities the estimates control.
#[derive(Clone, Debug)]
pub struct DerivativeSizes {
    /// Frobenius norm of the second derivatives of `u`.
    pub hessian_u: Vec<f64>,
    pub grad_rho: Vec<f64>,
    /// Operator norm of `h`.
    pub h: Vec<f64>,
    /// Frobenius norm of the first derivatives of `h`.
    pub grad_h: Vec<f64>,
}

/// Second derivatives of `u` come from stencils of its (tracked) Jacobian,
/// which is smooth at the resolved frequencies.
pub fn derivative_sizes(u: &ImmersionField, rho: &ScalarField, h: &MetricField) -> DerivativeSizes {
    let chart = &u.chart;
    let n = chart.len();
    let jac = u.jacobian();
    let mut hessian_u = vec![0.0; n];
    for c in 0..6 {
        let comp: Vec<f64> = jac.iter().map(|j| j[c / 2][c % 2]).collect();
        for (acc, g) in hessian_u.iter_mut().zip(stencil::gradient(chart, &comp, StencilOrder::Fourth)) {
            *acc += g[0] * g[0] + g[1] * g[1];
        }
    }
    hessian_u.iter_mut().for_each(|v| *v = v.sqrt());
    let grad_rho = rho
        .gradient(StencilOrder::Fourth)
        .iter()
        .map(|g| g[0].hypot(g[1]))
        .collect();
    let mut grad_h = vec![0.0; n];
    for (c, weight) in [(0, 1.0), (1, 2.0), (2, 1.0)] {
        let comp: Vec<f64> = h.values.iter().map(|m| m[c]).collect();
        for (acc, g) in grad_h.iter_mut().zip(stencil::gradient(chart, &comp, StencilOrder::Fourth)) {
            *acc += weight * (g[0] * g[0] + g[1] * g[1]);
        }
    }
    grad_h.iter_mut().for_each(|v| *v = v.sqrt());
    DerivativeSizes {
        hessian_u,
        grad_rho,
        h: h.values.iter().map(linalg::sym_norm).collect(),
        grad_h,
    }
}

/// Sup over nodes of `|g - u#e - rho^2 (g + h)|`.
pub fn factorization_residual(u: &ImmersionField, rho: &ScalarField, h: &MetricField, g: &MetricField) -> f64 {
    let pull = pullback_metric(u);
    (0..g.values.len())
        .map(|k| {
            let r2 = rho.values[k] * rho.values[k];
            let defect = linalg::sym_sub(&g.values[k], &pull.values[k]);
            let model = linalg::sym_scale(&linalg::sym_add(&g.values[k], &h.values[k]), r2);
            linalg::sym_norm(&linalg::sym_sub(&defect, &model))
        })
        .fold(0.0, f64::max)
}

/// Smallest eigenvalue of `g^{-1/2} (g - u#e) g^{-1/2}` and where it sits.
pub fn min_defect_eigenvalue(u: &ImmersionField, g: &MetricField) -> (f64, usize) {
    let pull = pullback_metric(u);
    let mut best = (f64::INFINITY, 0);
    for (k, (a, b)) in g.values.iter().zip(&pull.values).enumerate() {
        let lo = linalg::relative_eig(&linalg::sym_sub(a, b), a).map_or(f64::NEG_INFINITY, |e| e.0);
        if lo < best.0 {
            best = (lo, k);
        }
    }
    best
}

/// `g - u#e = rho^2 (g + h)` with `{rho = 0} = Sigma`.
#[derive(Clone, Debug)]
pub struct AdaptedState {
    pub u: ImmersionField,
    pub rho: ScalarField,
    pub h: MetricField,
    pub sigma: SkeletonSet,
    pub amplitude: Amplitude,
    pub theta: BigRational,
    pub alpha: BigRational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub factorization_residual: f64,
    /// Extreme eigenvalues of `g^{-1/2} h g^{-1/2}`.
    pub h_range: (f64, f64),
    /// `-g/2 <= h <= g/2`.
    pub strong: bool,
    pub min_defect_eigenvalue: f64,
    pub estimates: Vec<EstimateCheck>,
    pub valid: bool,
}

/// Residual bound of the factorization in a certificate.
const CERTIFICATE_TOLERANCE: f64 = 1e-10;

impl AdaptedState {
    /// Strong start `g - u#e = delta (g + h)` with respect to the empty set.
    pub fn from_strong(
        u: ImmersionField,
        h: MetricField,
        delta: f64,
        amplitude: Amplitude,
        theta: BigRational,
        alpha: BigRational,
    ) -> Self {
        let rho = ScalarField::constant(&u.chart, delta.sqrt());
        Self {
            u,
            rho,
            h,
            sigma: SkeletonSet::Empty,
            amplitude,
            theta,
            alpha,
        }
    }

    pub fn theta_f64(&self) -> f64 {
        to_f64(&self.theta)
    }

    /// Checks the factorization, the strong bound on `h`, and the adapted
    /// estimates `|grad^2 u|, |grad rho| <= A rho^{1 - 1/theta}`,
    /// `|grad h| <= A rho^{-1/theta}` at nodes with `rho > rho_floor`.
    pub fn certify(&self, g: &MetricField, rho_floor: f64) -> Certificate {
        let factorization_residual = factorization_residual(&self.u, &self.rho, &self.h, g);
        let mut h_range = (f64::INFINITY, f64::NEG_INFINITY);
        for (m, gk) in self.h.values.iter().zip(&g.values) {
            if let Some((lo, hi)) = linalg::relative_eig(m, gk) {
                h_range = (h_range.0.min(lo), h_range.1.max(hi));
            }
        }
        let strong = h_range.0 >= -0.5 && h_range.1 <= 0.5;
        let (min_eig, _) = min_defect_eigenvalue(&self.u, g);
        let sizes = derivative_sizes(&self.u, &self.rho, &self.h);
        let theta = self.theta_f64();
        let ln_a = self.amplitude.ln();
        let rho = &self.rho.values;
        let keep = |k: usize| rho[k] > rho_floor;
        let u_bound = PowerBound {
            ln_a_power: 1.0,
            rho_power: 1.0 - 1.0 / theta,
        };
        let estimates = vec![
            check_power("second derivatives of u", &sizes.hessian_u, rho, ln_a, u_bound, keep),
            check_power("gradient of rho", &sizes.grad_rho, rho, ln_a, u_bound, keep),
            check_power(
                "gradient of h",
                &sizes.grad_h,
                rho,
                ln_a,
                PowerBound {
                    ln_a_power: 1.0,
                    rho_power: -1.0 / theta,
                },
                keep,
            ),
        ];
        let valid = factorization_residual < CERTIFICATE_TOLERANCE
            && strong
            && min_eig >= 0.0
            && estimates.iter().all(EstimateCheck::holds);
        Certificate {
            factorization_residual,
            h_range,
            strong,
            min_defect_eigenvalue: min_eig,
            estimates,
            valid,
        }
    }
}

/// `h = (g - u#e) / rho^2 - g` at the nodes `update` admits, copied from
/// `previous` elsewhere.
pub(super) fn refactor(
    u: &ImmersionField,
    rho: &ScalarField,
    g: &MetricField,
    previous: &MetricField,
    update: impl Fn(usize) -> bool,
) -> MetricField {
    let pull = pullback_metric(u);
    let values: Vec<Sym2> = (0..g.values.len())
        .map(|k| {
            if !update(k) {
                return previous.values[k];
            }
            let r2 = rho.values[k] * rho.values[k];
            let defect = linalg::sym_sub(&g.values[k], &pull.values[k]);
            linalg::sym_sub(&linalg::sym_scale(&defect, 1.0 / r2), &g.values[k])
        })
        .collect();
    MetricField {
        chart: g.chart.clone(),
        values,
        spd_bound: None,
    }
}
