//! The error-size recursion `rho_{q+1}^2 = rho_q^2 (1 - chi_q^2) + delta_{q+2} chi_q^2`
//! and node-wise checks of its four structural properties.

use serde::{Deserialize, Serialize};

use crate::tensor_field::ScalarField;

/// Relative slack for comparisons against the ladder levels.
const LEVEL_TOLERANCE: f64 = 1e-12;

/// `rho_{q+1}`. Nodes with `chi = 0` copy `rho_q` bit for bit.
pub fn update_rho(rho: &ScalarField, chi: &ScalarField, delta: f64) -> ScalarField {
    let values = rho
        .values
        .iter()
        .zip(&chi.values)
        .map(|(&r, &c)| {
            if c == 0.0 {
                r
            } else {
                let c2 = c * c;
                (r * r * (1.0 - c2) + delta * c2).sqrt()
            }
        })
        .collect();
    ScalarField {
        chart: rho.chart.clone(),
        values,
    }
}

/// First offending node of one property, with the measured value and the
/// bound it broke.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaViolation {
    pub property: String,
    pub node: usize,
    pub value: f64,
    pub bound: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoLemmaReport {
    /// `min rho_q / delta_{q+2}^{1/2}` over `supp chi~_q` (at least 3/2).
    pub lower_ratio: f64,
    /// `max rho_q / delta_{q+1}^{1/2}` over `supp chi~_q` (at most 2).
    pub upper_ratio: f64,
    pub violations: Vec<LemmaViolation>,
}

impl RhoLemmaReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Inputs of the lemma check at level `q`.
pub struct LemmaInputs<'a> {
    pub rho0: &'a ScalarField,
    pub rho: &'a ScalarField,
    pub rho_next: &'a ScalarField,
    pub chi: &'a ScalarField,
    pub chi_tilde: &'a ScalarField,
    /// Distance to `Sigma`.
    pub sigma_distance: &'a ScalarField,
    /// `delta_{q+1}` and `delta_{q+2}`.
    pub delta: [f64; 2],
    /// Radius of `Sigma_{q+1}`, i.e. `r_* r_{q+1}`.
    pub inner_radius: f64,
}

/// Checks at every node:
/// (i) `3/2 delta_{q+2}^{1/2} <= rho_q <= 2 delta_{q+1}^{1/2}` on `supp chi~_q`;
/// (ii) `rho_{q+1} <= rho_q`;
/// (iii) `rho_q < delta_{q+1}^{1/2}` forces `rho_q = rho_0` exactly (strict:
///       saturated nodes sit at `delta_{q+1}^{1/2}` itself);
/// (iv) `rho_q >= delta_{q+1}^{1/2}` forces `chi_q = 1` or `x` outside `Sigma_{q+1}`.
pub fn check_rho_lemma(inp: &LemmaInputs<'_>) -> RhoLemmaReport {
    let s1 = inp.delta[0].sqrt();
    let s2 = inp.delta[1].sqrt();
    let mut lower_ratio = f64::INFINITY;
    let mut upper_ratio: f64 = 0.0;
    let mut violations: Vec<LemmaViolation> = Vec::new();
    let mut record = |property: &str, node: usize, value: f64, bound: f64| {
        if let Some(v) = violations.iter_mut().find(|v| v.property == property) {
            v.count += 1;
        } else {
            violations.push(LemmaViolation {
                property: property.into(),
                node,
                value,
                bound,
                count: 1,
            });
        }
    };
    for k in 0..inp.rho.values.len() {
        let r = inp.rho.values[k];
        if inp.chi_tilde.values[k] > 0.0 {
            lower_ratio = lower_ratio.min(r / s2);
            upper_ratio = upper_ratio.max(r / s1);
            if r < 1.5 * s2 * (1.0 - LEVEL_TOLERANCE) {
                record("(i) lower band", k, r, 1.5 * s2);
            }
            if r > 2.0 * s1 * (1.0 + LEVEL_TOLERANCE) {
                record("(i) upper band", k, r, 2.0 * s1);
            }
        }
        let rn = inp.rho_next.values[k];
        if rn > r * (1.0 + LEVEL_TOLERANCE) {
            record("(ii) monotone", k, rn, r);
        }
        if r < s1 * (1.0 - LEVEL_TOLERANCE) && r != inp.rho0.values[k] {
            record("(iii) frozen", k, r, inp.rho0.values[k]);
        }
        if r >= s1 && inp.chi.values[k] != 1.0 && inp.sigma_distance.values[k] < inp.inner_radius {
            record("(iv) saturated", k, inp.chi.values[k], 1.0);
        }
    }
    if !lower_ratio.is_finite() {
        lower_ratio = 0.0;
    }
    RhoLemmaReport {
        lower_ratio,
        upper_ratio,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_field::GridChart;

    #[test]
    fn trivial_cutoffs() {
        let chart = GridChart::torus(1.0, 8).unwrap();
        let rho = ScalarField::from_fn(&chart, |x| 0.1 + 0.05 * x[0]);
        let zero = ScalarField::constant(&chart, 0.0);
        assert_eq!(update_rho(&rho, &zero, 0.01).values, rho.values);
        let one = ScalarField::constant(&chart, 1.0);
        for v in update_rho(&rho, &one, 0.01).values {
            assert!((v - 0.1).abs() < 1e-16);
        }
    }
}
