use serde::{Deserialize, Serialize};

use super::field::{pullback_metric, ImmersionField, MetricField, ScalarField};
use super::FieldError;
use crate::linalg;

/// Eigenvalues within this distance of zero count as "short but not strict".
pub const SHORT_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shortness {
    StrictlyShort,
    Short,
    NotShort,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrongShortReport {
    /// Sup norm of `g - u#e - rho^2 (g + h)`.
    pub factorization_residual: f64,
    /// Extreme eigenvalues of `g^{-1/2} h g^{-1/2}` over all nodes.
    pub h_relative_min: f64,
    pub h_relative_max: f64,
    /// True when `-g/2 <= h <= g/2` everywhere.
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShortnessReport {
    /// Smallest eigenvalue of `g - u#e` at each node.
    pub min_eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    pub argmin: usize,
    pub class: Shortness,
    pub strong: Option<StrongShortReport>,
}

pub fn classify(min_eig: f64) -> Shortness {
    if min_eig > SHORT_TOLERANCE {
        Shortness::StrictlyShort
    } else if min_eig >= -SHORT_TOLERANCE {
        Shortness::Short
    } else {
        Shortness::NotShort
    }
}

/// Per-node shortness of `u` with respect to `g`.
pub fn check_short(u: &ImmersionField, g: &MetricField) -> Result<ShortnessReport, FieldError> {
    u.chart.check_same(&g.chart)?;
    let pull = pullback_metric(u);
    Ok(shortness_of_defect(&g.zip_map(&pull, linalg::sym_sub)))
}

/// Shortness report from a precomputed defect `g - u#e`.
pub fn shortness_of_defect(defect: &MetricField) -> ShortnessReport {
    let min_eigenvalues: Vec<f64> = defect.values.iter().map(|m| linalg::sym_eig(m).0).collect();
    let (argmin, min_eigenvalue) = min_eigenvalues
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |(ka, a), (k, v)| if v < a { (k, v) } else { (ka, a) });
    ShortnessReport {
        class: classify(min_eigenvalue),
        min_eigenvalues,
        min_eigenvalue,
        argmin,
        strong: None,
    }
}

/// Shortness report together with the strong-short check of a supplied
/// factorization `g - u#e = rho^2 (g + h)`.
pub fn check_strong_short(
    u: &ImmersionField,
    g: &MetricField,
    rho: &ScalarField,
    h: &MetricField,
) -> Result<ShortnessReport, FieldError> {
    u.chart.check_same(&rho.chart)?;
    u.chart.check_same(&h.chart)?;
    let mut report = check_short(u, g)?;
    let pull = pullback_metric(u);
    let mut residual: f64 = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..g.values.len() {
        let gk = &g.values[k];
        let defect = linalg::sym_sub(gk, &pull.values[k]);
        let r2 = rho.values[k] * rho.values[k];
        let model = linalg::sym_scale(&linalg::sym_add(gk, &h.values[k]), r2);
        residual = residual.max(linalg::sym_norm(&linalg::sym_sub(&defect, &model)));
        let (a, b) = linalg::relative_eig(&h.values[k], gk).ok_or(FieldError::NotElliptic {
            node: k,
            gamma: f64::INFINITY,
        })?;
        lo = lo.min(a);
        hi = hi.max(b);
    }
    report.strong = Some(StrongShortReport {
        factorization_residual: residual,
        h_relative_min: lo,
        h_relative_max: hi,
        holds: lo >= -0.5 && hi <= 0.5,
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_field::GridChart;

    #[test]
    fn scaled_flat_maps() {
        let c = GridChart::square(1.0, 16).unwrap();
        let g = MetricField::identity(&c);
        let r = check_short(&ImmersionField::flat(&c, 0.7), &g).unwrap();
        assert_eq!(r.class, Shortness::StrictlyShort);
        assert!((r.min_eigenvalue - (1.0 - 0.49)).abs() < 1e-12);
        let r = check_short(&ImmersionField::flat(&c, 1.0), &g).unwrap();
        assert_eq!(r.class, Shortness::Short);
        let r = check_short(&ImmersionField::flat(&c, 1.1), &g).unwrap();
        assert_eq!(r.class, Shortness::NotShort);
    }

    #[test]
    fn strong_factorization_of_scaled_map() {
        let c = GridChart::torus(1.0, 16).unwrap();
        let g = MetricField::identity(&c);
        let u = ImmersionField::flat(&c, 0.8);
        let rho = ScalarField::constant(&c, 0.6);
        let h = MetricField::constant(&c, [0.0; 3]);
        let r = check_strong_short(&u, &g, &rho, &h).unwrap();
        let s = r.strong.unwrap();
        assert!(s.holds && s.factorization_residual < 1e-12);
    }
}
