use serde::{Deserialize, Serialize};

use super::stencil::{self, StencilOrder};
use super::{FieldError, GridChart};
use crate::linalg::{self, Jac, Sym2, Vec3};

/// Uniform sampled view shared by all field kinds: the component arrays
/// together with a per-component linear part (nonzero only for immersions
/// of a torus, which are equivariant rather than periodic).
pub trait GridField {
    fn chart(&self) -> &GridChart;
    /// Periodic (or plain) part of each component.
    fn components(&self) -> Vec<Vec<f64>>;
    /// Constant gradient of the linear part of each component.
    fn slopes(&self) -> Vec<[f64; 2]> {
        vec![[0.0; 2]; self.components().len()]
    }
    /// First derivatives, `[d1 c0, d2 c0, d1 c1, ...]`.
    fn gradients(&self, order: StencilOrder) -> Vec<Vec<f64>> {
        let chart = self.chart();
        let slopes = self.slopes();
        let mut out = Vec::new();
        for (c, s) in self.components().iter().zip(slopes) {
            for (axis, s_axis) in s.iter().enumerate() {
                let mut d = stencil::derivative(chart, c, axis, order);
                d.iter_mut().for_each(|v| *v += s_axis);
                out.push(d);
            }
        }
        out
    }
}

fn check_finite(values: impl Iterator<Item = f64>) -> Result<(), FieldError> {
    for (k, v) in values.enumerate() {
        if !v.is_finite() {
            return Err(FieldError::NonFinite(k));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub chart: GridChart,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(chart: GridChart, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != chart.len() {
            return Err(FieldError::Length {
                expected: chart.len(),
                got: values.len(),
            });
        }
        check_finite(values.iter().copied())?;
        Ok(Self { chart, values })
    }

    pub fn from_fn(chart: &GridChart, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..chart.len()).map(|k| f(chart.node_coords(k))).collect();
        Self {
            chart: chart.clone(),
            values,
        }
    }

    pub fn constant(chart: &GridChart, c: f64) -> Self {
        Self {
            chart: chart.clone(),
            values: vec![c; chart.len()],
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            chart: self.chart.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn gradient(&self, order: StencilOrder) -> Vec<[f64; 2]> {
        stencil::gradient(&self.chart, &self.values, order)
    }
}

impl GridField for ScalarField {
    fn chart(&self) -> &GridChart {
        &self.chart
    }
    fn components(&self) -> Vec<Vec<f64>> {
        vec![self.values.clone()]
    }
}

/// Symmetric 2x2 tensor per node, stored as `[m11, m12, m22]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricField {
    pub chart: GridChart,
    pub values: Vec<Sym2>,
    /// Ellipticity bound `gamma` when the field is known to satisfy
    /// `Id / gamma <= m <= gamma Id`.
    pub spd_bound: Option<f64>,
}

impl MetricField {
    pub fn new(chart: GridChart, values: Vec<Sym2>) -> Result<Self, FieldError> {
        if values.len() != chart.len() {
            return Err(FieldError::Length {
                expected: chart.len(),
                got: values.len(),
            });
        }
        check_finite(values.iter().flat_map(|m| m.iter().copied()))?;
        Ok(Self {
            chart,
            values,
            spd_bound: None,
        })
    }

    pub fn from_fn(chart: &GridChart, f: impl Fn([f64; 2]) -> Sym2) -> Self {
        let values = (0..chart.len()).map(|k| f(chart.node_coords(k))).collect();
        Self {
            chart: chart.clone(),
            values,
            spd_bound: None,
        }
    }

    pub fn constant(chart: &GridChart, m: Sym2) -> Self {
        Self {
            chart: chart.clone(),
            values: vec![m; chart.len()],
            spd_bound: None,
        }
    }

    pub fn identity(chart: &GridChart) -> Self {
        Self::constant(chart, [1.0, 0.0, 1.0])
    }

    /// Records `gamma` after verifying the eigenvalue band at every node.
    pub fn with_spd_bound(mut self, gamma: f64) -> Result<Self, FieldError> {
        for (k, m) in self.values.iter().enumerate() {
            let (lo, hi) = linalg::sym_eig(m);
            if lo < 1.0 / gamma || hi > gamma {
                return Err(FieldError::NotElliptic { node: k, gamma });
            }
        }
        self.spd_bound = Some(gamma);
        Ok(self)
    }

    /// Smallest `gamma` with `Id / gamma <= m <= gamma Id` everywhere, or
    /// `None` if some node is not positive definite.
    pub fn ellipticity(&self) -> Option<f64> {
        let mut gamma: f64 = 1.0;
        for m in &self.values {
            let (lo, hi) = linalg::sym_eig(m);
            if lo <= 0.0 {
                return None;
            }
            gamma = gamma.max(1.0 / lo).max(hi);
        }
        Some(gamma)
    }

    pub fn zip_map(&self, other: &MetricField, f: impl Fn(&Sym2, &Sym2) -> Sym2) -> Self {
        Self {
            chart: self.chart.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(a, b))
                .collect(),
            spd_bound: None,
        }
    }

    pub fn map(&self, f: impl Fn(usize, &Sym2) -> Sym2) -> Self {
        Self {
            chart: self.chart.clone(),
            values: self.values.iter().enumerate().map(|(k, m)| f(k, m)).collect(),
            spd_bound: None,
        }
    }

    /// Largest operator norm over nodes.
    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(linalg::sym_norm(v)))
    }

    /// Largest operator norm over nodes accepted by `keep`.
    pub fn sup_where(&self, keep: impl Fn(usize) -> bool) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(k, _)| keep(*k))
            .fold(0.0, |m, (_, v)| m.max(linalg::sym_norm(v)))
    }
}

impl GridField for MetricField {
    fn chart(&self) -> &GridChart {
        &self.chart
    }
    fn components(&self) -> Vec<Vec<f64>> {
        (0..3)
            .map(|c| self.values.iter().map(|m| m[c]).collect())
            .collect()
    }
}

/// Map into R^3 sampled on a chart.
///
/// On a torus the map is `x -> drift x + periodic(x)`; `values` hold the full
/// map at the nodes and `drift` its constant linear part. An optional exact
/// Jacobian can ride along; it is produced by the corrugation step through
/// the chain rule and takes precedence over stencil derivatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImmersionField {
    pub chart: GridChart,
    pub values: Vec<Vec3>,
    pub drift: Jac,
    pub order: StencilOrder,
    pub jacobian: Option<Vec<Jac>>,
}

impl ImmersionField {
    pub fn new(chart: GridChart, values: Vec<Vec3>, order: StencilOrder) -> Result<Self, FieldError> {
        if values.len() != chart.len() {
            return Err(FieldError::Length {
                expected: chart.len(),
                got: values.len(),
            });
        }
        check_finite(values.iter().flat_map(|m| m.iter().copied()))?;
        Ok(Self {
            chart,
            values,
            drift: [[0.0; 2]; 3],
            order,
            jacobian: None,
        })
    }

    pub fn from_fn(chart: &GridChart, f: impl Fn([f64; 2]) -> Vec3) -> Self {
        let values = (0..chart.len()).map(|k| f(chart.node_coords(k))).collect();
        Self {
            chart: chart.clone(),
            values,
            drift: [[0.0; 2]; 3],
            order: StencilOrder::Fourth,
            jacobian: None,
        }
    }

    /// `x -> scale (x1, x2, 0)`. On a torus the linear part is the drift.
    pub fn flat(chart: &GridChart, scale: f64) -> Self {
        let mut u = Self::from_fn(chart, |x| [scale * x[0], scale * x[1], 0.0]);
        if chart.is_periodic() {
            u.drift = [[scale, 0.0], [0.0, scale], [0.0, 0.0]];
        }
        u
    }

    /// Equivariant map on a torus: `drift x + periodic(x)`.
    pub fn equivariant(
        chart: &GridChart,
        drift: Jac,
        periodic: impl Fn([f64; 2]) -> Vec3,
    ) -> Result<Self, FieldError> {
        if !chart.is_periodic() {
            return Err(FieldError::NotPeriodic);
        }
        let mut u = Self::from_fn(chart, |x| {
            let p = periodic(x);
            [
                drift[0][0] * x[0] + drift[0][1] * x[1] + p[0],
                drift[1][0] * x[0] + drift[1][1] * x[1] + p[1],
                drift[2][0] * x[0] + drift[2][1] * x[1] + p[2],
            ]
        });
        u.drift = drift;
        Ok(u)
    }

    pub fn with_order(mut self, order: StencilOrder) -> Self {
        self.order = order;
        self
    }

    pub fn with_jacobian(mut self, jac: Vec<Jac>) -> Result<Self, FieldError> {
        if jac.len() != self.chart.len() {
            return Err(FieldError::Length {
                expected: self.chart.len(),
                got: jac.len(),
            });
        }
        self.jacobian = Some(jac);
        Ok(self)
    }

    /// Linear part evaluated at a node.
    pub fn linear_at(&self, idx: usize) -> Vec3 {
        let x = self.chart.node_coords(idx);
        let d = &self.drift;
        [
            d[0][0] * x[0] + d[0][1] * x[1],
            d[1][0] * x[0] + d[1][1] * x[1],
            d[2][0] * x[0] + d[2][1] * x[1],
        ]
    }

    /// Jacobian from stencils only, ignoring any tracked Jacobian.
    pub fn stencil_jacobian(&self) -> Vec<Jac> {
        let grads = GridField::gradients(self, self.order);
        (0..self.chart.len())
            .map(|k| {
                [
                    [grads[0][k], grads[1][k]],
                    [grads[2][k], grads[3][k]],
                    [grads[4][k], grads[5][k]],
                ]
            })
            .collect()
    }

    /// Tracked Jacobian when present, stencil Jacobian otherwise.
    pub fn jacobian(&self) -> Vec<Jac> {
        match &self.jacobian {
            Some(j) => j.clone(),
            None => self.stencil_jacobian(),
        }
    }

    /// Smallest singular value of the Jacobian over all nodes.
    pub fn min_singular_value(&self) -> f64 {
        self.jacobian()
            .iter()
            .map(|j| linalg::sym_eig(&linalg::gram(j)).0.max(0.0).sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    /// Sup over nodes of the Euclidean distance to `other`.
    pub fn sup_distance(&self, other: &ImmersionField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| linalg::norm3(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]]))
            .fold(0.0, f64::max)
    }
}

impl GridField for ImmersionField {
    fn chart(&self) -> &GridChart {
        &self.chart
    }
    fn components(&self) -> Vec<Vec<f64>> {
        (0..3)
            .map(|c| {
                self.values
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v[c] - self.linear_at(k)[c])
                    .collect()
            })
            .collect()
    }
    fn slopes(&self) -> Vec<[f64; 2]> {
        self.drift.to_vec()
    }
    fn gradients(&self, order: StencilOrder) -> Vec<Vec<f64>> {
        match &self.jacobian {
            Some(jac) => (0..6)
                .map(|c| jac.iter().map(|j| j[c / 2][c % 2]).collect())
                .collect(),
            None => {
                let chart = &self.chart;
                let mut out = Vec::new();
                for (c, s) in self.components().iter().zip(self.slopes()) {
                    for (axis, s_axis) in s.iter().enumerate() {
                        let mut d = stencil::derivative(chart, c, axis, order);
                        d.iter_mut().for_each(|v| *v += s_axis);
                        out.push(d);
                    }
                }
                out
            }
        }
    }
}

/// Pullback metric `grad u^T grad u`, exactly symmetric by storage.
pub fn pullback_metric(u: &ImmersionField) -> MetricField {
    MetricField {
        chart: u.chart.clone(),
        values: u.jacobian().iter().map(linalg::gram).collect(),
        spd_bound: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_metric(m: &MetricField, expect: Sym2, tol: f64) {
        for v in &m.values {
            for c in 0..3 {
                assert!((v[c] - expect[c]).abs() < tol, "{v:?} vs {expect:?}");
            }
        }
    }

    #[test]
    fn flat_plane_pulls_back_identity() {
        let c = GridChart::square(1.0, 16).unwrap();
        assert_metric(&pullback_metric(&ImmersionField::flat(&c, 1.0)), [1.0, 0.0, 1.0], 1e-12);
        let t = GridChart::torus(1.0, 16).unwrap();
        assert_metric(&pullback_metric(&ImmersionField::flat(&t, 1.0)), [1.0, 0.0, 1.0], 1e-12);
    }

    #[test]
    fn linear_map_pulls_back_diag() {
        let c = GridChart::square(1.0, 16).unwrap();
        let u = ImmersionField::from_fn(&c, |x| [2.0 * x[0], x[1], 0.0]);
        assert_metric(&pullback_metric(&u), [4.0, 0.0, 1.0], 1e-12);
    }

    #[test]
    fn cylinder_is_isometric_to_stencil_order() {
        // Derivative of (cos x, sin x, y) is (-sin x, cos x, 0), (0, 0, 1): the
        // pullback is exactly Id, so the discrete error is pure truncation.
        let err = |n: usize| {
            let c = GridChart::square(1.0, n).unwrap();
            let u = ImmersionField::from_fn(&c, |x| [x[0].cos(), x[0].sin(), x[1]]);
            let g = pullback_metric(&u);
            g.values
                .iter()
                .enumerate()
                .filter(|(k, _)| c.in_interior(*k, 2))
                .map(|(_, m)| (m[0] - 1.0).abs().max(m[1].abs()).max((m[2] - 1.0).abs()))
                .fold(0.0, f64::max)
        };
        assert!(err(33) < 1e-6);
        assert!(err(33) / err(65) > 12.0);
    }

    #[test]
    fn non_finite_rejected() {
        let c = GridChart::square(1.0, 8).unwrap();
        let mut v = vec![0.0; 64];
        v[5] = f64::NAN;
        assert!(matches!(ScalarField::new(c, v), Err(FieldError::NonFinite(5))));
    }
}
