use std::f64::consts::TAU;

use crate::decomposition::ConformalFactorization;
use crate::tensor_field::{stencil, GridChart, ScalarField, StencilOrder};

/// Phase function of a primitive metric, with its gradient.
///
/// `values` hold the full phase. On a torus the phase is `drift . x` plus a
/// periodic part, and the corrugation `Gamma(s, lambda Phi)` is periodic only
/// when `lambda drift_a L_a` is a multiple of `2 pi` on both axes.
#[derive(Clone, Debug, PartialEq)]
pub struct Phase {
    pub values: ScalarField,
    pub drift: [f64; 2],
    pub gradient: Vec<[f64; 2]>,
}

impl Phase {
    /// `x -> dir . x`.
    pub fn linear(chart: &GridChart, dir: [f64; 2]) -> Self {
        Self {
            values: ScalarField::from_fn(chart, |x| dir[0] * x[0] + dir[1] * x[1]),
            drift: if chart.is_periodic() { dir } else { [0.0; 2] },
            gradient: vec![dir; chart.len()],
        }
    }

    /// Phase from samples, with gradient from fourth-order stencils of the
    /// part that is periodic on a torus.
    pub fn from_scalar(f: &ScalarField, drift: [f64; 2]) -> Self {
        let chart = &f.chart;
        let drift = if chart.is_periodic() { drift } else { [0.0; 2] };
        let periodic: Vec<f64> = (0..chart.len())
            .map(|k| {
                let x = chart.node_coords(k);
                f.values[k] - drift[0] * x[0] - drift[1] * x[1]
            })
            .collect();
        let gradient = stencil::gradient(chart, &periodic, StencilOrder::Fourth)
            .into_iter()
            .map(|g| [g[0] + drift[0], g[1] + drift[1]])
            .collect();
        Self {
            values: f.clone(),
            drift,
            gradient,
        }
    }

    /// Component `c` of conformal coordinates.
    pub fn from_conformal(fac: &ConformalFactorization, c: usize) -> Self {
        let drift = if fac.chart.is_periodic() {
            fac.phi_drift[c]
        } else {
            [0.0; 2]
        };
        Self {
            values: fac.phi[c].clone(),
            drift,
            gradient: fac.gradient(c),
        }
    }

    pub fn chart(&self) -> &GridChart {
        &self.values.chart
    }

    /// Largest `|lambda drift_a L_a / 2pi - round(...)|` over the axes; zero
    /// off the torus.
    pub fn commensurability_defect(&self, lambda: f64) -> f64 {
        let chart = self.chart();
        if !chart.is_periodic() {
            return 0.0;
        }
        let ext = chart.extent();
        (0..2)
            .map(|a| {
                let w = lambda * self.drift[a] * ext[a] / TAU;
                (w - w.round()).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Nearest commensurate phase at frequency `lambda` and the size of the
    /// drift change. Off the torus the phase is returned unchanged.
    pub fn snapped(&self, lambda: f64) -> (Self, f64) {
        let chart = self.chart();
        if !chart.is_periodic() {
            return (self.clone(), 0.0);
        }
        let ext = chart.extent();
        let mut shift = [0.0; 2];
        for a in 0..2 {
            let quantum = TAU / (lambda * ext[a]);
            shift[a] = (self.drift[a] / quantum).round() * quantum - self.drift[a];
        }
        let values = ScalarField {
            chart: chart.clone(),
            values: (0..chart.len())
                .map(|k| {
                    let x = chart.node_coords(k);
                    self.values.values[k] + shift[0] * x[0] + shift[1] * x[1]
                })
                .collect(),
        };
        let gradient = self
            .gradient
            .iter()
            .map(|g| [g[0] + shift[0], g[1] + shift[1]])
            .collect();
        (
            Self {
                values,
                drift: [self.drift[0] + shift[0], self.drift[1] + shift[1]],
                gradient,
            },
            shift[0].hypot(shift[1]),
        )
    }
}
