//! Sampled Hölder seminorms and sup/C^k norm reports.
//!
//! Up to `ALL_PAIRS_MAX` nodes per axis every node pair is visited. Above
//! that only separations `(2^j, 0)`, `(0, 2^j)` and `(2^j, +-2^j)` cells are
//! sampled, plus the full-width separations on clamped charts. Either way
//! the result is a lower bound for the continuum seminorm of any
//! interpolant.

use serde::{Deserialize, Serialize};

use super::field::GridField;
use super::stencil::{self, StencilOrder};
use super::GridChart;

pub const ALL_PAIRS_MAX: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DerivOrder {
    Zero,
    One,
}

struct Sampled<'a> {
    chart: &'a GridChart,
    comps: Vec<Vec<f64>>,
    slopes: Vec<[f64; 2]>,
}

impl Sampled<'_> {
    fn quotient(&self, a: usize, b: usize, theta: f64) -> f64 {
        let xa = self.chart.node_coords(a);
        let xb = self.chart.node_coords(b);
        let d = self.chart.displacement(xa, xb);
        let dist = d[0].hypot(d[1]);
        if dist == 0.0 {
            return 0.0;
        }
        let mut sq = 0.0;
        for (c, s) in self.comps.iter().zip(&self.slopes) {
            // Periodic parts differ by their node values; linear parts by the
            // minimum-image displacement.
            let diff = c[a] - c[b] + s[0] * d[0] + s[1] * d[1];
            sq += diff * diff;
        }
        sq.sqrt() / dist.powf(theta)
    }

    fn neighbour(&self, i: usize, j: usize, di: isize, dj: isize) -> Option<usize> {
        let (nx, ny) = (self.chart.nx() as isize, self.chart.ny() as isize);
        let (mut a, mut b) = (i as isize + di, j as isize + dj);
        if self.chart.is_periodic() {
            a = a.rem_euclid(nx);
            b = b.rem_euclid(ny);
        } else if a < 0 || b < 0 || a >= nx || b >= ny {
            return None;
        }
        Some(self.chart.index(a as usize, b as usize))
    }

    fn seminorm(&self, theta: f64) -> f64 {
        let (nx, ny) = (self.chart.nx(), self.chart.ny());
        let mut best: f64 = 0.0;
        if nx.max(ny) <= ALL_PAIRS_MAX {
            let n = self.chart.len();
            for a in 0..n {
                for b in a + 1..n {
                    best = best.max(self.quotient(a, b, theta));
                }
            }
            return best;
        }
        let mut offsets = Vec::new();
        let mut s = 1isize;
        while (s as usize) < nx.max(ny) {
            offsets.extend_from_slice(&[(s, 0), (0, s), (s, s), (s, -s)]);
            s *= 2;
        }
        if !self.chart.is_periodic() {
            // corner-to-corner separations along each axis
            offsets.extend_from_slice(&[(nx as isize - 1, 0), (0, ny as isize - 1)]);
        }
        for j in 0..ny {
            for i in 0..nx {
                let a = self.chart.index(i, j);
                for &(di, dj) in &offsets {
                    if let Some(b) = self.neighbour(i, j, di, dj) {
                        best = best.max(self.quotient(a, b, theta));
                    }
                }
            }
        }
        best
    }
}

/// Hölder seminorm of `f` (order 0) or of its first derivatives (order 1).
/// For vector fields the Euclidean norm over all components is used.
pub fn holder_seminorm<F: GridField>(f: &F, theta: f64, order: DerivOrder) -> f64 {
    let chart = f.chart();
    let sampled = match order {
        DerivOrder::Zero => Sampled {
            chart,
            comps: f.components(),
            slopes: f.slopes(),
        },
        DerivOrder::One => {
            let comps = f.gradients(StencilOrder::Fourth);
            let slopes = vec![[0.0; 2]; comps.len()];
            Sampled {
                chart,
                comps,
                slopes,
            }
        }
    };
    sampled.seminorm(theta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub sup_norm: f64,
    pub c1_norm: f64,
    pub c2_norm: f64,
    pub holder_seminorms: Vec<(f64, f64)>,
}

/// Sup, C^1 and C^2 norms. Each derivative level contributes the sup over
/// nodes of the Frobenius norm of all its entries, so the Lipschitz constant
/// is bounded by the C^1 norm.
pub fn norm_report<F: GridField>(f: &F, thetas: &[f64]) -> NormReport {
    let chart = f.chart();
    let comps = f.components();
    let slopes = f.slopes();
    let n = chart.len();
    let mut sup: f64 = 0.0;
    for (c, s) in comps.iter().zip(&slopes) {
        for k in 0..n {
            let x = chart.node_coords(k);
            sup = sup.max((c[k] + s[0] * x[0] + s[1] * x[1]).abs());
        }
    }
    let frobenius_sup = |fields: &[Vec<f64>]| {
        (0..n)
            .map(|k| fields.iter().map(|g| g[k] * g[k]).sum::<f64>().sqrt())
            .fold(0.0f64, f64::max)
    };
    let grads = f.gradients(StencilOrder::Fourth);
    let d1 = frobenius_sup(&grads);
    let second: Vec<Vec<f64>> = grads
        .iter()
        .flat_map(|g| (0..2).map(move |axis| stencil::derivative(chart, g, axis, StencilOrder::Fourth)))
        .collect();
    let d2 = frobenius_sup(&second);
    NormReport {
        sup_norm: sup,
        c1_norm: sup + d1,
        c2_norm: sup + d1 + d2,
        holder_seminorms: thetas
            .iter()
            .map(|&t| (t, holder_seminorm(f, t, DerivOrder::Zero)))
            .collect(),
    }
}
