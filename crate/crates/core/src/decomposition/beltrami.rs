use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::DecompositionError;
use crate::linalg::{self, Sym2};
use crate::tensor_field::io::Columnar;
use crate::tensor_field::{good_size, wavenumber, Fft2, FieldError, GridChart, MetricField, ScalarField};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Pointwise Beltrami coefficient of an SPD metric.
#[derive(Clone, Debug)]
pub struct BeltramiField {
    pub chart: GridChart,
    pub values: Vec<Complex64>,
    pub sup: f64,
    /// Largest `|mu|^2 - (1 - 4 det / tr^2)`; at most rounding level.
    pub bound_excess: f64,
}

/// `mu = (H11 - H22 + 2i H12) / (H11 + H22 + 2 sqrt(det H))`.
pub fn beltrami_at(h: &Sym2) -> Complex64 {
    let d = linalg::sym_det(h).max(0.0).sqrt();
    Complex64::new(h[0] - h[2], 2.0 * h[1]) / (h[0] + h[2] + 2.0 * d)
}

pub fn beltrami_coefficient(h: &MetricField) -> Result<BeltramiField, DecompositionError> {
    let mut values = Vec::with_capacity(h.values.len());
    let mut sup = 0.0f64;
    let mut excess = f64::NEG_INFINITY;
    for (node, m) in h.values.iter().enumerate() {
        let det = linalg::sym_det(m);
        if !(m[0] > 0.0 && det > 0.0) {
            return Err(DecompositionError::NotSpd { node });
        }
        let mu = beltrami_at(m);
        let tr = linalg::sym_trace(m);
        excess = excess.max(mu.norm_sqr() - (1.0 - 4.0 * det / (tr * tr)));
        sup = sup.max(mu.norm());
        values.push(mu);
    }
    Ok(BeltramiField {
        chart: h.chart.clone(),
        values,
        sup,
        bound_excess: excess,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConformalOptions {
    /// Stop when successive iterates differ by less than this in sup norm.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Largest accepted sup of the isothermal residual.
    pub residual_tolerance: f64,
    /// Padding per side, as a fraction of the chart, for clamped charts.
    pub margin: f64,
}

impl Default for ConformalOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_iterations: 200,
            residual_tolerance: 1e-6,
            margin: 0.1,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ConformalStats {
    pub iterations: usize,
    /// Ratio of the last two successive corrections.
    pub contraction: f64,
    pub sup_mu: f64,
    pub residual_sup: f64,
    pub min_det: f64,
    pub min_theta: f64,
    pub sup_theta: f64,
    pub sup_grad_phi: f64,
    pub sup_h: f64,
}

/// `H = theta^2 (grad Phi1 (x) grad Phi1 + grad Phi2 (x) grad Phi2)`.
///
/// `phi` holds the full values; on a torus they are `phi_drift x` plus a
/// periodic part. `phi_grad[k][c]` is `grad Phi_c` at node `k`, exact for
/// the trigonometric interpolant the solver works with.
#[derive(Clone, Debug)]
pub struct ConformalFactorization {
    pub chart: GridChart,
    pub phi: [ScalarField; 2],
    pub phi_drift: [[f64; 2]; 2],
    pub phi_grad: Vec<[[f64; 2]; 2]>,
    pub theta: ScalarField,
    pub mu: Vec<Complex64>,
    pub residual: MetricField,
    pub stats: ConformalStats,
}

struct Spectral {
    n: [usize; 2],
    fft: Fft2,
    k: Vec<Complex64>,
}

impl Spectral {
    fn new(n: [usize; 2], h: [f64; 2]) -> Self {
        let mut k = Vec::with_capacity(n[0] * n[1]);
        for j in 0..n[1] {
            let k2 = wavenumber(j, n[1], h[1]);
            for i in 0..n[0] {
                k.push(Complex64::new(wavenumber(i, n[0], h[0]), k2));
            }
        }
        Self {
            n,
            fft: Fft2::new(n[0], n[1]),
            k,
        }
    }

    /// Beurling transform, multiplier `conj(k) / k`, zero on the mean.
    fn beurling(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut buf = f.to_vec();
        self.fft.forward(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.k) {
            *b = if k.norm_sqr() == 0.0 { ZERO } else { *b * k.conj() / k };
        }
        self.fft.inverse(&mut buf);
        buf
    }

    /// Zero-mean periodic `w` with `d w / d zbar = f - mean f`.
    fn dbar_inverse(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut buf = f.to_vec();
        self.fft.forward(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.k) {
            // d/dzbar = (d1 + i d2) / 2 -> (i k1 - k2) / 2 = i k / 2
            *b = if k.norm_sqr() == 0.0 {
                ZERO
            } else {
                *b / (Complex64::new(0.0, 0.5) * k)
            };
        }
        self.fft.inverse(&mut buf);
        buf
    }

    fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }
}

/// Solve `Phi_zbar = mu Phi_z` with `Phi = z + beta zbar + w`, `w` periodic,
/// by the fixed point `omega = mu (1 + B omega)` for `omega = Phi_zbar`.
struct BeltramiSolution {
    omega: Vec<Complex64>,
    b_omega: Vec<Complex64>,
    w: Vec<Complex64>,
    beta: Complex64,
    iterations: usize,
    contraction: f64,
}

fn fixed_point(
    sp: &Spectral,
    mu: &[Complex64],
    opts: &ConformalOptions,
) -> Result<BeltramiSolution, DecompositionError> {
    let mut omega = mu.to_vec();
    let mut prev_change = f64::INFINITY;
    let mut contraction = 0.0;
    let mut converged = mu.iter().all(|m| *m == ZERO);
    let mut iterations = 0;
    while !converged && iterations < opts.max_iterations {
        let b = sp.beurling(&omega);
        let mut change = 0.0f64;
        for ((o, m), bo) in omega.iter_mut().zip(mu).zip(&b) {
            let next = m * (1.0 + bo);
            change = change.max((next - *o).norm());
            *o = next;
        }
        iterations += 1;
        if prev_change.is_finite() && prev_change > 0.0 {
            contraction = change / prev_change;
        }
        prev_change = change;
        converged = change < opts.tolerance;
        if !converged && iterations > 5 && contraction >= 1.0 {
            break;
        }
    }
    if !converged {
        return Err(DecompositionError::Stalled {
            iterations,
            contraction,
        });
    }
    let b_omega = sp.beurling(&omega);
    let beta = omega.iter().sum::<Complex64>() / sp.len() as f64;
    let w = sp.dbar_inverse(&omega);
    Ok(BeltramiSolution {
        omega,
        b_omega,
        w,
        beta,
        iterations,
        contraction,
    })
}

fn taper(d: f64, width: f64) -> f64 {
    if d <= 0.0 {
        1.0
    } else if d >= width {
        0.0
    } else {
        0.5 * (1.0 + (PI * d / width).cos())
    }
}

pub fn solve_conformal(
    h: &MetricField,
    opts: &ConformalOptions,
) -> Result<ConformalFactorization, DecompositionError> {
    let bel = beltrami_coefficient(h)?;
    let chart = &h.chart;
    let (nx, ny) = (chart.nx(), chart.ny());
    let sp_h = chart.spacing();
    let origin = chart.origin();

    // Solve grid: the chart itself on a torus, a tapered padded box otherwise.
    let (solve_n, offset, mu) = if chart.is_periodic() {
        ([nx, ny], [0usize, 0usize], bel.values.clone())
    } else {
        let pad = |n: usize| (opts.margin * n as f64).ceil().max(4.0) as usize;
        let total = [good_size(nx + 2 * pad(nx)), good_size(ny + 2 * pad(ny))];
        let left = [(total[0] - nx) / 2, (total[1] - ny) / 2];
        let right = [total[0] - nx - left[0], total[1] - ny - left[1]];
        let mut mu = vec![ZERO; total[0] * total[1]];
        for jp in 0..total[1] {
            let (j, dy) = clamp_index(jp, left[1], ny, right[1]);
            for ip in 0..total[0] {
                let (i, dx) = clamp_index(ip, left[0], nx, right[0]);
                let t = taper(dx.0, dx.1) * taper(dy.0, dy.1);
                mu[jp * total[0] + ip] = bel.values[chart.index(i, j)] * t;
            }
        }
        (total, left, mu)
    };
    let sp = Spectral::new(solve_n, sp_h);
    let sol = fixed_point(&sp, &mu, opts)?;

    let n = chart.len();
    let mut phi1 = Vec::with_capacity(n);
    let mut phi2 = Vec::with_capacity(n);
    let mut grad = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    let mut residual = Vec::with_capacity(n);
    let mut mu_out = Vec::with_capacity(n);
    let (br, bi) = (sol.beta.re, sol.beta.im);
    let mut stats = ConformalStats {
        iterations: sol.iterations,
        contraction: sol.contraction,
        sup_mu: bel.sup,
        min_det: f64::INFINITY,
        min_theta: f64::INFINITY,
        sup_h: h.sup(),
        ..Default::default()
    };
    for k in 0..n {
        let (i, j) = chart.ij(k);
        let s = (j + offset[1]) * solve_n[0] + i + offset[0];
        let x = chart.node_coords(k);
        // padded solves use coordinates relative to the chart origin
        let x = if chart.is_periodic() { x } else { [x[0] - origin[0], x[1] - origin[1]] };
        let w = sol.w[s];
        phi1.push(x[0] + br * x[0] + bi * x[1] + w.re);
        phi2.push(x[1] + bi * x[0] - br * x[1] + w.im);
        let pz = 1.0 + sol.b_omega[s];
        let pzb = sol.omega[s];
        let d1 = pz + pzb;
        let d2 = Complex64::new(0.0, 1.0) * (pz - pzb);
        let g = [[d1.re, d2.re], [d1.im, d2.im]];
        let det = pz.norm_sqr() - pzb.norm_sqr();
        let m = &h.values[k];
        let th2 = linalg::sym_det(m).sqrt() / det;
        stats.min_det = stats.min_det.min(det);
        if !(th2 > 0.0) {
            return Err(DecompositionError::Degenerate { node: k, det });
        }
        let th = th2.sqrt();
        stats.min_theta = stats.min_theta.min(th);
        stats.sup_theta = stats.sup_theta.max(th);
        stats.sup_grad_phi = stats
            .sup_grad_phi
            .max(g.iter().flatten().map(|v| v * v).sum::<f64>().sqrt());
        let flat = linalg::sym_add(&linalg::outer2(&g[0]), &linalg::outer2(&g[1]));
        let r = linalg::sym_sub(m, &linalg::sym_scale(&flat, th2));
        stats.residual_sup = stats.residual_sup.max(linalg::sym_norm(&r));
        grad.push(g);
        theta.push(th);
        residual.push(r);
        mu_out.push(bel.values[k]);
    }
    let residual = MetricField::new(chart.clone(), residual)?;
    if !(stats.residual_sup <= opts.residual_tolerance) {
        return Err(DecompositionError::Residual {
            sup: stats.residual_sup,
            residual: Box::new(residual),
        });
    }
    Ok(ConformalFactorization {
        chart: chart.clone(),
        phi: [
            ScalarField::new(chart.clone(), phi1)?,
            ScalarField::new(chart.clone(), phi2)?,
        ],
        phi_drift: [[1.0 + br, bi], [bi, 1.0 - br]],
        phi_grad: grad,
        theta: ScalarField::new(chart.clone(), theta)?,
        mu: mu_out,
        residual,
        stats,
    })
}

/// Chart index for a padded index, with the distance outside the chart and
/// the pad width on that side.
fn clamp_index(p: usize, left: usize, n: usize, right: usize) -> (usize, (f64, f64)) {
    if p < left {
        (0, ((left - p) as f64, left as f64))
    } else if p >= left + n {
        (n - 1, ((p + 1 - left - n) as f64, right as f64))
    } else {
        (p - left, (0.0, 1.0))
    }
}

impl ConformalFactorization {
    /// `grad Phi_c` at every node.
    pub fn gradient(&self, c: usize) -> Vec<[f64; 2]> {
        self.phi_grad.iter().map(|g| g[c]).collect()
    }
}

impl Columnar for ConformalFactorization {
    fn column_names(&self) -> Vec<String> {
        [
            "phi1", "phi2", "theta", "mu_re", "mu_im", "d1phi1", "d2phi1", "d1phi2", "d2phi2",
            "r11", "r12", "r22",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    }

    fn chart_of(&self) -> &GridChart {
        &self.chart
    }

    fn to_columns(&self) -> Vec<Vec<f64>> {
        vec![
            self.phi[0].values.clone(),
            self.phi[1].values.clone(),
            self.theta.values.clone(),
            self.mu.iter().map(|m| m.re).collect(),
            self.mu.iter().map(|m| m.im).collect(),
            self.phi_grad.iter().map(|g| g[0][0]).collect(),
            self.phi_grad.iter().map(|g| g[0][1]).collect(),
            self.phi_grad.iter().map(|g| g[1][0]).collect(),
            self.phi_grad.iter().map(|g| g[1][1]).collect(),
            self.residual.values.iter().map(|r| r[0]).collect(),
            self.residual.values.iter().map(|r| r[1]).collect(),
            self.residual.values.iter().map(|r| r[2]).collect(),
        ]
    }

    fn from_columns(chart: GridChart, cols: Vec<Vec<f64>>) -> Result<Self, FieldError> {
        if cols.len() != 12 {
            return Err(FieldError::Format(format!("expected 12 columns, got {}", cols.len())));
        }
        let n = chart.len();
        let phi_grad = (0..n)
            .map(|k| [[cols[5][k], cols[6][k]], [cols[7][k], cols[8][k]]])
            .collect();
        let residual = MetricField::new(
            chart.clone(),
            (0..n).map(|k| [cols[9][k], cols[10][k], cols[11][k]]).collect(),
        )?;
        Ok(Self {
            phi: [
                ScalarField::new(chart.clone(), cols[0].clone())?,
                ScalarField::new(chart.clone(), cols[1].clone())?,
            ],
            phi_drift: [[0.0; 2]; 2],
            phi_grad,
            theta: ScalarField::new(chart.clone(), cols[2].clone())?,
            mu: (0..n).map(|k| Complex64::new(cols[3][k], cols[4][k])).collect(),
            residual,
            stats: ConformalStats::default(),
            chart,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_examples() {
        assert_eq!(beltrami_at(&[1.0, 0.0, 1.0]), ZERO);
        assert_eq!(beltrami_at(&[3.0, 0.0, 3.0]), ZERO);
        let mu = beltrami_at(&[4.0, 0.0, 1.0]);
        assert!((mu.re - 1.0 / 3.0).abs() < 1e-15 && mu.im == 0.0);
    }

    #[test]
    fn non_spd_node_is_named() {
        let c = GridChart::torus(1.0, 8).unwrap();
        let mut h = MetricField::identity(&c);
        h.values[5] = [1.0, 2.0, 1.0];
        assert!(matches!(
            beltrami_coefficient(&h),
            Err(DecompositionError::NotSpd { node: 5 })
        ));
    }

    #[test]
    fn identity_is_fixed() {
        let c = GridChart::torus(1.0, 16).unwrap();
        let f = solve_conformal(&MetricField::identity(&c), &ConformalOptions::default()).unwrap();
        assert_eq!(f.stats.iterations, 0);
        assert!(f.stats.residual_sup < 1e-14);
        for k in 0..c.len() {
            let x = c.node_coords(k);
            assert!((f.phi[0].values[k] - x[0]).abs() < 1e-14);
            assert!((f.theta.values[k] - 1.0).abs() < 1e-14);
        }
    }
}
