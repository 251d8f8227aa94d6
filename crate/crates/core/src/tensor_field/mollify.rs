//! Convolution with the compactly supported bump `(1 - (r/l)^2)^2`.
//!
//! Periodic charts use circular convolution. Clamped charts are zero padded
//! and divided by the convolution of the indicator, so the kernel is
//! renormalized near the edges and constants stay constant.

use num_complex::Complex64;

use super::fft::{good_size, Fft2};
use super::field::{ImmersionField, MetricField, ScalarField};
use super::{FieldError, GridChart};

/// Minimum kernel radius in units of the largest grid spacing.
pub const MIN_RADIUS_CELLS: f64 = 2.0;

pub fn kernel_profile(r_over_ell: f64) -> f64 {
    if r_over_ell >= 1.0 {
        0.0
    } else {
        let t = 1.0 - r_over_ell * r_over_ell;
        t * t
    }
}

pub struct Mollifier {
    chart: GridChart,
    ell: f64,
    fft: Fft2,
    padded: [usize; 2],
    kernel_hat: Vec<f64>,
    reach_hat: Vec<f64>,
    norm: Option<Vec<f64>>,
}

impl Mollifier {
    pub fn new(chart: &GridChart, ell: f64) -> Result<Self, FieldError> {
        let h = chart.spacing();
        if ell.is_nan() || ell < MIN_RADIUS_CELLS * chart.max_spacing() {
            return Err(FieldError::UnderResolvedKernel {
                ell,
                min: MIN_RADIUS_CELLS * chart.max_spacing(),
            });
        }
        let reach = [(ell / h[0]).ceil() as usize, (ell / h[1]).ceil() as usize];
        let padded = if chart.is_periodic() {
            if 2 * reach[0] >= chart.nx() || 2 * reach[1] >= chart.ny() {
                return Err(FieldError::KernelTooWide { ell });
            }
            [chart.nx(), chart.ny()]
        } else {
            [
                good_size(chart.nx() + reach[0] + 1),
                good_size(chart.ny() + reach[1] + 1),
            ]
        };
        let (px, py) = (padded[0], padded[1]);
        let fft = Fft2::new(px, py);

        let mut kernel = vec![Complex64::new(0.0, 0.0); px * py];
        let mut reach_k = vec![Complex64::new(0.0, 0.0); px * py];
        let mut mass = 0.0;
        for dj in -(reach[1] as isize)..=reach[1] as isize {
            for di in -(reach[0] as isize)..=reach[0] as isize {
                let r = ((di as f64 * h[0]).powi(2) + (dj as f64 * h[1]).powi(2)).sqrt();
                let w = kernel_profile(r / ell);
                if w > 0.0 {
                    let i = di.rem_euclid(px as isize) as usize;
                    let j = dj.rem_euclid(py as isize) as usize;
                    kernel[j * px + i].re += w;
                    reach_k[j * px + i].re = 1.0;
                    mass += w;
                }
            }
        }
        kernel.iter_mut().for_each(|z| z.re /= mass);
        fft.forward(&mut kernel);
        fft.forward(&mut reach_k);
        let kernel_hat = kernel.iter().map(|z| z.re).collect();
        let reach_hat = reach_k.iter().map(|z| z.re).collect();

        let mut m = Self {
            chart: chart.clone(),
            ell,
            fft,
            padded,
            kernel_hat,
            reach_hat,
            norm: None,
        };
        if !chart.is_periodic() {
            let ones = vec![1.0; chart.len()];
            let (n, _) = m.convolve_pair(&ones, None, false);
            m.norm = Some(n);
        }
        Ok(m)
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    fn convolve_pair(&self, a: &[f64], b: Option<&[f64]>, reach: bool) -> (Vec<f64>, Vec<f64>) {
        let (nx, ny) = (self.chart.nx(), self.chart.ny());
        let px = self.padded[0];
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft.len()];
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                buf[j * px + i] = Complex64::new(a[k], b.map_or(0.0, |b| b[k]));
            }
        }
        self.fft.forward(&mut buf);
        let hat = if reach { &self.reach_hat } else { &self.kernel_hat };
        buf.iter_mut().zip(hat).for_each(|(z, w)| *z *= *w);
        self.fft.inverse(&mut buf);
        let mut ra = vec![0.0; nx * ny];
        let mut rb = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let z = buf[j * px + i];
                ra[j * nx + i] = z.re;
                rb[j * nx + i] = z.im;
            }
        }
        (ra, rb)
    }

    /// Zero outside the kernel-dilated support of each input that has zeros,
    /// so compactly supported fields keep exact zeros.
    fn support_masks(&self, comps: &[&[f64]]) -> Vec<Option<Vec<bool>>> {
        let needs: Vec<usize> = comps
            .iter()
            .enumerate()
            .filter(|(_, c)| c.iter().any(|&v| v == 0.0) && c.iter().any(|&v| v != 0.0))
            .map(|(k, _)| k)
            .collect();
        let mut masks = vec![None; comps.len()];
        let ind = |c: &[f64]| -> Vec<f64> {
            c.iter().map(|&v| if v != 0.0 { 1.0 } else { 0.0 }).collect()
        };
        for pair in needs.chunks(2) {
            let a = ind(comps[pair[0]]);
            let b = pair.get(1).map(|&k| ind(comps[k]));
            let (ra, rb) = self.convolve_pair(&a, b.as_deref(), true);
            masks[pair[0]] = Some(ra.iter().map(|&v| v > 0.5).collect());
            if let Some(&k) = pair.get(1) {
                masks[k] = Some(rb.iter().map(|&v| v > 0.5).collect());
            }
        }
        masks
    }

    pub fn apply_many(&self, comps: &[&[f64]]) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(comps.len());
        let live: Vec<usize> = (0..comps.len())
            .filter(|&k| comps[k].iter().any(|&v| v != 0.0))
            .collect();
        let mut results: Vec<Option<Vec<f64>>> = vec![None; comps.len()];
        for pair in live.chunks(2) {
            let (ra, rb) = self.convolve_pair(comps[pair[0]], pair.get(1).map(|&k| comps[k]), false);
            results[pair[0]] = Some(ra);
            if let Some(&k) = pair.get(1) {
                results[k] = Some(rb);
            }
        }
        let masks = self.support_masks(comps);
        for (k, r) in results.into_iter().enumerate() {
            let mut v = r.unwrap_or_else(|| vec![0.0; self.chart.len()]);
            if let Some(norm) = &self.norm {
                v.iter_mut().zip(norm).for_each(|(x, n)| *x /= n);
            }
            if let Some(mask) = &masks[k] {
                v.iter_mut().zip(mask).for_each(|(x, &m)| {
                    if !m {
                        *x = 0.0
                    }
                });
            }
            out.push(v);
        }
        out
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.apply_many(&[f]).pop().unwrap_or_default()
    }
}

/// Componentwise mollification at length `ell`.
pub trait Mollify: Sized {
    fn mollify_with(&self, m: &Mollifier) -> Result<Self, FieldError>;

    fn mollify(&self, ell: f64) -> Result<Self, FieldError>;
}

impl Mollify for ScalarField {
    fn mollify_with(&self, m: &Mollifier) -> Result<Self, FieldError> {
        self.chart.check_same(m.chart())?;
        Ok(ScalarField {
            chart: self.chart.clone(),
            values: m.apply(&self.values),
        })
    }

    fn mollify(&self, ell: f64) -> Result<Self, FieldError> {
        self.mollify_with(&Mollifier::new(&self.chart, ell)?)
    }
}

impl Mollify for MetricField {
    fn mollify_with(&self, m: &Mollifier) -> Result<Self, FieldError> {
        self.chart.check_same(m.chart())?;
        let comps: Vec<Vec<f64>> = (0..3)
            .map(|c| self.values.iter().map(|v| v[c]).collect())
            .collect();
        let refs: Vec<&[f64]> = comps.iter().map(|c| c.as_slice()).collect();
        let r = m.apply_many(&refs);
        Ok(MetricField {
            chart: self.chart.clone(),
            values: (0..self.chart.len())
                .map(|k| [r[0][k], r[1][k], r[2][k]])
                .collect(),
            spd_bound: None,
        })
    }

    fn mollify(&self, ell: f64) -> Result<Self, FieldError> {
        self.mollify_with(&Mollifier::new(&self.chart, ell)?)
    }
}

impl Mollify for ImmersionField {
    fn mollify_with(&self, m: &Mollifier) -> Result<Self, FieldError> {
        self.chart.check_same(m.chart())?;
        let n = self.chart.len();
        let linear: Vec<[f64; 3]> = (0..n).map(|k| self.linear_at(k)).collect();
        let comps: Vec<Vec<f64>> = (0..3)
            .map(|c| (0..n).map(|k| self.values[k][c] - linear[k][c]).collect())
            .collect();
        let refs: Vec<&[f64]> = comps.iter().map(|c| c.as_slice()).collect();
        let r = m.apply_many(&refs);
        let values = (0..n)
            .map(|k| {
                [
                    r[0][k] + linear[k][0],
                    r[1][k] + linear[k][1],
                    r[2][k] + linear[k][2],
                ]
            })
            .collect();
        let jacobian = self.jacobian.as_ref().map(|jac| {
            let comps: Vec<Vec<f64>> = (0..6)
                .map(|c| jac.iter().map(|j| j[c / 2][c % 2]).collect())
                .collect();
            let refs: Vec<&[f64]> = comps.iter().map(|c| c.as_slice()).collect();
            let r = m.apply_many(&refs);
            (0..n)
                .map(|k| {
                    [
                        [r[0][k], r[1][k]],
                        [r[2][k], r[3][k]],
                        [r[4][k], r[5][k]],
                    ]
                })
                .collect()
        });
        Ok(ImmersionField {
            chart: self.chart.clone(),
            values,
            drift: self.drift,
            order: self.order,
            jacobian,
        })
    }

    fn mollify(&self, ell: f64) -> Result<Self, FieldError> {
        self.mollify_with(&Mollifier::new(&self.chart, ell)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_survive_clamped_and_periodic() {
        for chart in [GridChart::square(1.0, 40).unwrap(), GridChart::torus(1.0, 40).unwrap()] {
            let f = ScalarField::constant(&chart, 2.5);
            let g = f.mollify(0.1).unwrap();
            assert!(g.values.iter().all(|v| (v - 2.5).abs() < 1e-12));
        }
    }

    #[test]
    fn rejects_small_radius() {
        let chart = GridChart::square(1.0, 11).unwrap();
        assert!(matches!(
            ScalarField::constant(&chart, 1.0).mollify(0.15),
            Err(FieldError::UnderResolvedKernel { .. })
        ));
    }

    #[test]
    fn compact_support_stays_exact() {
        let chart = GridChart::square(1.0, 64).unwrap();
        let f = ScalarField::from_fn(&chart, |x| if (x[0] - 0.5).abs() < 0.1 { 1.0 } else { 0.0 });
        let ell = 0.05;
        let g = f.mollify(ell).unwrap();
        for (k, v) in g.values.iter().enumerate() {
            let x = chart.node_coords(k)[0];
            if (x - 0.5).abs() > 0.1 + ell + 1e-9 {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn linear_immersion_on_torus_is_preserved() {
        let chart = GridChart::torus(1.0, 32).unwrap();
        let u = ImmersionField::flat(&chart, 0.9);
        let v = u.mollify(0.1).unwrap();
        assert!(u.sup_distance(&v) < 1e-12);
    }
}
