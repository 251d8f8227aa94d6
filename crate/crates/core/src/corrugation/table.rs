use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::bessel::{j0_inverse, j1};
use super::CorrugationError;

pub const DEFAULT_S_MAX: f64 = 1.0;
pub const DEFAULT_S_SAMPLES: usize = 256;
pub const DEFAULT_T_SAMPLES: usize = 1024;
const MIN_SAMPLES: usize = 64;
/// Extra rows beyond each end of `[0, s_max]` for the 4-point stencil.
const GHOST: usize = 2;
const N_FIELDS: usize = 10;

/// Quantities stored per table node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    Gamma1,
    Gamma2,
    DtGamma1,
    DtGamma2,
    DsGamma1,
    DsGamma2,
    DttGamma1,
    DttGamma2,
    DstGamma1,
    DstGamma2,
}

impl Quantity {
    pub const ALL: [Quantity; N_FIELDS] = [
        Quantity::Gamma1,
        Quantity::Gamma2,
        Quantity::DtGamma1,
        Quantity::DtGamma2,
        Quantity::DsGamma1,
        Quantity::DsGamma2,
        Quantity::DttGamma1,
        Quantity::DttGamma2,
        Quantity::DstGamma1,
        Quantity::DstGamma2,
    ];

    fn slot(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Gamma1 => "gamma1",
            Quantity::Gamma2 => "gamma2",
            Quantity::DtGamma1 => "dt_gamma1",
            Quantity::DtGamma2 => "dt_gamma2",
            Quantity::DsGamma1 => "ds_gamma1",
            Quantity::DsGamma2 => "ds_gamma2",
            Quantity::DttGamma1 => "dtt_gamma1",
            Quantity::DttGamma2 => "dtt_gamma2",
            Quantity::DstGamma1 => "dst_gamma1",
            Quantity::DstGamma2 => "dst_gamma2",
        }
    }
}

/// All quantities at one `(s, t)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CorrugationSample {
    pub gamma: [f64; 2],
    pub dt: [f64; 2],
    pub ds: [f64; 2],
    pub dtt: [f64; 2],
    pub dst: [f64; 2],
}

/// Empirical constants measured on the table rows with `s > 0`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrugationConstants {
    /// `sup_t |dt Gamma1| / s^2`.
    pub dt_gamma1_over_s2: f64,
    /// `sup_t |dt Gamma2| / s`.
    pub dt_gamma2_over_s: f64,
    /// `sup_t |ds dt Gamma1| / s`.
    pub dst_gamma1_over_s: f64,
    /// Largest `|Gamma_i(s, 2 pi) - Gamma_i(s, 0)|` of the raw quadrature,
    /// removed afterwards by a linear correction.
    pub raw_closure: f64,
    /// Largest identity residual at the nodes.
    pub node_identity_residual: f64,
}

/// Amplitude `alpha(s)`, odd in `s`, with `J0(alpha) = (1 + s^2)^{-1/2}`.
pub fn amplitude(s: f64) -> Result<f64, CorrugationError> {
    let a = j0_inverse(1.0 / (1.0 + s * s).sqrt()).ok_or(CorrugationError::NoBracket(s))?;
    Ok(a.copysign(s))
}

/// `d alpha / ds = s (1 + s^2)^{-3/2} / J1(alpha)`, with limit `sqrt 2` at 0.
pub fn amplitude_slope(s: f64, alpha: f64) -> f64 {
    if s.abs() < 1e-6 {
        // alpha ~ sqrt2 s (1 - 3 s^2 / 8)
        return std::f64::consts::SQRT_2 * (1.0 - 9.0 * s * s / 8.0);
    }
    s * (1.0 + s * s).powf(-1.5) / j1(alpha)
}

/// Integrands in `t` at fixed `s`: `[dt G1, dt G2, dtt G1, dtt G2, dst G1, dst G2]`.
fn integrands(s: f64, alpha: f64, alpha_s: f64, t: f64) -> [f64; 6] {
    let c = (1.0 + s * s).sqrt();
    let c_s = s / c;
    let (st, ct) = t.sin_cos();
    let (sa, ca) = (alpha * ct).sin_cos();
    [
        c * ca - 1.0,
        c * sa,
        c * alpha * st * sa,
        -c * alpha * st * ca,
        c_s * ca - c * sa * alpha_s * ct,
        c_s * sa + c * ca * alpha_s * ct,
    ]
}

/// Precomputed corrugation pair `Gamma = (Gamma1, Gamma2)` on an `(s, t)`
/// grid, `t` periodic with period `2 pi`.
///
/// `Gamma1(s, t) = int_0^t [sqrt(1+s^2) cos(alpha cos tau) - 1]`,
/// `Gamma2(s, t) = int_0^t sqrt(1+s^2) sin(alpha cos tau)`, so that
/// `(1 + dt Gamma1)^2 + (dt Gamma2)^2 = 1 + s^2`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrugationTable {
    s_max: f64,
    s_samples: usize,
    t_samples: usize,
    ds: f64,
    dt: f64,
    /// `[(row + GHOST) * t_samples + m] * N_FIELDS + slot`
    values: Vec<f64>,
    /// `alpha` and `alpha'` per row, ghost rows included.
    amplitude_rows: Vec<[f64; 2]>,
    amplitude_profile: Vec<f64>,
    constants: CorrugationConstants,
}

impl CorrugationTable {
    pub fn build(s_max: f64, s_samples: usize, t_samples: usize) -> Result<Self, CorrugationError> {
        if !(s_max > 0.0 && s_max <= 1.0) {
            return Err(CorrugationError::SMax(s_max));
        }
        if s_samples < MIN_SAMPLES || t_samples < MIN_SAMPLES {
            return Err(CorrugationError::Samples(s_samples.min(t_samples)));
        }
        let ds = s_max / s_samples as f64;
        let dt = TAU / t_samples as f64;
        let rows = s_samples + 1 + 2 * GHOST;
        let mut values = vec![0.0; rows * t_samples * N_FIELDS];
        let mut amplitude_profile = Vec::with_capacity(s_samples + 1);
        let mut amplitude_rows = Vec::with_capacity(rows);
        let mut constants = CorrugationConstants::default();

        for r in 0..rows {
            let s = (r as f64 - GHOST as f64) * ds;
            let alpha = amplitude(s)?;
            let alpha_s = amplitude_slope(s, alpha);
            amplitude_rows.push([alpha, alpha_s]);
            if r >= GHOST && r <= GHOST + s_samples {
                amplitude_profile.push(alpha);
            }
            let base = r * t_samples * N_FIELDS;
            let row = &mut values[base..base + t_samples * N_FIELDS];
            let mut acc = [0.0f64; 4]; // Gamma1, Gamma2, ds Gamma1, ds Gamma2
            let mut prev = integrands(s, alpha, alpha_s, 0.0);
            for m in 0..t_samples {
                let t = m as f64 * dt;
                let f = if m == 0 { prev } else { integrands(s, alpha, alpha_s, t) };
                let node = &mut row[m * N_FIELDS..(m + 1) * N_FIELDS];
                node[Quantity::Gamma1.slot()] = acc[0];
                node[Quantity::Gamma2.slot()] = acc[1];
                node[Quantity::DsGamma1.slot()] = acc[2];
                node[Quantity::DsGamma2.slot()] = acc[3];
                node[Quantity::DtGamma1.slot()] = f[0];
                node[Quantity::DtGamma2.slot()] = f[1];
                node[Quantity::DttGamma1.slot()] = f[2];
                node[Quantity::DttGamma2.slot()] = f[3];
                node[Quantity::DstGamma1.slot()] = f[4];
                node[Quantity::DstGamma2.slot()] = f[5];
                // Simpson on [t, t + dt] with the midpoint
                let mid = integrands(s, alpha, alpha_s, t + 0.5 * dt);
                let next = integrands(s, alpha, alpha_s, t + dt);
                for (a, idx) in acc.iter_mut().zip([0usize, 1, 4, 5]) {
                    *a += dt / 6.0 * (f[idx] + 4.0 * mid[idx] + next[idx]);
                }
                prev = next;
            }
            let _ = prev;
            // acc now holds the integrals over a full period; they vanish
            // analytically, so remove the quadrature drift linearly in t.
            let closure = acc;
            if r >= GHOST && r <= GHOST + s_samples {
                constants.raw_closure = closure
                    .iter()
                    .fold(constants.raw_closure, |m, c| m.max(c.abs()));
            }
            for m in 0..t_samples {
                let frac = m as f64 / t_samples as f64;
                let node = &mut row[m * N_FIELDS..(m + 1) * N_FIELDS];
                node[Quantity::Gamma1.slot()] -= closure[0] * frac;
                node[Quantity::Gamma2.slot()] -= closure[1] * frac;
                node[Quantity::DsGamma1.slot()] -= closure[2] * frac;
                node[Quantity::DsGamma2.slot()] -= closure[3] * frac;
            }
            if r > GHOST && r <= GHOST + s_samples {
                for m in 0..t_samples {
                    let node = &row[m * N_FIELDS..(m + 1) * N_FIELDS];
                    let d1 = node[Quantity::DtGamma1.slot()];
                    let d2 = node[Quantity::DtGamma2.slot()];
                    let c = &mut constants;
                    c.dt_gamma1_over_s2 = c.dt_gamma1_over_s2.max(d1.abs() / (s * s));
                    c.dt_gamma2_over_s = c.dt_gamma2_over_s.max(d2.abs() / s);
                    c.dst_gamma1_over_s = c
                        .dst_gamma1_over_s
                        .max(node[Quantity::DstGamma1.slot()].abs() / s);
                    let res = ((1.0 + d1).powi(2) + d2 * d2 - (1.0 + s * s)).abs();
                    c.node_identity_residual = c.node_identity_residual.max(res);
                }
            }
        }

        Ok(Self {
            s_max,
            s_samples,
            t_samples,
            ds,
            dt,
            values,
            amplitude_rows,
            amplitude_profile,
            constants,
        })
    }

    pub fn with_defaults() -> Result<Self, CorrugationError> {
        Self::build(DEFAULT_S_MAX, DEFAULT_S_SAMPLES, DEFAULT_T_SAMPLES)
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn s_samples(&self) -> usize {
        self.s_samples
    }

    pub fn t_samples(&self) -> usize {
        self.t_samples
    }

    pub fn amplitude_profile(&self) -> &[f64] {
        &self.amplitude_profile
    }

    pub fn constants(&self) -> &CorrugationConstants {
        &self.constants
    }

    /// Stored value at table node `(k, m)`, `0 <= k <= s_samples`.
    pub fn node(&self, k: usize, m: usize, q: Quantity) -> f64 {
        let r = k + GHOST;
        self.values[(r * self.t_samples + m % self.t_samples) * N_FIELDS + q.slot()]
    }

    pub fn node_s(&self, k: usize) -> f64 {
        k as f64 * self.ds
    }

    pub fn node_t(&self, m: usize) -> f64 {
        m as f64 * self.dt
    }

    fn check_s(&self, s: f64) -> Result<(), CorrugationError> {
        if !(0.0..=self.s_max).contains(&s) {
            return Err(CorrugationError::OutOfDomain { s, s_max: self.s_max });
        }
        Ok(())
    }

    /// `Gamma` and `ds Gamma` by bicubic (4x4 Lagrange) interpolation of
    /// the table. The `t`-derivatives are closed-form in `alpha(s)` and
    /// `alpha'(s)`, which are interpolated in `s`; this keeps the isometry
    /// identity exact up to rounding at every `(s, t)`.
    pub fn eval_all(&self, s: f64, t: f64) -> Result<CorrugationSample, CorrugationError> {
        self.check_s(s)?;
        let (rows, ws) = self.s_stencil(s);
        let (cols, wt) = self.t_stencil(t);
        let slots = [
            Quantity::Gamma1.slot(),
            Quantity::Gamma2.slot(),
            Quantity::DsGamma1.slot(),
            Quantity::DsGamma2.slot(),
        ];
        let mut acc = [0.0; 4];
        let mut amp = [0.0; 2];
        for (a, &r) in rows.iter().enumerate() {
            if ws[a] == 0.0 {
                continue;
            }
            amp[0] += ws[a] * self.amplitude_rows[r][0];
            amp[1] += ws[a] * self.amplitude_rows[r][1];
            for (b, &m) in cols.iter().enumerate() {
                let w = ws[a] * wt[b];
                let base = (r * self.t_samples + m) * N_FIELDS;
                for (q, &slot) in acc.iter_mut().zip(&slots) {
                    *q += w * self.values[base + slot];
                }
            }
        }
        let f = integrands(s, amp[0], amp[1], t);
        Ok(CorrugationSample {
            gamma: [acc[0], acc[1]],
            dt: [f[0], f[1]],
            ds: [acc[2], acc[3]],
            dtt: [f[2], f[3]],
            dst: [f[4], f[5]],
        })
    }

    pub fn eval(&self, s: f64, t: f64, q: Quantity) -> Result<f64, CorrugationError> {
        let all = self.eval_all(s, t)?;
        Ok(match q {
            Quantity::Gamma1 => all.gamma[0],
            Quantity::Gamma2 => all.gamma[1],
            Quantity::DtGamma1 => all.dt[0],
            Quantity::DtGamma2 => all.dt[1],
            Quantity::DsGamma1 => all.ds[0],
            Quantity::DsGamma2 => all.ds[1],
            Quantity::DttGamma1 => all.dtt[0],
            Quantity::DttGamma2 => all.dtt[1],
            Quantity::DstGamma1 => all.dst[0],
            Quantity::DstGamma2 => all.dst[1],
        })
    }

    fn s_stencil(&self, s: f64) -> ([usize; 4], [f64; 4]) {
        let p = s / self.ds;
        let k = (p.floor() as usize).min(self.s_samples);
        let f = p - k as f64;
        let r = k + GHOST;
        ([r - 1, r, r + 1, r + 2], lagrange_weights(f))
    }

    fn t_stencil(&self, t: f64) -> ([usize; 4], [f64; 4]) {
        let n = self.t_samples;
        let tw = t.rem_euclid(TAU);
        let q = tw / self.dt;
        let m = q.floor();
        let f = q - m;
        let m = (m as usize) % n;
        ([(m + n - 1) % n, m, (m + 1) % n, (m + 2) % n], lagrange_weights(f))
    }
}

/// Cubic Lagrange weights for nodes `-1, 0, 1, 2` at offset `f` in `[0, 1)`.
fn lagrange_weights(f: f64) -> [f64; 4] {
    [
        -f * (f - 1.0) * (f - 2.0) / 6.0,
        (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
        -(f + 1.0) * f * (f - 2.0) / 2.0,
        (f + 1.0) * f * (f - 1.0) / 6.0,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_partition_unity_and_are_exact_at_nodes() {
        for f in [0.0, 0.3, 0.77] {
            let w = lagrange_weights(f);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
        assert_eq!(lagrange_weights(0.0), [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_row_is_zero() {
        let t = CorrugationTable::build(1.0, 64, 64).unwrap();
        let z = t.eval_all(0.0, 1.234).unwrap();
        assert_eq!(z.gamma, [0.0, 0.0]);
        assert_eq!(z.dt, [0.0, 0.0]);
        for m in 0..64 {
            assert_eq!(t.node(0, m, Quantity::Gamma2), 0.0);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CorrugationTable::build(1.5, 64, 64).is_err());
        assert!(CorrugationTable::build(0.5, 32, 64).is_err());
        let t = CorrugationTable::build(0.5, 64, 64).unwrap();
        assert!(matches!(t.eval(0.6, 0.0, Quantity::Gamma1), Err(CorrugationError::OutOfDomain { .. })));
    }
}
