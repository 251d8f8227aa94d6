//! Cut-offs `chi_q = phi(rho / delta_{q+2}^{1/2}) psi(dist(x, Sigma) / r_{q+1})`
//! and their wider companions, built from quintic smoothsteps.

use serde::{Deserialize, Serialize};

use crate::tensor_field::{stencil, GridChart, ScalarField, StencilOrder};

/// `6 x^5 - 15 x^4 + 10 x^3` clamped to `[0, 1]`; C^2 with `|f'| <= 15/8`.
pub fn smoothstep5(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        x * x * x * (x * (6.0 * x - 15.0) + 10.0)
    }
}

/// Increases from 0 at `a` to 1 at `b`.
fn ramp(s: f64, a: f64, b: f64) -> f64 {
    smoothstep5((s - a) / (b - a))
}

/// Profile radii. `phi` rises on `[7/4, 2]` and its companion on
/// `[3/2, 7/4]`; `psi` falls on `[r_*, m]` and its companion on `[m, r~_*]`
/// with `m` the midpoint, so each companion is 1 on the other's support.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profiles {
    pub r_star: f64,
    pub r_tilde_star: f64,
}

impl Default for Profiles {
    fn default() -> Self {
        Self {
            r_star: 0.75,
            r_tilde_star: 1.0,
        }
    }
}

impl Profiles {
    pub fn validate(&self) -> Result<(), String> {
        let (a, b) = (self.r_star, self.r_tilde_star);
        if !(b > 0.0 && 0.5 * b < a && a < b) {
            return Err(format!("profile radii need r~*/2 < r* < r~*, got r* = {a}, r~* = {b}"));
        }
        Ok(())
    }

    fn mid(&self) -> f64 {
        0.5 * (self.r_star + self.r_tilde_star)
    }

    pub fn phi(&self, s: f64) -> f64 {
        ramp(s, 1.75, 2.0)
    }

    pub fn phi_tilde(&self, s: f64) -> f64 {
        ramp(s, 1.5, 1.75)
    }

    pub fn psi(&self, s: f64) -> f64 {
        1.0 - ramp(s, self.r_star, self.mid())
    }

    pub fn psi_tilde(&self, s: f64) -> f64 {
        1.0 - ramp(s, self.mid(), self.r_tilde_star)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestingReport {
    /// Nodes of `Sigma_{q+1}` with `rho > 2 delta^{1/2}` where `chi < 1`.
    pub saturation_failures: usize,
    /// Nodes with `chi > 0` and `chi~ < 1`.
    pub companion_failures: usize,
    /// Nodes with `chi~ > 0` outside the wide tube or below the `3/2` level.
    pub support_failures: usize,
}

impl NestingReport {
    pub fn holds(&self) -> bool {
        self.saturation_failures == 0 && self.companion_failures == 0 && self.support_failures == 0
    }
}

#[derive(Clone, Debug)]
pub struct Cutoffs {
    pub chi: ScalarField,
    pub chi_tilde: ScalarField,
    pub nesting: NestingReport,
    /// Sup of `|grad chi|` and `|grad chi~|`.
    pub gradient_sup: f64,
}

/// Cut-offs for one level. `delta` is `delta_{q+2}`, `radius` is `r_{q+1}`,
/// `sigma_distance` the distance to `Sigma` (infinite for the empty set).
pub fn cutoffs(
    rho: &ScalarField,
    sigma_distance: &ScalarField,
    delta: f64,
    radius: f64,
    profiles: &Profiles,
) -> Cutoffs {
    let chart = &rho.chart;
    let sd = delta.sqrt();
    let n = chart.len();
    let mut chi = Vec::with_capacity(n);
    let mut chi_tilde = Vec::with_capacity(n);
    let mut nesting = NestingReport {
        saturation_failures: 0,
        companion_failures: 0,
        support_failures: 0,
    };
    for k in 0..n {
        let s = rho.values[k] / sd;
        let t = sigma_distance.values[k] / radius;
        let c = profiles.phi(s) * profiles.psi(t);
        let ct = profiles.phi_tilde(s) * profiles.psi_tilde(t);
        if t < profiles.r_star && s > 2.0 && c != 1.0 {
            nesting.saturation_failures += 1;
        }
        if c > 0.0 && ct != 1.0 {
            nesting.companion_failures += 1;
        }
        if ct > 0.0 && !(t < profiles.r_tilde_star && s > 1.5) {
            nesting.support_failures += 1;
        }
        chi.push(c);
        chi_tilde.push(ct);
    }
    let gradient_sup = grad_sup(chart, &chi).max(grad_sup(chart, &chi_tilde));
    Cutoffs {
        chi: ScalarField {
            chart: chart.clone(),
            values: chi,
        },
        chi_tilde: ScalarField {
            chart: chart.clone(),
            values: chi_tilde,
        },
        nesting,
        gradient_sup,
    }
}

fn grad_sup(chart: &GridChart, f: &[f64]) -> f64 {
    stencil::gradient(chart, f, StencilOrder::Second)
        .iter()
        .map(|g| g[0].hypot(g[1]))
        .fold(0.0, f64::max)
}

/// Connected components (4-neighbour, wrapping on a torus) of the nodes
/// where `mask` holds, as sorted node lists.
pub fn components(chart: &GridChart, mask: &[bool]) -> Vec<Vec<usize>> {
    let (nx, ny) = (chart.nx(), chart.ny());
    let periodic = chart.is_periodic();
    let mut label = vec![usize::MAX; mask.len()];
    let mut out = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut comp = vec![start];
        label[start] = id;
        let mut head = 0;
        while head < comp.len() {
            let k = comp[head];
            head += 1;
            let (i, j) = chart.ij(k);
            let mut push = |a: isize, b: isize| {
                let (a, b) = if periodic {
                    (a.rem_euclid(nx as isize), b.rem_euclid(ny as isize))
                } else if a < 0 || b < 0 || a >= nx as isize || b >= ny as isize {
                    return;
                } else {
                    (a, b)
                };
                let m = chart.index(a as usize, b as usize);
                if mask[m] && label[m] == usize::MAX {
                    label[m] = id;
                    comp.push(m);
                }
            };
            let (i, j) = (i as isize, j as isize);
            push(i - 1, j);
            push(i + 1, j);
            push(i, j - 1);
            push(i, j + 1);
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_is_c1_at_the_ends() {
        assert_eq!(smoothstep5(0.0), 0.0);
        assert_eq!(smoothstep5(1.0), 1.0);
        assert!((smoothstep5(0.5) - 0.5).abs() < 1e-15);
        let h = 1e-6;
        assert!(smoothstep5(h) / h < 1e-10);
        assert!((1.0 - smoothstep5(1.0 - h)) / h < 1e-10);
    }

    #[test]
    fn companions_cover_supports() {
        let p = Profiles::default();
        for k in 0..=400 {
            let s = k as f64 * 0.01;
            if p.phi(s) > 0.0 {
                assert_eq!(p.phi_tilde(s), 1.0);
            }
            if p.psi(s) > 0.0 {
                assert_eq!(p.psi_tilde(s), 1.0);
            }
        }
        assert!(Profiles {
            r_star: 0.4,
            r_tilde_star: 1.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn components_wrap_on_torus() {
        let chart = GridChart::torus(1.0, 8).unwrap();
        let mask: Vec<bool> = (0..64).map(|k| {
            let (i, _) = chart.ij(k);
            i == 0 || i == 7 || i == 3
        }).collect();
        let c = components(&chart, &mask);
        assert_eq!(c.len(), 2);
        let sq = GridChart::square(1.0, 8).unwrap();
        assert_eq!(components(&sq, &mask).len(), 3);
    }
}
