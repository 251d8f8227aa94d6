//! Finite-difference stencils on grid lines.
//!
//! Interior: centered, order 2 or 4. Clamped edges: one-sided second order,
//! with the order-2 centered stencil on the second node.

use serde::{Deserialize, Serialize};

use super::GridChart;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum StencilOrder {
    Second,
    #[default]
    Fourth,
}

impl StencilOrder {
    pub fn from_order(order: u32) -> Option<Self> {
        match order {
            2 => Some(Self::Second),
            4 => Some(Self::Fourth),
            _ => None,
        }
    }
}

#[inline]
fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

fn d1_line(f: &[f64], out: &mut [f64], h: f64, periodic: bool, order: StencilOrder) {
    let n = f.len();
    if periodic {
        for i in 0..n {
            let at = |o: isize| f[wrap(i as isize + o, n)];
            out[i] = match order {
                StencilOrder::Second => (at(1) - at(-1)) / (2.0 * h),
                StencilOrder::Fourth => {
                    (at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)) / (12.0 * h)
                }
            };
        }
        return;
    }
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    for i in 1..n - 1 {
        let near_edge = i < 2 || i + 2 >= n;
        out[i] = if order == StencilOrder::Second || near_edge {
            (f[i + 1] - f[i - 1]) / (2.0 * h)
        } else {
            (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h)
        };
    }
}

fn d2_line(f: &[f64], out: &mut [f64], h: f64, periodic: bool, order: StencilOrder) {
    let n = f.len();
    let h2 = h * h;
    if periodic {
        for i in 0..n {
            let at = |o: isize| f[wrap(i as isize + o, n)];
            out[i] = match order {
                StencilOrder::Second => (at(-1) - 2.0 * at(0) + at(1)) / h2,
                StencilOrder::Fourth => {
                    (-at(-2) + 16.0 * at(-1) - 30.0 * at(0) + 16.0 * at(1) - at(2)) / (12.0 * h2)
                }
            };
        }
        return;
    }
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
    out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
    for i in 1..n - 1 {
        let near_edge = i < 2 || i + 2 >= n;
        out[i] = if order == StencilOrder::Second || near_edge {
            (f[i - 1] - 2.0 * f[i] + f[i + 1]) / h2
        } else {
            (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) / (12.0 * h2)
        };
    }
}

fn apply_axis(
    chart: &GridChart,
    f: &[f64],
    axis: usize,
    order: StencilOrder,
    line_op: fn(&[f64], &mut [f64], f64, bool, StencilOrder),
) -> Vec<f64> {
    let (nx, ny) = (chart.nx(), chart.ny());
    let h = chart.spacing()[axis];
    let periodic = chart.is_periodic();
    let mut out = vec![0.0; f.len()];
    if axis == 0 {
        for j in 0..ny {
            let r = j * nx..(j + 1) * nx;
            line_op(&f[r.clone()], &mut out[r], h, periodic, order);
        }
    } else {
        let mut line = vec![0.0; ny];
        let mut res = vec![0.0; ny];
        for i in 0..nx {
            for j in 0..ny {
                line[j] = f[j * nx + i];
            }
            line_op(&line, &mut res, h, periodic, order);
            for j in 0..ny {
                out[j * nx + i] = res[j];
            }
        }
    }
    out
}

/// First derivative along `axis` (0 or 1).
pub fn derivative(chart: &GridChart, f: &[f64], axis: usize, order: StencilOrder) -> Vec<f64> {
    apply_axis(chart, f, axis, order, d1_line)
}

/// Pure second derivative along `axis`.
pub fn second_derivative(
    chart: &GridChart,
    f: &[f64],
    axis: usize,
    order: StencilOrder,
) -> Vec<f64> {
    apply_axis(chart, f, axis, order, d2_line)
}

pub fn gradient(chart: &GridChart, f: &[f64], order: StencilOrder) -> Vec<[f64; 2]> {
    let d0 = derivative(chart, f, 0, order);
    let d1 = derivative(chart, f, 1, order);
    d0.into_iter().zip(d1).map(|(a, b)| [a, b]).collect()
}

/// Hessian as `[f_11, f_12, f_22]`; the mixed term applies both first
/// derivatives in turn.
pub fn hessian(chart: &GridChart, f: &[f64], order: StencilOrder) -> Vec<[f64; 3]> {
    let f11 = second_derivative(chart, f, 0, order);
    let f22 = second_derivative(chart, f, 1, order);
    let f12 = derivative(chart, &derivative(chart, f, 0, order), 1, order);
    (0..f.len()).map(|k| [f11[k], f12[k], f22[k]]).collect()
}
