//! Exact Euclidean distance from grid nodes to a marked node set, by the
//! separable lower-envelope transform. Periodic axes wrap.

use crate::tensor_field::GridChart;

/// Squared distance transform of one line: `min_q (x_p - x_q)^2 + f_q` with
/// nodes at spacing `h`.
fn line_transform(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![f64::INFINITY; n];
    let finite: Vec<usize> = (0..n).filter(|&q| f[q].is_finite()).collect();
    if finite.is_empty() {
        return out;
    }
    let x = |q: usize| q as f64 * h;
    // parabola vertices and the boundaries between their regions
    let mut v: Vec<usize> = Vec::with_capacity(finite.len());
    let mut z: Vec<f64> = Vec::with_capacity(finite.len() + 1);
    for &q in &finite {
        loop {
            match v.last() {
                None => {
                    v.push(q);
                    z.clear();
                    z.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&r) => {
                    let s = ((f[q] + x(q) * x(q)) - (f[r] + x(r) * x(r))) / (2.0 * (x(q) - x(r)));
                    if s <= *z.last().unwrap() {
                        v.pop();
                        z.pop();
                        continue;
                    }
                    v.push(q);
                    z.push(s);
                    break;
                }
            }
        }
    }
    let mut k = 0;
    for (p, o) in out.iter_mut().enumerate() {
        let xp = x(p);
        while k + 1 < v.len() && z[k + 1] < xp {
            k += 1;
        }
        let d = xp - x(v[k]);
        *o = d * d + f[v[k]];
    }
    out
}

fn axis_pass(f: &[f64], h: f64, periodic: bool) -> Vec<f64> {
    if !periodic {
        return line_transform(f, h);
    }
    let n = f.len();
    let tiled: Vec<f64> = (0..3 * n).map(|i| f[i % n]).collect();
    line_transform(&tiled, h)[n..2 * n].to_vec()
}

/// Distance from every node to the nearest node with `mask` set; infinite
/// when the mask is empty.
pub fn distance_to_support(chart: &GridChart, mask: &[bool]) -> Vec<f64> {
    let (nx, ny) = (chart.nx(), chart.ny());
    let h = chart.spacing();
    let periodic = chart.is_periodic();
    let mut d2: Vec<f64> = mask
        .iter()
        .map(|&m| if m { 0.0 } else { f64::INFINITY })
        .collect();
    for j in 0..ny {
        let row = axis_pass(&d2[j * nx..(j + 1) * nx], h[0], periodic);
        d2[j * nx..(j + 1) * nx].copy_from_slice(&row);
    }
    for i in 0..nx {
        let col: Vec<f64> = (0..ny).map(|j| d2[j * nx + i]).collect();
        let col = axis_pass(&col, h[1], periodic);
        for (j, c) in col.into_iter().enumerate() {
            d2[j * nx + i] = c;
        }
    }
    d2.into_iter().map(f64::sqrt).collect()
}
