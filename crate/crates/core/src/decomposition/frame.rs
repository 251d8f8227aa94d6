use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::DecompositionError;
use crate::linalg::Sym2;

/// Finite frame of unit directions `xi_i` with linear coefficient maps `L_i`
/// such that `G = sum_i L_i(G) xi_i (x) xi_i` for every symmetric `G`, and
/// `L_i(G) >= r` on the operator-norm ball `|G - G0| <= r`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PrimitiveFrame {
    n: usize,
    directions: Vec<Vec<f64>>,
    /// Integer lattice vectors when each direction is `p / |p|`, `p in Z^n`.
    lattice: Option<Vec<Vec<i64>>>,
    base_point: Vec<f64>,
    /// Row `i` maps the packed upper triangle of `G` to `L_i(G)`.
    solver: Vec<Vec<f64>>,
    base_coefficients: Vec<f64>,
    validity_radius: f64,
}

/// Number of primitive terms `n (n + 1) / 2`.
pub fn frame_size(n: usize) -> usize {
    n * (n + 1) / 2
}

fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect()
}

fn pack(g: &DMatrix<f64>) -> DVector<f64> {
    let n = g.nrows();
    DVector::from_iterator(frame_size(n), upper_pairs(n).into_iter().map(|(a, b)| g[(a, b)]))
}

pub fn sym2_matrix(m: &Sym2) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[m[0], m[1], m[1], m[2]])
}

/// Unit edge directions of a regular simplex in `R^n`; for `n = 2` the
/// equiangular triple `(1,0), (1/2, sqrt3/2), (1/2, -sqrt3/2)`.
pub fn equiangular_directions(n: usize) -> Vec<Vec<f64>> {
    if n == 2 {
        let h = 0.5 * 3f64.sqrt();
        return vec![vec![1.0, 0.0], vec![0.5, h], vec![0.5, -h]];
    }
    // e_1..e_n together with a (1,..,1) form a regular simplex
    let a = (1.0 - ((n + 1) as f64).sqrt()) / n as f64;
    let mut verts: Vec<Vec<f64>> = (0..n)
        .map(|k| (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect())
        .collect();
    verts.push(vec![a; n]);
    let mut dirs = Vec::new();
    for a in 0..=n {
        for b in a + 1..=n {
            let d: Vec<f64> = verts[a].iter().zip(&verts[b]).map(|(x, y)| x - y).collect();
            let len = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            dirs.push(d.into_iter().map(|x| x / len).collect());
        }
    }
    dirs
}

fn sqrt_spd(g: &DMatrix<f64>) -> Result<DMatrix<f64>, DecompositionError> {
    let eig = SymmetricEigen::new(g.clone());
    if eig.eigenvalues.iter().any(|&l| l.is_nan() || l <= 0.0) {
        return Err(DecompositionError::NotPositive);
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

impl PrimitiveFrame {
    /// Frame adapted to `G0`: the equiangular directions pushed forward by
    /// `G0^{1/2}` and renormalized, so every `L_i(G0)` is positive.
    pub fn build(n: usize, g0: &DMatrix<f64>, gamma: f64) -> Result<Self, DecompositionError> {
        if n < 2 || g0.nrows() != n || g0.ncols() != n {
            return Err(DecompositionError::Dimension(n));
        }
        let eig = SymmetricEigen::new(g0.clone());
        let (lo, hi) = eig
            .eigenvalues
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &l| (a.min(l), b.max(l)));
        if !(lo >= 1.0 / gamma - 1e-12 && hi <= gamma + 1e-12) {
            return Err(DecompositionError::OutsideBand { gamma, lo, hi });
        }
        let root = sqrt_spd(g0)?;
        let dirs = equiangular_directions(n)
            .into_iter()
            .map(|d| {
                let v = &root * DVector::from_vec(d);
                let len = v.norm();
                v.iter().map(|x| x / len).collect()
            })
            .collect();
        Self::from_directions(g0, dirs, None)
    }

    pub fn build2(g0: &Sym2, gamma: f64) -> Result<Self, DecompositionError> {
        Self::build(2, &sym2_matrix(g0), gamma)
    }

    /// Directions `(1,0), (1,2)/sqrt5, (-1,2)/sqrt5`: integer lattice
    /// vectors, so phases `lambda xi . x` can be made periodic on a square
    /// torus. Coefficients at the identity are `3/4, 5/8, 5/8`.
    pub fn lattice2(g0: &Sym2) -> Result<Self, DecompositionError> {
        let p: Vec<Vec<i64>> = vec![vec![1, 0], vec![1, 2], vec![-1, 2]];
        let dirs = p
            .iter()
            .map(|v| {
                let len = ((v[0] * v[0] + v[1] * v[1]) as f64).sqrt();
                vec![v[0] as f64 / len, v[1] as f64 / len]
            })
            .collect();
        Self::from_directions(&sym2_matrix(g0), dirs, Some(p))
    }

    pub fn from_directions(
        g0: &DMatrix<f64>,
        directions: Vec<Vec<f64>>,
        lattice: Option<Vec<Vec<i64>>>,
    ) -> Result<Self, DecompositionError> {
        let n = g0.nrows();
        let ns = frame_size(n);
        if directions.len() != ns || directions.iter().any(|d| d.len() != n) {
            return Err(DecompositionError::Dimension(n));
        }
        let pairs = upper_pairs(n);
        let mut m = DMatrix::zeros(ns, ns);
        for (i, d) in directions.iter().enumerate() {
            for (r, &(a, b)) in pairs.iter().enumerate() {
                m[(r, i)] = d[a] * d[b];
            }
        }
        let inv = m
            .clone()
            .try_inverse()
            .ok_or(DecompositionError::SingularFrame)?;
        // reject near-degenerate frames as singular
        if (&inv * &m - DMatrix::identity(ns, ns)).amax() > 1e-10 {
            return Err(DecompositionError::SingularFrame);
        }
        let solver: Vec<Vec<f64>> = (0..ns).map(|i| inv.row(i).iter().copied().collect()).collect();
        let mut frame = Self {
            n,
            directions,
            lattice,
            base_point: g0.iter().copied().collect(),
            solver,
            base_coefficients: Vec::new(),
            validity_radius: 0.0,
        };
        frame.base_coefficients = frame.coefficients(g0);
        // L_i(G) >= L_i(G0) - |Lambda_i|_trace |G - G0|_op, where
        // L_i(X) = tr(Lambda_i X).
        let r = (0..ns)
            .map(|i| frame.base_coefficients[i] / (1.0 + frame.functional_trace_norm(i)))
            .fold(f64::INFINITY, f64::min);
        if !(r > 0.0) {
            return Err(DecompositionError::NoPositivity(r));
        }
        frame.validity_radius = r;
        Ok(frame)
    }

    /// Trace norm of the matrix representing `L_i` under `tr(Lambda X)`.
    pub fn functional_trace_norm(&self, i: usize) -> f64 {
        let n = self.n;
        let mut lam = DMatrix::zeros(n, n);
        for (r, (a, b)) in upper_pairs(n).into_iter().enumerate() {
            let c = self.solver[i][r];
            if a == b {
                lam[(a, a)] = c;
            } else {
                lam[(a, b)] = 0.5 * c;
                lam[(b, a)] = 0.5 * c;
            }
        }
        SymmetricEigen::new(lam).eigenvalues.iter().map(|l| l.abs()).sum()
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn lattice(&self) -> Option<&[Vec<i64>]> {
        self.lattice.as_deref()
    }

    pub fn base_point(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.n, self.n, &self.base_point)
    }

    pub fn base_coefficients(&self) -> &[f64] {
        &self.base_coefficients
    }

    pub fn validity_radius(&self) -> f64 {
        self.validity_radius
    }

    pub fn coefficients(&self, g: &DMatrix<f64>) -> Vec<f64> {
        let v = pack(g);
        self.solver
            .iter()
            .map(|row| row.iter().zip(v.iter()).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `L_i` for a packed 2x2 matrix, without allocating matrices.
    pub fn coefficients2(&self, g: &Sym2) -> [f64; 3] {
        debug_assert_eq!(self.n, 2);
        let mut out = [0.0; 3];
        for (o, row) in out.iter_mut().zip(&self.solver) {
            *o = row[0] * g[0] + row[1] * g[1] + row[2] * g[2];
        }
        out
    }

    pub fn reconstruct(&self, coeffs: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        let mut g = DMatrix::zeros(n, n);
        for (c, d) in coeffs.iter().zip(&self.directions) {
            let v = DVector::from_column_slice(d);
            g += *c * &v * v.transpose();
        }
        g
    }

    /// Smallest `min_i L_i(G) - r` over `samples` random `G` on the sphere
    /// `|G - G0|_op = r`. Nonnegative for a certified radius.
    pub fn shell_margin<R: Rng>(&self, samples: usize, rng: &mut R) -> f64 {
        let n = self.n;
        let g0 = self.base_point();
        let mut worst = f64::INFINITY;
        for _ in 0..samples {
            let mut x = DMatrix::<f64>::zeros(n, n);
            for a in 0..n {
                for b in a..n {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    x[(a, b)] = v;
                    x[(b, a)] = v;
                }
            }
            let norm = SymmetricEigen::new(x.clone())
                .eigenvalues
                .iter()
                .fold(0.0f64, |m, l| m.max(l.abs()));
            if norm == 0.0 {
                continue;
            }
            let g = &g0 + x * (self.validity_radius / norm);
            let lo = self.coefficients(&g).into_iter().fold(f64::INFINITY, f64::min);
            worst = worst.min(lo - self.validity_radius);
        }
        worst
    }
}
