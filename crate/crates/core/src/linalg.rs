//! Small fixed-size helpers for 2x2 symmetric matrices and 3-vectors.
//!
//! Symmetric 2x2 matrices are stored as `[m11, m12, m22]`.

pub type Sym2 = [f64; 3];
pub type Vec3 = [f64; 3];
/// Jacobian of a map into R^3: row k holds (d1 u_k, d2 u_k).
pub type Jac = [[f64; 2]; 3];

pub fn sym_det(m: &Sym2) -> f64 {
    m[0] * m[2] - m[1] * m[1]
}

pub fn sym_trace(m: &Sym2) -> f64 {
    m[0] + m[2]
}

/// Eigenvalues in ascending order.
pub fn sym_eig(m: &Sym2) -> (f64, f64) {
    let half_tr = 0.5 * (m[0] + m[2]);
    let half_diff = 0.5 * (m[0] - m[2]);
    let rad = half_diff.hypot(m[1]);
    (half_tr - rad, half_tr + rad)
}

pub fn sym_inv(m: &Sym2) -> Option<Sym2> {
    let d = sym_det(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    Some([m[2] / d, -m[1] / d, m[0] / d])
}

pub fn sym_add(a: &Sym2, b: &Sym2) -> Sym2 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sym_sub(a: &Sym2, b: &Sym2) -> Sym2 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn sym_scale(a: &Sym2, s: f64) -> Sym2 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Operator (spectral) norm.
pub fn sym_norm(m: &Sym2) -> f64 {
    let (lo, hi) = sym_eig(m);
    lo.abs().max(hi.abs())
}

/// Principal square root of an SPD matrix.
pub fn sym_sqrt(m: &Sym2) -> Sym2 {
    // sqrt(M) = (M + sqrt(det) I) / sqrt(tr + 2 sqrt(det)) for 2x2 SPD
    let s = sym_det(m).max(0.0).sqrt();
    let t = (sym_trace(m) + 2.0 * s).sqrt();
    [(m[0] + s) / t, m[1] / t, (m[2] + s) / t]
}

/// Pullback metric `J^T J` of a Jacobian.
pub fn gram(j: &Jac) -> Sym2 {
    let mut g = [0.0; 3];
    for row in j {
        g[0] += row[0] * row[0];
        g[1] += row[0] * row[1];
        g[2] += row[1] * row[1];
    }
    g
}

pub fn outer2(a: &[f64; 2]) -> Sym2 {
    [a[0] * a[0], a[0] * a[1], a[1] * a[1]]
}

/// Eigenvalues of `g^{-1/2} h g^{-1/2}`, ascending.
pub fn relative_eig(h: &Sym2, g: &Sym2) -> Option<(f64, f64)> {
    let gi = sym_inv(&sym_sqrt(g))?;
    let m = congruence(&gi, h);
    Some(sym_eig(&m))
}

/// `a m a` for symmetric `a`.
pub fn congruence(a: &Sym2, m: &Sym2) -> Sym2 {
    // a*m
    let am = [
        [a[0] * m[0] + a[1] * m[1], a[0] * m[1] + a[1] * m[2]],
        [a[1] * m[0] + a[2] * m[1], a[1] * m[1] + a[2] * m[2]],
    ];
    [
        am[0][0] * a[0] + am[0][1] * a[1],
        am[0][0] * a[1] + am[0][1] * a[2],
        am[1][0] * a[1] + am[1][1] * a[2],
    ]
}

pub fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm3(a: &Vec3) -> f64 {
    dot3(a, a).sqrt()
}

pub fn cross3(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn scale3(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn column(j: &Jac, i: usize) -> Vec3 {
    [j[0][i], j[1][i], j[2][i]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_squares_back() {
        let m = [4.0, 1.0, 3.0];
        let r = sym_sqrt(&m);
        let sq = [
            r[0] * r[0] + r[1] * r[1],
            r[0] * r[1] + r[1] * r[2],
            r[1] * r[1] + r[2] * r[2],
        ];
        for k in 0..3 {
            assert!((sq[k] - m[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn eig_of_diag() {
        let (lo, hi) = sym_eig(&[4.0, 0.0, 1.0]);
        assert_eq!((lo, hi), (1.0, 4.0));
    }

    #[test]
    fn relative_eig_of_scaled_metric() {
        let (lo, hi) = relative_eig(&[1.0, 0.0, 0.5], &[2.0, 0.0, 1.0]).unwrap();
        assert!((lo - 0.5).abs() < 1e-14 && (hi - 0.5).abs() < 1e-14);
    }
}
