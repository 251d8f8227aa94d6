//! Bessel functions of the first kind, orders 0 and 1.
//!
//! Power series up to `SERIES_LIMIT`, Hankel asymptotics beyond.

use std::f64::consts::PI;

const SERIES_LIMIT: f64 = 12.0;
/// First positive zero of J0.
pub const J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

fn series(x: f64, order: u32) -> f64 {
    let q = -0.25 * x * x;
    let mut term = if order == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    for k in 1..200u32 {
        term *= q / (k as f64 * (k + order) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Hankel expansion `sqrt(2/(pi x)) (P cos chi - Q sin chi)`, truncated at
/// the smallest term.
fn asymptotic(x: f64, order: u32) -> f64 {
    let mu = 4.0 * (order * order) as f64;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a: f64 = 1.0; // a_k(nu) / x^k
    let mut prev = f64::INFINITY;
    for k in 0..40u32 {
        if a.abs() > prev {
            break;
        }
        match k % 4 {
            0 => p += a,
            1 => q += a,
            2 => p -= a,
            _ => q -= a,
        }
        prev = a.abs();
        let odd = (2 * k + 1) as f64;
        a *= (mu - odd * odd) / ((k + 1) as f64 * 8.0 * x);
    }
    let chi = x - (0.5 * order as f64 + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

pub fn j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= SERIES_LIMIT {
        series(ax, 0)
    } else {
        asymptotic(ax, 0)
    }
}

pub fn j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= SERIES_LIMIT {
        series(ax, 1)
    } else {
        asymptotic(ax, 1)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// Solves `J0(a) = y` on the first monotone branch `[0, j0_1]` by bisection.
pub fn j0_inverse(y: f64) -> Option<f64> {
    if !(0.0..=1.0).contains(&y) {
        return None;
    }
    if y == 1.0 {
        return Some(0.0);
    }
    let (mut lo, mut hi) = (0.0, J0_FIRST_ZERO);
    if (j0(lo) - y) * (j0(hi) - y) > 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if j0(mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert_eq!(j0(0.0), 1.0);
        assert_eq!(j1(0.0), 0.0);
        assert!(j0(J0_FIRST_ZERO).abs() < 1e-15);
        assert!((j1(1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!(j1(-1.0) < 0.0);
        assert!(j1(5.0) < 0.0);
    }

    #[test]
    fn branches_agree_near_switch() {
        let a = series(12.0, 0);
        let b = asymptotic(12.0, 0);
        assert!((a - b).abs() < 1e-10, "{a} {b}");
        let a = series(12.0, 1);
        let b = asymptotic(12.0, 1);
        assert!((a - b).abs() < 1e-10, "{a} {b}");
    }

    #[test]
    fn inverse_round_trips() {
        for y in [0.99, 0.9, 1.0 / 2f64.sqrt(), 0.3] {
            let a = j0_inverse(y).unwrap();
            assert!((j0(a) - y).abs() < 1e-15);
        }
        assert!(j0_inverse(1.5).is_none());
    }
}
