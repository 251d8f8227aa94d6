use std::f64::consts::{PI, TAU};

use isoembed::corrugation::bessel::{j0, j1};
use isoembed::corrugation::{amplitude, CorrugationTable, Quantity};
use proptest::prelude::*;
use std::sync::OnceLock;

fn table() -> &'static CorrugationTable {
    static T: OnceLock<CorrugationTable> = OnceLock::new();
    T.get_or_init(|| CorrugationTable::with_defaults().unwrap())
}

/// `J_n(x) = (1/pi) int_0^pi cos(n tau - x sin tau) d tau`, trapezoid rule
/// (spectrally accurate for this periodic integrand).
fn bessel_integral(n: u32, x: f64) -> f64 {
    let m = 2000;
    let h = PI / m as f64;
    let f = |tau: f64| (n as f64 * tau - x * tau.sin()).cos();
    let mut s = 0.5 * (f(0.0) + f(PI));
    for k in 1..m {
        s += f(k as f64 * h);
    }
    s * h / PI
}

fn oracle_amplitude(s: f64) -> f64 {
    let y = 1.0 / (1.0 + s * s).sqrt();
    let (mut lo, mut hi) = (0.0f64, 2.5f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if bessel_integral(0, mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn identity_residual(t: &CorrugationTable, s: f64, tt: f64) -> f64 {
    let v = t.eval_all(s, tt).unwrap();
    ((1.0 + v.dt[0]).powi(2) + v.dt[1].powi(2) - (1.0 + s * s)).abs()
}

#[test]
fn bessel_matches_integral_representation() {
    for x in [0.1, 0.7, 1.5, 2.4, 5.0, 11.9, 12.5, 20.0, 37.3] {
        assert!((j0(x) - bessel_integral(0, x)).abs() < 1e-12, "J0({x})");
        assert!((j1(x) - bessel_integral(1, x)).abs() < 1e-12, "J1({x})");
    }
}

#[test]
fn amplitude_at_half_matches_bisection_oracle() {
    let a = amplitude(0.5).unwrap();
    let oracle = oracle_amplitude(0.5);
    assert!((a - oracle).abs() < 1e-12, "{a} vs {oracle}");
    // frozen from the oracle above
    assert!((a - 0.658_724_649_274_817_7).abs() < 1e-11, "{a}");
    assert_eq!(amplitude(0.0).unwrap(), 0.0);
}

#[test]
fn identity_along_t_at_half() {
    let t = table();
    for k in 0..4096 {
        let tt = TAU * k as f64 / 4096.0;
        assert!(identity_residual(t, 0.5, tt) < 1e-10);
    }
}

#[test]
fn periodicity_and_zero_row() {
    let t = table();
    assert!(t.constants().raw_closure < 1e-10, "{:?}", t.constants());
    for k in 0..=t.s_samples() {
        let s = t.node_s(k);
        for q in Quantity::ALL {
            let a = t.eval(s, 0.0, q).unwrap();
            let b = t.eval(s, TAU, q).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }
    for tt in [0.0, 1.234, 5.0] {
        assert_eq!(t.eval(0.0, tt, Quantity::Gamma2).unwrap(), 0.0);
        assert_eq!(t.eval(0.0, tt, Quantity::Gamma1).unwrap(), 0.0);
    }
    for (s, tt) in [(0.37, 0.4), (0.91, 4.0)] {
        let a = t.eval_all(s, tt).unwrap();
        let b = t.eval_all(s, tt + TAU).unwrap();
        let c = t.eval_all(s, tt - 3.0 * TAU).unwrap();
        for (x, y) in a.gamma.iter().chain(&a.dt).zip(b.gamma.iter().chain(&b.dt)) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in a.gamma.iter().zip(&c.gamma) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn derivative_scalings_are_bounded() {
    let t = table();
    let sweep = |s: f64, q: Quantity| {
        (0..4096)
            .map(|k| t.eval(s, TAU * k as f64 / 4096.0, q).unwrap().abs())
            .fold(0.0, f64::max)
    };
    assert!(sweep(0.3, Quantity::DtGamma1) / 0.09 <= 2.0);
    let mut r1 = Vec::new();
    let mut r2 = Vec::new();
    let mut r3 = Vec::new();
    for k in 1..=10 {
        let s = 2f64.powi(-k);
        r1.push(sweep(s, Quantity::DtGamma1) / (s * s));
        r2.push(sweep(s, Quantity::DtGamma2) / s);
        r3.push(sweep(s, Quantity::DstGamma1) / s);
    }
    for r in [&r1, &r2, &r3] {
        let hi = r.iter().cloned().fold(0.0, f64::max);
        let lo = r.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(hi < 2.0 && lo > 0.1, "{r:?}");
    }
    // the small-s limits: dt G1 ~ s^2 (1/2 - cos^2 t), dt G2 ~ sqrt2 s cos t
    assert!((r1[9] - 0.5).abs() < 1e-3, "{}", r1[9]);
    assert!((r2[9] - 2f64.sqrt()).abs() < 1e-3, "{}", r2[9]);
}

#[test]
fn zero_mean_of_t_derivatives() {
    let t = table();
    let n = t.t_samples();
    for k in [1, 64, 128, 256] {
        let (mut m1, mut m2) = (0.0, 0.0);
        for m in 0..n {
            m1 += t.node(k, m, Quantity::DtGamma1);
            m2 += t.node(k, m, Quantity::DtGamma2);
        }
        assert!((m1 / n as f64).abs() < 1e-10);
        assert!((m2 / n as f64).abs() < 1e-10);
    }
}

#[test]
fn derivatives_match_finite_differences() {
    let t = table();
    let h = 1e-4;
    for (s, tt) in [(0.2, 0.3), (0.55, 2.0), (0.8, 4.4)] {
        let v = t.eval_all(s, tt).unwrap();
        let p = t.eval_all(s + h, tt).unwrap();
        let m = t.eval_all(s - h, tt).unwrap();
        for i in 0..2 {
            assert!(((p.gamma[i] - m.gamma[i]) / (2.0 * h) - v.ds[i]).abs() < 1e-6);
            assert!(((p.dt[i] - m.dt[i]) / (2.0 * h) - v.dst[i]).abs() < 1e-6);
        }
        let p = t.eval_all(s, tt + h).unwrap();
        let m = t.eval_all(s, tt - h).unwrap();
        for i in 0..2 {
            assert!(((p.gamma[i] - m.gamma[i]) / (2.0 * h) - v.dt[i]).abs() < 1e-6);
            assert!(((p.dt[i] - m.dt[i]) / (2.0 * h) - v.dtt[i]).abs() < 1e-6);
        }
    }
}

#[test]
fn dump_has_header_and_rows() {
    let mut buf = Vec::new();
    isoembed::corrugation::dump_profiles(table(), &[0.0, 0.5], 16, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 33);
    assert!(lines[0].starts_with("s,t,gamma1,gamma2"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn interpolated_identity_holds(s in 0.0..=1.0f64, tt in 0.0..TAU) {
        prop_assert!(identity_residual(table(), s, tt) < 1e-8);
    }
}
